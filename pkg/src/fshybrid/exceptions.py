"""Exception and warning types shared across the package."""


class DegenerateCodewordError(ValueError):
    """An RF precoding matrix is (numerically) rank deficient."""


class EmptyCellError(ValueError):
    """A Voronoi cell holds no training members; callers reseed the centroid."""


class InfeasibleCodebookError(ValueError):
    """The vector codebook cannot supply enough rank-compatible beams."""


class CodebookFormatError(ValueError):
    """A codebook file has an unknown version or a malformed payload."""


class ConfigError(ValueError):
    """An experiment configuration is invalid or references missing files."""


class DegenerateChannelWarning(UserWarning):
    """All subcarrier gains are zero; power loading cannot meet its budget."""
