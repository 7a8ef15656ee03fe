"""Limited-feedback frequency-selective hybrid precoding for wideband MIMO-OFDM."""

from .channel import (
    ClusterSet,
    WidebandChannel,
    array_response_ula,
    delay_tap,
    delay_taps,
    generate_channel,
    load_channel,
    raised_cosine,
    sample_cluster_set,
    save_channel,
    to_subcarriers,
    truncated_svd,
)
from .codebooks import (
    Codebook,
    beamsteering_codebook,
    load_codebook,
    rf_project,
    save_codebook,
)
from .config import ChannelStats, SystemConfig
from .grassmann import (
    avg_chordal,
    chordal_sq,
    complement_projector,
    generalized_chordal_sq,
    karcher_centroid,
)
from .greedy import (
    GreedyResult,
    approx_gs_hp,
    dg_hp,
    exhaustive_subset_search,
    feedback_bits,
    gs_hp,
)
from .precoding import (
    EffectiveSvd,
    HybridPrecoder,
    PowerConstraint,
    WaterfillResult,
    effective_svd,
    equivalent_baseband_split,
    exhaustive_rf_search,
    hybrid_mi_for_rf,
    mutual_information,
    optimal_baseband,
    orthonormal_factor,
    unconstrained_mi,
    waterfill,
)
from .sweep import (
    ExperimentConfig,
    SweepResult,
    cluster_sweep,
    load_experiment_config,
    rf_chain_sweep,
    run_sweep,
    write_csv,
)
from .training import (
    BasebandCodebookTrainer,
    RFCodebookTrainer,
    TrainingSet,
    build_training_set,
    codebook_distortion,
    init_codebook,
    partition,
    recenter,
)

__version__ = "0.1.0"
