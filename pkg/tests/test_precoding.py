import numpy as np
import pytest

from fshybrid.channel import WidebandChannel, truncated_svd
from fshybrid.exceptions import DegenerateCodewordError
from fshybrid.precoding import (
    PowerConstraint,
    effective_svd,
    equivalent_baseband_split,
    exhaustive_rf_search,
    hybrid_mi_for_rf,
    inv_sqrt_gram,
    mutual_information,
    optimal_baseband,
    orthonormal_factor,
    unconstrained_mi,
)

from conftest import gaussian_channel, random_rf, random_semi_unitary

MODES = (PowerConstraint.TOTAL, PowerConstraint.PER_SUBCARRIER, PowerConstraint.UNITARY)


def _slogdet_mi(channel, composite, rho, n_s):
    """Independent oracle: receive-side log-det via slogdet."""
    total = 0.0
    for k in range(channel.k_sub):
        b = channel.per_subcarrier[k] @ composite[k]
        m = np.eye(channel.n_ms) + (rho / n_s) * b @ b.conj().T
        total += np.linalg.slogdet(m)[1] / np.log(2.0)
    return total / channel.k_sub


class TestOrthonormalFactor:
    def test_already_semi_unitary(self, rng):
        q = random_semi_unitary(rng, 8, 3)
        np.testing.assert_allclose(orthonormal_factor(q), q, atol=1e-10)

    def test_scaling_removed(self):
        f = 2.0 * np.eye(5)[:, :2]
        np.testing.assert_allclose(orthonormal_factor(f), np.eye(5)[:, :2], atol=1e-12)

    def test_projector_identity(self, rng):
        f = rng.normal(size=(8, 3)) + 1j * rng.normal(size=(8, 3))
        q = orthonormal_factor(f)
        np.testing.assert_allclose(q.conj().T @ q, np.eye(3), atol=1e-10)
        assert np.linalg.norm(q @ q.conj().T @ f - f) <= 1e-9

    def test_equals_gram_inverse_sqrt_route(self, rng):
        f = rng.normal(size=(6, 3)) + 1j * rng.normal(size=(6, 3))
        np.testing.assert_allclose(orthonormal_factor(f), f @ inv_sqrt_gram(f), atol=1e-10)

    def test_rank_deficient(self):
        with pytest.raises(DegenerateCodewordError):
            orthonormal_factor(np.ones((6, 2), dtype=complex))


class TestEffectiveSvd:
    def test_aligned_rf_keeps_top_singular_values(self, rng):
        h = rng.normal(size=(6, 8)) + 1j * rng.normal(size=(6, 8))
        svd = truncated_svd(h, 6)
        r = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        f_rf = svd[2][:, :3] @ r  # spans the top right-singular space
        eff = effective_svd(svd, f_rf)
        np.testing.assert_allclose(eff.sigma_bar, svd[1][:3], atol=1e-8)

    def test_orthogonal_rf_kills_gains(self, rng):
        h = np.zeros((4, 8), dtype=complex)
        h[:, :4] = np.diag([3.0, 2.0, 1.0, 0.5])
        svd = truncated_svd(h, 4)
        f_rf = np.eye(8)[:, 5:7]  # orthogonal to every active right singular vector
        eff = effective_svd(svd, f_rf)
        np.testing.assert_allclose(eff.sigma_bar, np.zeros(2), atol=1e-10)

    def test_matches_dense_svd_oracle(self, rng):
        h = rng.normal(size=(5, 8)) + 1j * rng.normal(size=(5, 8))
        svd = truncated_svd(h, 5)
        f_rf = random_rf(rng, 8, 3)
        eff = effective_svd(svd, f_rf)
        dense = (np.diag(svd[1]) @ svd[2].conj().T) @ (
            f_rf @ inv_sqrt_gram(f_rf)
        )
        np.testing.assert_allclose(
            eff.sigma_bar, np.linalg.svd(dense, compute_uv=False), atol=1e-9
        )
        recon = eff.u_bar @ np.diag(eff.sigma_bar) @ eff.v_bar.conj().T
        np.testing.assert_allclose(recon, dense, atol=1e-8)


class TestOptimalBaseband:
    def test_unitary_composite_semi_unitary(self, rng):
        for _ in range(10):
            ch = gaussian_channel(rng, n_ms=6, n_bs=10, k_sub=4)
            f_rf = random_rf(rng, 10, 3)
            p = optimal_baseband(f_rf, ch, 1.0, PowerConstraint.UNITARY, 2)
            comp = p.composite()
            for k in range(ch.k_sub):
                np.testing.assert_allclose(
                    comp[k].conj().T @ comp[k], np.eye(2), atol=1e-8
                )

    def test_aligned_full_rank_matches_svd_precoding(self, rng):
        ch = gaussian_channel(rng, n_ms=4, n_bs=8, k_sub=1, n_taps=1)
        v = ch.right_bases(3)[0]
        p = optimal_baseband(v, ch, 1.0, PowerConstraint.UNITARY, 3)
        achieved = mutual_information(ch, p, 1.0)
        reference = unconstrained_mi(ch, 1.0, 3, PowerConstraint.UNITARY)
        assert achieved == pytest.approx(reference, abs=1e-8)

    def test_total_dominates_unitary(self, rng):
        for _ in range(10):
            ch = gaussian_channel(rng, n_ms=6, n_bs=12, k_sub=4)
            f_rf = random_rf(rng, 12, 3)
            total = mutual_information(
                ch, optimal_baseband(f_rf, ch, 0.5, PowerConstraint.TOTAL, 2), 0.5
            )
            unit = mutual_information(
                ch, optimal_baseband(f_rf, ch, 0.5, PowerConstraint.UNITARY, 2), 0.5
            )
            assert total >= unit - 1e-9

    def test_total_power_budget(self, rng):
        ch = gaussian_channel(rng, n_ms=6, n_bs=12, k_sub=4)
        f_rf = random_rf(rng, 12, 3)
        p = optimal_baseband(f_rf, ch, 1.0, PowerConstraint.TOTAL, 2)
        comp = p.composite()
        assert np.sum(np.abs(comp) ** 2) == pytest.approx(4 * 2, abs=1e-8)

    def test_structure_semi_unitary_times_diagonal(self, rng):
        # composite factors as (semi-unitary) x (water-filling diagonal)
        ch = gaussian_channel(rng, n_ms=6, n_bs=12, k_sub=4)
        f_rf = random_rf(rng, 12, 3)
        p = optimal_baseband(f_rf, ch, 1.0, PowerConstraint.TOTAL, 2)
        comp = p.composite()
        for k in range(ch.k_sub):
            lam = np.sqrt(np.sum(np.abs(comp[k]) ** 2, axis=0))
            act = lam > 1e-12
            f_u = comp[k][:, act] / lam[act]
            np.testing.assert_allclose(
                f_u.conj().T @ f_u, np.eye(int(act.sum())), atol=1e-8
            )


class TestMutualInformation:
    def test_zero_channel(self):
        ch = WidebandChannel(np.zeros((3, 4, 6)))
        p = optimal_baseband(random_rf(np.random.default_rng(0), 6, 2),
                             ch, 1.0, PowerConstraint.UNITARY, 2)
        assert mutual_information(ch, p, 1.0) == pytest.approx(0.0, abs=1e-12)

    def test_scalar_system_one_bit(self):
        from fshybrid.precoding import HybridPrecoder

        ch = WidebandChannel(np.ones((1, 1, 1)))
        p = HybridPrecoder(np.ones((1, 1), dtype=complex), np.ones((1, 1, 1), dtype=complex))
        assert mutual_information(ch, p, 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_matches_slogdet_oracle(self, rng):
        ch = gaussian_channel(rng, n_ms=4, n_bs=4, k_sub=6)
        f_rf = random_rf(rng, 4, 2)
        p = optimal_baseband(f_rf, ch, 2.0, PowerConstraint.TOTAL, 2)
        oracle = _slogdet_mi(ch, p.composite(), 2.0, 2)
        assert mutual_information(ch, p, 2.0) == pytest.approx(oracle, abs=1e-10)

    def test_non_negative(self, rng):
        for _ in range(5):
            ch = gaussian_channel(rng, n_ms=3, n_bs=6, k_sub=2)
            p = optimal_baseband(random_rf(rng, 6, 2), ch, 0.01,
                                 PowerConstraint.UNITARY, 2)
            assert mutual_information(ch, p, 0.01) >= 0.0


class TestHybridMiForRf:
    def test_aligned_unitary_closed_form(self, rng):
        ch = gaussian_channel(rng, n_ms=5, n_bs=8, k_sub=3)
        v = ch.right_bases(2)
        # per-subcarrier alignment is impossible with one flat RF matrix, so
        # check the K = 1 case where it is exact
        ch1 = WidebandChannel(ch.per_subcarrier[:1])
        f_rf = v[0]
        mi = hybrid_mi_for_rf(f_rf, ch1, 1.5, PowerConstraint.UNITARY, 2)
        s = ch1.singular_values(2)[0]
        expected = np.sum(np.log2(1 + 1.5 / 2 * s**2))
        assert mi == pytest.approx(expected, abs=1e-9)

    @pytest.mark.parametrize("mode", MODES)
    def test_closed_form_equals_explicit(self, mode, rng):
        for _ in range(10):
            ch = gaussian_channel(rng, n_ms=6, n_bs=10, k_sub=4)
            f_rf = random_rf(rng, 10, 3)
            rho = rng.uniform(0.1, 10.0)
            closed = hybrid_mi_for_rf(f_rf, ch, rho, mode, 2)
            explicit = mutual_information(
                ch, optimal_baseband(f_rf, ch, rho, mode, 2), rho
            )
            assert closed == pytest.approx(explicit, abs=1e-9)

    def test_invariant_to_column_scaling(self, rng):
        ch = gaussian_channel(rng, n_ms=6, n_bs=10, k_sub=4)
        f_rf = random_rf(rng, 10, 3)
        a = hybrid_mi_for_rf(f_rf, ch, 1.0, PowerConstraint.UNITARY, 2)
        b = hybrid_mi_for_rf(3.0 * f_rf, ch, 1.0, PowerConstraint.UNITARY, 2)
        assert a == pytest.approx(b, abs=1e-9)

    def test_invariant_to_right_multiplication(self, rng):
        # depends on the RF matrix only through its column space
        ch = gaussian_channel(rng, n_ms=6, n_bs=10, k_sub=4)
        f_rf = random_rf(rng, 10, 3)
        m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        a = hybrid_mi_for_rf(f_rf, ch, 1.0, PowerConstraint.UNITARY, 3)
        b = hybrid_mi_for_rf(f_rf @ m, ch, 1.0, PowerConstraint.UNITARY, 3)
        assert a == pytest.approx(b, abs=1e-9)


class TestExhaustiveSearch:
    def test_single_codeword(self, rng):
        ch = gaussian_channel(rng)
        idx, _ = exhaustive_rf_search(
            [random_rf(rng, 16, 2)], ch, 1.0, PowerConstraint.UNITARY, 2
        )
        assert idx == 0

    def test_picks_aligned_codeword(self, rng):
        ch = gaussian_channel(rng, n_ms=6, n_bs=8, k_sub=1, n_taps=1)
        aligned = ch.right_bases(2)[0]
        junk = [random_rf(rng, 8, 2) for _ in range(4)]
        idx, _ = exhaustive_rf_search(
            junk[:2] + [aligned] + junk[2:], ch, 1.0, PowerConstraint.UNITARY, 2
        )
        assert idx == 2

    def test_matches_naive_loop(self, rng):
        ch = gaussian_channel(rng, n_ms=4, n_bs=8, k_sub=3)
        cb = [random_rf(rng, 8, 2) for _ in range(8)]
        idx, mi = exhaustive_rf_search(cb, ch, 1.0, PowerConstraint.TOTAL, 2)
        scores = [hybrid_mi_for_rf(f, ch, 1.0, PowerConstraint.TOTAL, 2) for f in cb]
        assert idx == int(np.argmax(scores))
        assert mi == pytest.approx(max(scores), abs=1e-12)

    def test_rejects_empty(self, rng):
        with pytest.raises(ValueError):
            exhaustive_rf_search([], gaussian_channel(rng), 1.0,
                                 PowerConstraint.UNITARY, 2)

    def test_tie_breaks_to_lowest_index(self, rng):
        ch = gaussian_channel(rng, n_ms=4, n_bs=8, k_sub=2)
        f = random_rf(rng, 8, 2)
        idx, _ = exhaustive_rf_search([f, f.copy(), f.copy()], ch, 1.0,
                                      PowerConstraint.UNITARY, 2)
        assert idx == 0


class TestUnconstrainedMi:
    def test_zero_channel(self):
        ch = WidebandChannel(np.zeros((2, 3, 4)))
        assert unconstrained_mi(ch, 1.0, 2, PowerConstraint.UNITARY) == pytest.approx(0.0)

    def test_known_scalar_value(self):
        ch = WidebandChannel(np.array([[[2.0]]], dtype=complex))
        mi = unconstrained_mi(ch, 1.0, 1, PowerConstraint.UNITARY)
        assert mi == pytest.approx(np.log2(5.0), abs=1e-12)

    @pytest.mark.parametrize("mode", MODES)
    def test_dominates_every_hybrid(self, mode, rng):
        for _ in range(10):
            ch = gaussian_channel(rng, n_ms=6, n_bs=10, k_sub=4)
            f_rf = random_rf(rng, 10, 3)
            hybrid = hybrid_mi_for_rf(f_rf, ch, 1.0, mode, 2)
            assert unconstrained_mi(ch, 1.0, 2, mode) >= hybrid - 1e-9


class TestEquivalentBaseband:
    def test_semi_unitary_rf_is_identity_map(self, rng):
        q = random_semi_unitary(rng, 8, 3)
        f_bb = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
        np.testing.assert_allclose(equivalent_baseband_split(q, f_bb), f_bb, atol=1e-10)

    def test_unitary_mode_equivalent_is_semi_unitary(self, rng):
        ch = gaussian_channel(rng, n_ms=6, n_bs=10, k_sub=4)
        f_rf = random_rf(rng, 10, 3)
        p = optimal_baseband(f_rf, ch, 1.0, PowerConstraint.UNITARY, 2)
        g = equivalent_baseband_split(f_rf, p.f_bb)
        for k in range(ch.k_sub):
            np.testing.assert_allclose(g[k].conj().T @ g[k], np.eye(2), atol=1e-8)
        np.testing.assert_allclose(g, p.g, atol=1e-8)

    def test_norm_preservation_and_round_trip(self, rng):
        f_rf = rng.normal(size=(8, 3)) + 1j * rng.normal(size=(8, 3))
        f_bb = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
        g = equivalent_baseband_split(f_rf, f_bb)
        assert np.linalg.norm(g) == pytest.approx(
            np.linalg.norm(f_rf @ f_bb), abs=1e-10
        )
        np.testing.assert_allclose(inv_sqrt_gram(f_rf) @ g, f_bb, atol=1e-10)


class TestInvariants:
    def test_constraint_nesting(self, rng):
        for _ in range(20):
            ch = gaussian_channel(rng, n_ms=6, n_bs=10, k_sub=4)
            f_rf = random_rf(rng, 10, 3)
            rho = rng.uniform(0.1, 10.0)
            total = hybrid_mi_for_rf(f_rf, ch, rho, PowerConstraint.TOTAL, 2)
            per = hybrid_mi_for_rf(f_rf, ch, rho, PowerConstraint.PER_SUBCARRIER, 2)
            unit = hybrid_mi_for_rf(f_rf, ch, rho, PowerConstraint.UNITARY, 2)
            assert total >= per - 1e-9
            assert per >= unit - 1e-9

    def test_right_unitary_rotation_of_equivalent_precoder(self, rng):
        # with n_s = n_rf and unitary mode, G -> G Q leaves the MI unchanged
        from fshybrid.precoding import HybridPrecoder, inv_sqrt_gram

        ch = gaussian_channel(rng, n_ms=6, n_bs=10, k_sub=4)
        f_rf = random_rf(rng, 10, 3)
        p = optimal_baseband(f_rf, ch, 1.0, PowerConstraint.UNITARY, 3)
        q = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))[0]
        rotated = HybridPrecoder(f_rf, inv_sqrt_gram(f_rf) @ (p.g @ q))
        a = mutual_information(ch, p, 1.0)
        b = mutual_information(ch, rotated, 1.0)
        assert a == pytest.approx(b, abs=1e-9)
