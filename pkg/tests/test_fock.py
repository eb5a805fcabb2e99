import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from plasmonhom.fock import (BeamsplitterParams, LossParams, OverlapParam, TwoModeFockState,
                             apply_loss, fock_unitary_oracle, hom_output_state)

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


def bs_from(R):
    return BeamsplitterParams(R=R, T=1.0 - R)


class TestParams:
    def test_rejects_unnormalized_splitter(self):
        with pytest.raises(ValueError):
            BeamsplitterParams(0.5, 0.6)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            BeamsplitterParams(-0.1, 1.1)
        with pytest.raises(ValueError):
            LossParams(eta_out_1=1.2)
        with pytest.raises(ValueError):
            OverlapParam(1.01)

    def test_state_rejects_large_occupation(self):
        with pytest.raises(ValueError):
            TwoModeFockState({(3, 2): 1.0}, max_total=4)


class TestHomOutputState:
    def test_balanced_bunching(self):
        s = hom_output_state(BeamsplitterParams.balanced(), 1.0)
        assert s.amplitude(2, 0) == pytest.approx(1j / math.sqrt(2), abs=1e-15)
        assert s.amplitude(0, 2) == pytest.approx(1j / math.sqrt(2), abs=1e-15)
        assert s.probability(1, 1) == 0.0

    def test_identity_splitter(self):
        s = hom_output_state(BeamsplitterParams(0.0, 1.0), 1.0)
        assert s.amplitude(1, 1) == 1.0
        assert s.probability(2, 0) == 0.0 and s.probability(0, 2) == 0.0

    def test_unbalanced_against_hand_expansion(self):
        # (i sqrt(.3) b1 + sqrt(.7) b2)(sqrt(.7) b1 + i sqrt(.3) b2):
        # b1^2 coeff i sqrt(.21) -> amplitude i sqrt(.42); b1 b2 coeff .7 - .3
        s = hom_output_state(BeamsplitterParams(0.3, 0.7), 1.0)
        assert s.probability(2, 0) == pytest.approx(0.42, abs=1e-12)
        assert s.probability(0, 2) == pytest.approx(0.42, abs=1e-12)
        assert s.probability(1, 1) == pytest.approx(0.16, abs=1e-12)

    def test_distinguishable(self):
        s = hom_output_state(BeamsplitterParams.balanced(), 0.0)
        assert s.probability(2, 0) == pytest.approx(0.25, abs=1e-15)
        assert s.probability(0, 2) == pytest.approx(0.25, abs=1e-15)
        assert s.probability(1, 1) == pytest.approx(0.5, abs=1e-15)

    def test_rejects_bad_overlap(self):
        with pytest.raises(ValueError):
            hom_output_state(BeamsplitterParams.balanced(), 1.5)
        with pytest.raises(ValueError):
            hom_output_state(BeamsplitterParams.balanced(), -0.1)

    @given(R=unit, mu=unit)
    def test_probability_completeness(self, R, mu):
        s = hom_output_state(bs_from(R), mu)
        assert s.norm() == pytest.approx(1.0, abs=1e-12)
        m2 = mu * mu
        assert s.probability(2, 0) == pytest.approx(R * (1 - R) * (1 + m2), abs=1e-12)

    def test_oracle_equivalence_random_splitters(self):
        rng = np.random.default_rng(7)
        for R in rng.uniform(0, 1, 100):
            bs = bs_from(float(R))
            a = hom_output_state(bs, 1.0)
            b = fock_unitary_oracle(1, 1, bs)
            for occ in {(2, 0), (0, 2), (1, 1)}:
                assert abs(a.amplitude(*occ) - b.amplitude(*occ)) < 1e-12

    def test_coincidence_minimized_at_balance(self):
        grid = np.linspace(0, 1, 1001)
        p11 = [hom_output_state(bs_from(R), 1.0).probability(1, 1) for R in grid]
        assert grid[int(np.argmin(p11))] == pytest.approx(0.5)
        assert min(p11) == 0.0


class TestOracle:
    def test_mirror(self):
        s = fock_unitary_oracle(1, 0, BeamsplitterParams(1.0, 0.0))
        assert s.amplitudes == {(1, 0): 1j}

    def test_matches_bunched_state(self):
        s = fock_unitary_oracle(1, 1, BeamsplitterParams.balanced())
        assert s.amplitude(2, 0) == pytest.approx(1j / math.sqrt(2), abs=1e-12)
        assert s.amplitude(0, 2) == pytest.approx(1j / math.sqrt(2), abs=1e-12)
        assert abs(s.amplitude(1, 1)) < 1e-12

    def test_two_photons_one_port(self):
        # (i b1 + b2)^2 / 2 / sqrt(2!) -> binomial 1/4, 1/2, 1/4
        s = fock_unitary_oracle(2, 0, BeamsplitterParams.balanced())
        assert s.probability(2, 0) == pytest.approx(0.25, abs=1e-12)
        assert s.probability(0, 2) == pytest.approx(0.25, abs=1e-12)
        assert s.probability(1, 1) == pytest.approx(0.5, abs=1e-12)

    def test_overflow(self):
        with pytest.raises(OverflowError):
            fock_unitary_oracle(3, 2, BeamsplitterParams.balanced(), max_total=4)

    @given(R=unit, n_A=st.integers(0, 4), n_B=st.integers(0, 4))
    def test_unitarity(self, R, n_A, n_B):
        if n_A + n_B > 4:
            return
        s = fock_unitary_oracle(n_A, n_B, bs_from(R))
        assert s.norm() == pytest.approx(1.0, abs=1e-12)
        assert all(p + q == n_A + n_B for p, q in s.amplitudes)


class TestLoss:
    def test_identity(self):
        s = hom_output_state(BeamsplitterParams(0.3, 0.7), 0.6)
        out = apply_loss(s, LossParams())
        assert out.probabilities() == pytest.approx(s.probabilities(), abs=1e-15)
        assert out.amplitude(2, 0) == pytest.approx(s.amplitude(2, 0))

    @pytest.mark.parametrize("eta", [1.0, 0.7, 0.3, 0.01, 0.0])
    def test_no_coincidences_after_bunching(self, eta):
        s = hom_output_state(BeamsplitterParams.balanced(), 1.0)
        out = apply_loss(s, LossParams(eta_out_1=eta, eta_out_2=eta))
        assert out.probability(1, 1) == 0.0
        assert out.norm() == pytest.approx(1.0, abs=1e-12)

    def test_single_arm_binomial(self):
        out = apply_loss(TwoModeFockState({(1, 1): 1.0}), LossParams(eta_out_1=0.5))
        assert out.probability(1, 1) == pytest.approx(0.5)
        assert out.probability(0, 1) == pytest.approx(0.5)
        assert out.norm() == pytest.approx(1.0, abs=1e-12)

    def test_unequal_input_loss_rejected(self):
        s = hom_output_state(BeamsplitterParams.balanced(), 1.0)
        with pytest.raises(ValueError):
            apply_loss(s, LossParams(eta_in_A=0.5, eta_in_B=0.9))

    @settings(max_examples=200)
    @given(R=unit, mu=unit, e1=st.floats(0.01, 1.0), e2=st.floats(0.01, 1.0),
           ein=st.floats(0.01, 1.0))
    def test_loss_commutation(self, R, mu, e1, e2, ein):
        s = hom_output_state(bs_from(R), mu)
        out = apply_loss(s, LossParams(ein, ein, e1, e2))
        assert out.norm() == pytest.approx(1.0, abs=1e-12)
        cond = out.sector(2)
        before = s.sector(2)
        # every two-photon outcome is scaled by the same survival factor
        # only when the factor is symmetric; compare against the exact map
        for (n1, n2), p in before.items():
            expected = p * (ein * e1) ** n1 * (ein * e2) ** n2
            assert cond.get((n1, n2), 0.0) == pytest.approx(expected, rel=1e-12, abs=1e-300)

    @given(R=unit, mu=unit, eta=st.floats(0.01, 1.0))
    def test_symmetric_loss_keeps_conditional_distribution(self, R, mu, eta):
        s = hom_output_state(bs_from(R), mu)
        out = apply_loss(s, LossParams(eta_out_1=eta, eta_out_2=eta))
        a, b = s.conditional(2), out.conditional(2)
        for k in a:
            assert b.get(k, 0.0) == pytest.approx(a[k], rel=1e-12, abs=1e-15)
