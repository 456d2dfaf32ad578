import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from bellsim.quantum import (
    AnalyzerAngle,
    OutcomeLabel,
    PhotonPairState,
    UndefinedConditionalError,
    Wing,
    analyzer_projector,
    as_angle,
    axis_ket,
    bell_phi_plus,
    born_conditional,
    born_joint,
    born_marginal,
    conditional_remote_state,
    correlation_E,
    maximally_mixed_pair,
    product_polarized,
    reduced_state,
)

V, H = OutcomeLabel.V, OutcomeLabel.H


def cos2(degrees: float) -> float:
    return math.cos(math.radians(degrees)) ** 2


def random_state(seed: int) -> PhotonPairState:
    """Valid random density operator: G G+ normalized is exactly Hermitian."""
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    m = g @ g.conj().T
    return PhotonPairState(m / m.trace())


angle_floats = st.floats(min_value=-720.0, max_value=720.0, allow_nan=False)


class TestAnalyzerAngle:
    def test_normalizes_to_half_turn(self):
        assert AnalyzerAngle(-22.5).degrees == 157.5
        assert AnalyzerAngle(180.0).degrees == 0.0
        assert AnalyzerAngle(365.0).degrees == 5.0

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            AnalyzerAngle(float("nan"))

    @given(angle_floats)
    def test_range_invariant(self, degrees):
        assert 0.0 <= AnalyzerAngle(degrees).degrees < 180.0

    def test_separation_folds_to_quarter_turn(self):
        assert as_angle(10).separation(100) == 90.0
        assert as_angle(170).separation(10) == 20.0


class TestStateValidation:
    def test_rejects_non_hermitian(self):
        m = np.zeros((4, 4), dtype=complex)
        m[0, 1] = 1.0
        m[0, 0] = 1.0
        with pytest.raises(ValueError, match="Hermitian"):
            PhotonPairState(m)

    def test_rejects_bad_trace(self):
        with pytest.raises(ValueError, match="trace"):
            PhotonPairState(np.eye(4, dtype=complex))

    def test_rejects_negative_eigenvalue(self):
        m = np.diag([1.5, -0.5, 0.0, 0.0]).astype(complex)
        with pytest.raises(ValueError, match="eigenvalue"):
            PhotonPairState(m)

    def test_matrix_is_immutable(self):
        state = bell_phi_plus()
        with pytest.raises(ValueError):
            state.matrix[0, 0] = 2.0


class TestBellState:
    def test_corner_entry(self):
        # <HH| rho |HH> for the maximally entangled pair
        assert bell_phi_plus().matrix[0, 0].real == pytest.approx(0.5, abs=1e-12)

    def test_trace_one(self):
        assert bell_phi_plus().matrix.trace().real == pytest.approx(1.0, abs=1e-12)

    def test_pure(self):
        assert bell_phi_plus().purity() == pytest.approx(1.0, abs=1e-12)


class TestProjectors:
    def test_vertical_at_reference(self):
        p = analyzer_projector(0.0, V).matrix
        assert_allclose(p, np.diag([0.0, 1.0]), atol=1e-15)

    @pytest.mark.parametrize("degrees", [0.0, 13.7, 45.0, 90.0, 120.0, 179.0])
    def test_completeness_and_idempotence(self, degrees):
        pv = analyzer_projector(degrees, V).matrix
        ph = analyzer_projector(degrees, H).matrix
        assert_allclose(pv + ph, np.eye(2), atol=1e-12)
        assert_allclose(pv @ pv, pv, atol=1e-12)
        assert_allclose(ph @ ph, ph, atol=1e-12)

    @given(angle_floats)
    @settings(max_examples=200)
    def test_projector_laws_everywhere(self, degrees):
        pv = analyzer_projector(degrees, V).matrix
        ph = analyzer_projector(degrees, H).matrix
        assert np.abs(pv + ph - np.eye(2)).max() < 1e-12
        assert np.abs(pv @ pv - pv).max() < 1e-12

    def test_diagonal_projector_entries_at_45(self):
        # direct trig: cos 45 = sin 45 = sqrt(2)/2, every entry magnitude 1/2
        p = analyzer_projector(45.0, V).matrix
        assert_allclose(np.abs(p), 0.5, atol=1e-12)


class TestBornJoint:
    def test_perfect_correlation_aligned(self):
        j = born_joint(bell_phi_plus(), 33.0, 33.0)
        assert j.vv == pytest.approx(0.5, abs=1e-12)
        assert j.vh == pytest.approx(0.0, abs=1e-12)
        assert j.hv == pytest.approx(0.0, abs=1e-12)
        assert j.hh == pytest.approx(0.5, abs=1e-12)

    def test_half_cos_squared(self):
        # oracle: (1/2) cos^2(22.5 deg) = 0.4267766952966369
        j = born_joint(bell_phi_plus(), 0.0, 22.5)
        assert j.vv == pytest.approx(0.5 * cos2(22.5), abs=1e-12)
        assert j.vv == pytest.approx(0.4267767, abs=1e-7)

    @given(st.integers(0, 10_000), angle_floats, angle_floats)
    @settings(max_examples=150, deadline=None)
    def test_normalization_any_state(self, seed, a, b):
        j = born_joint(random_state(seed), a, b)
        entries = (j.vv, j.vh, j.hv, j.hh)
        assert all(0.0 <= e <= 1.0 for e in entries)
        assert sum(entries) == pytest.approx(1.0, abs=1e-12)

    @given(st.integers(0, 10_000), angle_floats, angle_floats, angle_floats)
    @settings(max_examples=150, deadline=None)
    def test_no_signalling_exact(self, seed, a, b1, b2):
        state = random_state(seed)
        m1 = born_joint(state, a, b1).marginal(Wing.A)
        m2 = born_joint(state, a, b2).marginal(Wing.A)
        assert m1.v == pytest.approx(m2.v, abs=1e-12)
        assert m1.h == pytest.approx(m2.h, abs=1e-12)

    def test_deterministic_limit_product_eigenstate(self):
        j = born_joint(product_polarized(30.0, 75.0), 30.0, 75.0)
        assert j.vv == pytest.approx(1.0, abs=1e-12)
        assert j.vh == pytest.approx(0.0, abs=1e-12)
        assert j.hv == pytest.approx(0.0, abs=1e-12)
        assert j.hh == pytest.approx(0.0, abs=1e-12)

    def test_rejects_malformed_state(self):
        with pytest.raises(ValueError):
            born_joint(np.eye(4, dtype=complex), 0.0, 0.0)


class TestBornMarginal:
    @pytest.mark.parametrize("angle", [0.0, 17.0, 37.0, 90.0, 144.5])
    def test_entangled_marginal_is_half(self, angle):
        pair = born_marginal(bell_phi_plus(), Wing.A, angle)
        assert pair.v == pytest.approx(0.5, abs=1e-12)
        assert pair.h == pytest.approx(0.5, abs=1e-12)

    def test_product_state_eigenvalue(self):
        pair = born_marginal(product_polarized(0.0, 0.0), Wing.A, 0.0)
        assert pair.v == pytest.approx(1.0, abs=1e-12)
        assert pair.h == pytest.approx(0.0, abs=1e-12)

    def test_wing_b_rotation_invariant(self):
        pair = born_marginal(bell_phi_plus(), Wing.B, 37.0)
        assert pair == pytest.approx((0.5, 0.5), abs=1e-12)

    @given(st.integers(0, 10_000), angle_floats)
    @settings(max_examples=100, deadline=None)
    def test_matches_joint_marginal(self, seed, a):
        state = random_state(seed)
        direct = born_marginal(state, Wing.A, a)
        via_joint = born_joint(state, a, 71.0).marginal(Wing.A)
        assert direct.v == pytest.approx(via_joint.v, abs=1e-12)


class TestBornConditional:
    @pytest.mark.parametrize("delta, expected", [(0.0, 1.0), (22.5, cos2(22.5)),
                                                 (45.0, 0.5), (60.0, 0.25), (90.0, 0.0)])
    def test_cos_squared_law(self, delta, expected):
        pair = born_conditional(bell_phi_plus(), 10.0, 10.0 + delta, given=(Wing.B, V))
        assert pair.v == pytest.approx(expected, abs=1e-12)

    def test_counterfactual_sixty_degrees(self):
        pair_v = born_conditional(bell_phi_plus(), 0.0, 60.0, given=(Wing.B, V))
        pair_h = born_conditional(bell_phi_plus(), 0.0, 60.0, given=(Wing.B, H))
        assert pair_v.v == pytest.approx(0.25, abs=1e-12)
        assert pair_h.v == pytest.approx(0.75, abs=1e-12)

    def test_zero_probability_conditioning_rejected(self):
        with pytest.raises(UndefinedConditionalError):
            born_conditional(product_polarized(0.0, 0.0), 0.0, 0.0, given=(Wing.B, H))

    @given(st.integers(0, 10_000), angle_floats, angle_floats)
    @settings(max_examples=150, deadline=None)
    def test_chain_rule(self, seed, a, b):
        state = random_state(seed)
        joint = born_joint(state, a, b)
        marg_b = born_marginal(state, Wing.B, b)
        for label in (V, H):
            if marg_b.for_label(label) < 1e-9:
                continue
            cond = born_conditional(state, a, b, given=(Wing.B, label))
            assert cond.v * marg_b.for_label(label) == pytest.approx(
                joint.prob(V, label), abs=1e-12
            )


class TestCorrelation:
    def test_aligned(self):
        assert correlation_E(bell_phi_plus(), 18.0, 18.0) == pytest.approx(1.0, abs=1e-12)

    def test_cos_double_angle(self):
        # oracle: E = cos 2(a-b) from the joint table itself
        assert correlation_E(bell_phi_plus(), 0.0, 22.5) == pytest.approx(
            math.cos(math.radians(45.0)), abs=1e-12
        )

    def test_orthogonal(self):
        assert correlation_E(bell_phi_plus(), 0.0, 90.0) == pytest.approx(-1.0, abs=1e-12)

    @given(angle_floats, angle_floats, st.floats(-180.0, 180.0, allow_nan=False))
    @settings(max_examples=150, deadline=None)
    def test_depends_only_on_separation(self, a, b, shift):
        base = correlation_E(bell_phi_plus(), a, b)
        rotated = correlation_E(bell_phi_plus(), a + shift, b + shift)
        assert base == pytest.approx(rotated, abs=1e-12)


class TestReducedState:
    def test_entangled_reduces_to_mixed(self):
        for wing in (Wing.A, Wing.B):
            reduced = reduced_state(bell_phi_plus(), wing)
            assert_allclose(reduced.matrix, np.eye(2) / 2.0, atol=1e-12)

    def test_product_state_unchanged(self):
        reduced = reduced_state(product_polarized(0.0, 0.0), Wing.A)
        assert_allclose(reduced.matrix, analyzer_projector(0.0, V).matrix, atol=1e-12)

    def test_maximally_mixed(self):
        reduced = reduced_state(maximally_mixed_pair(), Wing.B)
        assert_allclose(reduced.matrix, np.eye(2) / 2.0, atol=1e-12)


class TestConditionalRemoteState:
    def test_collapse_to_observed_axis(self):
        remote = conditional_remote_state(bell_phi_plus(), Wing.B, 25.0, V)
        expected = np.outer(axis_ket(25.0), axis_ket(25.0).conj())
        assert_allclose(remote.matrix, expected, atol=1e-12)

    def test_orthogonal_outcome(self):
        remote = conditional_remote_state(bell_phi_plus(), Wing.B, 30.0, H)
        expected = analyzer_projector(30.0, H).matrix
        assert_allclose(remote.matrix, expected, atol=1e-12)

    def test_product_state_unaffected(self):
        remote = conditional_remote_state(product_polarized(0.0, 0.0), Wing.B, 0.0, V)
        assert_allclose(remote.matrix, analyzer_projector(0.0, V).matrix, atol=1e-12)

    def test_impossible_observation_rejected(self):
        with pytest.raises(UndefinedConditionalError):
            conditional_remote_state(product_polarized(0.0, 0.0), Wing.B, 0.0, H)
