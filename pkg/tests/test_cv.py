from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oneway.cv import (
    FeedforwardCircuit,
    WireConfig,
    build_wire,
    cascade_angles,
    control_angle,
    cz_target,
    cz_angle_table,
    extract_symplectic,
    gate_noise_report,
    macronode_law,
    nullifier_variances,
    project_wires,
    single_mode_gate,
    two_mode_cz,
)
from oneway.gaussian import (
    VACUUM_VARIANCE,
    GaussianError,
    GaussianState,
    db_to_variance,
    rotation_matrix,
    squeeze_matrix,
    tensor,
)

LAW_TOL = 5e-2


def single(theta_a: float, theta_b: float, w: int = 0, db: float = -30.0) -> np.ndarray:
    return extract_symplectic(lambda s: single_mode_gate(s, w, 0, theta_a, theta_b, db), w + 1)[2 * w :, 2 * w :]


class TestWireConfig:
    @pytest.mark.parametrize("kwargs", [{"N": 3}, {"N": 0}, {"steps": 0}, {"steps": 41}])
    def test_bounds(self, kwargs):
        with pytest.raises(GaussianError):
            WireConfig(**kwargs)


class TestBuildWire:
    def test_single_step_pair(self):
        w = build_wire(WireConfig(N=2, steps=1, squeezing_db=-10))
        assert w.state.num_modes == 2
        assert abs(w.state.cov[0, 2]) > 0.1
        assert w.state.purity_det() == pytest.approx(1)

    def test_full_size(self):
        w = build_wire(WireConfig(N=12, steps=24, squeezing_db=-10))
        assert w.state.num_modes == 48
        assert w.state.uncertainty_min_eig() >= -1e-8
        assert w.index["A", 23] == 46 and w.index["B", 23] == 47

    @pytest.mark.parametrize("db", [-5.0, -10.0, -30.0])
    def test_nullifiers(self, db):
        w = build_wire(WireConfig(N=4, steps=10, squeezing_db=db))
        np.testing.assert_allclose(nullifier_variances(w), db_to_variance(db), rtol=1e-6)

    def test_nullifiers_at_30db(self):
        w = build_wire(WireConfig(N=4, steps=10, squeezing_db=-30))
        # -30 dB is exactly 1e-3 of vacuum, so the bound is met with equality
        assert nullifier_variances(w).max() <= 1e-3 * VACUUM_VARIANCE * (1 + 1e-9)

    def test_nullifiers_shrink(self):
        a = nullifier_variances(build_wire(WireConfig(4, 6, -10))).max()
        b = nullifier_variances(build_wire(WireConfig(4, 6, -40))).max()
        assert b < a / 100


class TestProjection:
    def test_control_angles(self):
        assert [control_angle(k) for k in (1, 3, 5, 7)] == pytest.approx([np.pi / 4, -np.pi / 4] * 2)

    def test_even_index_rejected(self):
        with pytest.raises(GaussianError):
            control_angle(2)

    def test_half_remain(self):
        w = build_wire(WireConfig(N=4, steps=12, squeezing_db=-10))
        p = project_wires(w)
        assert p.state.num_modes == 12
        assert all(k % 2 == 0 for _, k in p.index)
        assert p.state.uncertainty_min_eig() >= -1e-8


class TestSingleModeGate:
    @pytest.mark.parametrize("w", [0, 1])
    def test_identity_setting(self, w):
        s = single(np.pi / 4, -np.pi / 4, w)
        np.testing.assert_allclose(s, (-1) ** w * np.eye(2), atol=1e-12)

    @pytest.mark.parametrize("phi", np.linspace(-1.4, 1.4, 8))
    def test_rotation_law(self, phi):
        s = single(phi + np.pi / 4, phi - np.pi / 4)
        assert np.abs(s - rotation_matrix(2 * phi)).max() < LAW_TOL

    @settings(max_examples=25, deadline=None)
    @given(st.floats(-1.5, 1.5), st.floats(0.05, 1.5), st.integers(0, 3))
    def test_general_law(self, tp, tm, w):
        s = single(tp + tm, tp - tm, w)
        np.testing.assert_allclose(s, macronode_law(tp + tm, tp - tm, w), atol=1e-9)

    def test_law_is_symplectic(self):
        m = macronode_law(0.9, -0.2)
        assert np.linalg.det(m) == pytest.approx(1)

    @pytest.mark.parametrize("tm", [0.0, np.pi / 2, -np.pi / 2])
    def test_singular_rejected(self, tm):
        with pytest.raises(GaussianError):
            single_mode_gate(GaussianState.vacuum(1), 0, 0, 0.3 + tm, 0.3 - tm)

    def test_control_index_rejected(self):
        with pytest.raises(GaussianError):
            single_mode_gate(GaussianState.vacuum(1), 0, 1, 0.1, 0.2)

    def test_probe_fidelity_identity(self):
        probe = GaussianState.coherent(0.7, -0.2)
        out = single_mode_gate(probe, 0, 0, np.pi / 4, -np.pi / 4, -30).state
        np.testing.assert_allclose(out.mean, probe.mean, atol=1e-12)
        assert np.abs(out.cov - probe.cov).max() < 1e-2

    def test_cascade_spans(self):
        rng = np.random.default_rng(4)
        for _ in range(3):
            target = rotation_matrix(rng.uniform(0, 6)) @ squeeze_matrix(np.exp(rng.normal())) @ rotation_matrix(
                rng.uniform(0, 6)
            )
            (a1, b1), (a2, b2) = cascade_angles(target)

            def gate(s):
                return single_mode_gate(single_mode_gate(s, 0, 0, a1, b1).state, 0, 2, a2, b2)

            assert np.abs(extract_symplectic(gate, 1) - target).max() < LAW_TOL


class TestTwoModeCZ:
    def test_table_example(self):
        ang = cz_angle_table(2.0, 0)
        assert ang["A", "k+N"] == pytest.approx(np.pi / 4)
        assert ang["B", "k+N+1"] == pytest.approx(3 * np.pi / 4)
        assert len(ang) == 10

    @pytest.mark.parametrize("g", [0.0, 1.0, 2.0, -1.3])
    @pytest.mark.parametrize("w", [0, 1, 2])
    def test_law(self, g, w):
        s = extract_symplectic(lambda st: two_mode_cz(st, (w, w + 1), 0, g), w + 2)[2 * w :, 2 * w :]
        assert np.abs(s - cz_target(g, w)).max() < LAW_TOL

    def test_zero_coupling_is_local(self):
        t = cz_target(0.0, 1)
        assert np.allclose(t[:2, 2:], 0) and np.allclose(t[2:, :2], 0)

    def test_spectator_untouched(self):
        res = two_mode_cz(GaussianState.vacuum(3), (1, 2), 0, 1.0)
        np.testing.assert_allclose(res.symplectic[:2, :2], np.eye(2))
        np.testing.assert_allclose(res.symplectic[:2, 2:], 0)

    @pytest.mark.parametrize("wires", [(0, 2), (1, 0), (1, 2)])
    def test_adjacency(self, wires):
        with pytest.raises(GaussianError):
            two_mode_cz(GaussianState.vacuum(2), wires, 0, 1.0)


class TestNoise:
    @pytest.mark.parametrize("db", [-4.4, -10.0, -30.0])
    def test_factor_recorded(self, db):
        rep = gate_noise_report(db)
        assert rep.reference_factor_db == 6.0
        assert rep.added_variance == pytest.approx(db_to_variance(db) * 10 ** (rep.factor_db / 10))

    def test_squeezing_independent(self):
        factors = [gate_noise_report(db).factor_db for db in (-4.4, -10.0, -30.0)]
        assert max(factors) - min(factors) < 0.2

    def test_absolute_noise_scales(self):
        a, b = gate_noise_report(-4.4), gate_noise_report(-30.0)
        assert 10 * np.log10(a.added_variance / b.added_variance) == pytest.approx(25.6)

    @pytest.mark.parametrize(
        "probe",
        [GaussianState.vacuum(1), GaussianState.coherent(1.5, -0.4), GaussianState.squeezed(-3, "q")],
        ids=["vacuum", "coherent", "squeezed"],
    )
    def test_probe_independent(self, probe):
        assert abs(gate_noise_report(-10, probe).factor_db - gate_noise_report(-10).factor_db) < 0.2

    def test_vanishes_with_squeezing(self):
        assert gate_noise_report(-80).added_variance < 1e-7


class TestFeedforward:
    def test_outcome_free_output(self):
        circ = FeedforwardCircuit(tensor(GaussianState.vacuum(1)))
        a = circ.add_squeezed(-10, "q")
        b = circ.add_squeezed(-10, "p")
        circ.measure(a, 0.0)
        with pytest.raises(GaussianError):
            circ.feedforward([b])
