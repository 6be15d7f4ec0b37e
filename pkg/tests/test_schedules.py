import json

import numpy as np
import pytest

from uscharvest import schedules as sch


def test_ground_protocol_endpoint_values():
    p = sch.GroundProtocolParams(n_qubits=4)
    s = sch.ground_state_protocol(p)
    g, w = s.evaluate(0.0)
    assert np.allclose(g, 0.1) and np.allclose(w, 20.0)
    g, w = s.evaluate(13.0)
    assert np.allclose(g, 4.5) and np.allclose(w, 0.5)
    g, w = s.evaluate(s.t_f)
    assert np.allclose(g, 0.1) and np.allclose(w, 20.0)
    assert abs(s.t_f - 15.0) < 1e-12
    assert abs(s.t_protocol - 14.0) < 1e-12


def test_ground_protocol_reaches_extremes():
    s = sch.ground_state_protocol(sch.GroundProtocolParams(n_qubits=2))
    ts = np.linspace(0, s.t_f, 2001)
    g = np.array([s.evaluate(t)[0][0] for t in ts])
    assert abs(g.max() - 4.5) < 1e-12
    assert g.min() >= 0.1 - 1e-12


def test_degenerate_quench_limit():
    p = sch.GroundProtocolParams(n_qubits=2, t3=0.0, t4=0.0, hold=1.0)
    s = sch.ground_state_protocol(p)
    g, w = s.evaluate(13.0 - 1e-9)
    assert abs(g[0] - 4.5) < 1e-6
    g, w = s.evaluate(13.0 + 1e-9)
    assert abs(g[0] - 0.1) < 1e-6 and abs(w[0] - 20.0) < 1e-6


def test_parameter_ordering_validation():
    with pytest.raises(ValueError):
        sch.GroundProtocolParams(n_qubits=2, omega_min=2.0)
    with pytest.raises(ValueError):
        sch.GroundProtocolParams(n_qubits=2, g_max=0.5)


def test_linear_midpoint_and_cosine_flat_ends():
    prof = sch.PiecewiseProfile([(2.0, 1.0, 3.0, "linear")])
    assert abs(prof(1.0) - 2.0) < 1e-12
    prof = sch.PiecewiseProfile([(2.0, 1.0, 3.0, "cosine")])
    eps = 1e-6
    assert abs(prof(eps) - prof(0.0)) / eps < 1e-4
    assert abs(prof(2.0) - prof(2.0 - eps)) / eps < 1e-4
    assert abs(prof(1.0) - 2.0) < 1e-12  # midpoint of the smoothstep


def test_clamping_outside_domain():
    s = sch.ground_state_protocol(sch.GroundProtocolParams(n_qubits=2))
    assert np.allclose(s.evaluate(-5.0)[0], s.evaluate(0.0)[0])
    assert np.allclose(s.evaluate(s.t_f + 10.0)[1], s.evaluate(s.t_f)[1])


def test_discontinuous_profile_rejected():
    with pytest.raises(ValueError):
        sch.PiecewiseProfile([(1.0, 0.0, 1.0, "linear"),
                              (1.0, 2.0, 3.0, "linear")])


def test_hold_segment_requires_equal_endpoints():
    with pytest.raises(ValueError):
        sch.ProfileSegment(1.0, 0.0, 1.0, "hold")


def test_schedule_serialization_round_trip(tmp_path):
    s = sch.ground_state_protocol(sch.GroundProtocolParams(n_qubits=4))
    s = s.with_disorder(coupling_eps=[0.03, -0.05, 0.0, 0.01])
    path = tmp_path / "sched.json"
    s.save(path)
    loaded = sch.ControlSchedule.load(path)
    assert loaded.to_dict() == s.to_dict()
    for t in np.linspace(-1, s.t_f + 1, 57):
        g0, w0 = s.evaluate(t)
        g1, w1 = loaded.evaluate(t)
        assert np.array_equal(g0, g1) and np.array_equal(w0, w1)


def test_sampled_profile_round_trip_and_clamp(tmp_path):
    t = np.linspace(0, 4, 21)
    g = 1 + np.sin(t)
    w = 5 - t
    s = sch.schedule_from_table(t, g, w, n_qubits=2)
    assert abs(s.evaluate(2.0)[0][0] - (1 + np.sin(2.0))) < 1e-9
    assert np.allclose(s.evaluate(100.0)[1], 1.0)
    path = tmp_path / "table.csv"
    sch.save_pulse_table(path, t, g, w)
    t2, g2, w2 = sch.load_pulse_table(path)
    s2 = sch.schedule_from_table(t2, g2, w2, n_qubits=2)
    for tt in np.linspace(0, 4, 33):
        assert abs(s.evaluate(tt)[0][0] - s2.evaluate(tt)[0][0]) < 1e-10


def test_time_reversal():
    s = sch.ground_state_protocol(sch.GroundProtocolParams(n_qubits=2))
    rev = s.time_reversed()
    for t in np.linspace(0, s.t_f, 41):
        g_f, w_f = s.evaluate(t)
        g_r, w_r = rev.evaluate(s.t_f - t)
        assert np.allclose(g_f, g_r, atol=1e-12)
        assert np.allclose(w_f, w_r, atol=1e-12)


def test_disorder_scales_controls():
    base = sch.ground_state_protocol(sch.GroundProtocolParams(n_qubits=4))
    eps = np.array([0.1, -0.1, 0.05, 0.0])
    s = base.with_disorder(frequency_eps=eps)
    g0, w0 = base.evaluate(3.3)
    g1, w1 = s.evaluate(3.3)
    assert np.allclose(g1, g0)
    assert np.allclose(w1, w0 * (1 + eps))


def test_negative_coupling_rejected():
    with pytest.raises(ValueError):
        sch.ground_state_protocol(
            sch.GroundProtocolParams(n_qubits=2)).with_disorder(
                coupling_eps=[-1.5, 0.0])


def test_singlet_protocol_stage_values():
    p = sch.SingletProtocolParams(n_qubits=4)
    s = sch.singlet_protocol(p)
    g, w = s.evaluate(p.t1)
    assert np.allclose(g, 0.0)
    assert np.allclose(w[:2], 0.48) and np.allclose(w[2:], 0.35)
    g, w = s.evaluate(p.t1 + p.t2)
    assert np.allclose(g, 1.8)
    assert np.allclose(w, p.omega_merge)
    g, w = s.evaluate(s.t_f)
    assert np.allclose(g, p.g_f) and np.allclose(w, p.omega_max)


def test_singlet_protocol_n2_groups():
    p = sch.SingletProtocolParams(n_qubits=2)
    s = sch.singlet_protocol(p)
    _, w = s.evaluate(p.t1)
    assert abs(w[0] - 0.48) < 1e-12 and abs(w[1] - 0.35) < 1e-12


def test_singlet_rejects_pair_offsets_for_n2():
    with pytest.raises(ValueError):
        sch.SingletProtocolParams(n_qubits=2, pair_offsets=(0.01, -0.01))


def test_singlet_validation():
    with pytest.raises(ValueError):
        sch.SingletProtocolParams(n_qubits=3)
    with pytest.raises(ValueError):
        sch.SingletProtocolParams(n_qubits=4, omega_a=0.6)


def test_constant_schedule_groups_distinct_values():
    s = sch.constant_schedule(4, 1.0, [2.0, 2.0, 3.0, 3.0], duration=5.0)
    g, w = s.evaluate(2.5)
    assert np.allclose(g, 1.0)
    assert np.allclose(w, [2.0, 2.0, 3.0, 3.0])
    assert len(s.g_modes) == 1 and len(s.omega_modes) == 2
