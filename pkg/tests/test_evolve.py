import numpy as np
import pytest
from scipy.linalg import expm

from uscharvest import evolve, model, schedules, spectral
from uscharvest import observables as obs
from uscharvest import statespace as ss

from conftest import random_state


def _static_run(space, g, omega_q, duration, psi0, **kwargs):
    sched = schedules.constant_schedule(space.n_qubits, g, omega_q, duration)
    cfg = evolve.IntegratorConfig.for_schedule(sched, **kwargs.pop("cfg_kw", {}))
    return evolve.schrodinger_evolve(sched, psi0, cfg, space, **kwargs)


def test_static_hamiltonian_matches_expm_oracle():
    space = ss.HilbertSpace(2, 20)
    rng = np.random.default_rng(1)
    psi0 = random_state(space.dim, rng)
    traj = _static_run(space, 1.5, 0.8, 3.0, psi0)
    h = model.build_full_hamiltonian(
        model.ModelParams.symmetric(2, 1.0, 1.5, 0.8), space).toarray()
    exact = expm(-1j * h * 3.0) @ psi0
    assert np.linalg.norm(traj.final_state - exact) < 1e-8
    assert traj.meta["norm_drift"] < 1e-8


def test_free_precession_analytic():
    # single decoupled qubit: <sigma_x>(t) = cos(w_q t)
    space = ss.HilbertSpace(1, 2)
    omega_q = 1.3
    plus = ss.register_state({"u": 1, "d": 1}, 1)
    psi0 = ss.compose(plus, ss.fock_state(space, 0))
    snap_times = [0.5, 1.0, 2.0, 3.5]
    sched = schedules.constant_schedule(1, 0.0, omega_q, 4.0)
    cfg = evolve.IntegratorConfig.for_schedule(sched)
    traj = evolve.schrodinger_evolve(sched, psi0, cfg, space,
                                     snapshot_times=snap_times)
    sx = ss.embed(ss.pauli(1, "x", 1), "qubits", space)
    for t in snap_times:
        psi = traj.snapshots[t]
        val = np.vdot(psi, sx @ psi).real
        assert abs(val - np.cos(omega_q * t)) < 1e-8


def test_linearity_of_propagation():
    space = ss.HilbertSpace(2, 12)
    sched = schedules.ground_state_protocol(
        schedules.GroundProtocolParams(n_qubits=2, t1=0.5, t2=0.5,
                                       t3=0.2, t4=0.2, hold=0.1))
    cfg = evolve.IntegratorConfig.for_schedule(sched)
    rng = np.random.default_rng(2)
    psi_a = random_state(space.dim, rng)
    psi_b = random_state(space.dim, rng)
    mix = (psi_a + 2j * psi_b)
    norm = np.linalg.norm(mix)
    out_a = evolve.schrodinger_evolve(sched, psi_a, cfg, space).final_state
    out_b = evolve.schrodinger_evolve(sched, psi_b, cfg, space).final_state
    out_mix = evolve.schrodinger_evolve(sched, mix / norm, cfg, space).final_state
    assert np.linalg.norm(out_mix - (out_a + 2j * out_b) / norm) < 1e-7


def test_dt_max_bound_enforced():
    sched = schedules.ground_state_protocol(
        schedules.GroundProtocolParams(n_qubits=2))
    cfg = evolve.IntegratorConfig(dt_max=0.01)
    space = ss.HilbertSpace(2, 10)
    psi0 = ss.basis_state(space, 0, "dd")
    with pytest.raises(ValueError):
        evolve.schrodinger_evolve(sched, psi0, cfg, space)


def test_step_halving_convergence():
    space = ss.HilbertSpace(2, 40)
    p = schedules.GroundProtocolParams(n_qubits=2, t1=2.0, t2=2.0, hold=0.5)
    sched = schedules.ground_state_protocol(p)
    target = spectral.dicke_state(2, 1, 0, axis="x")
    psi0 = ss.basis_state(space, 0, "dd")
    cfg = evolve.IntegratorConfig.for_schedule(sched)
    cfg_half = evolve.IntegratorConfig(dt_max=cfg.dt_max / 2,
                                       record_dt=cfg.record_dt)
    f1 = evolve.schrodinger_evolve(sched, psi0, cfg, space,
                                   target=target).columns["fidelity"][-1]
    f2 = evolve.schrodinger_evolve(sched, psi0, cfg_half, space,
                                   target=target).columns["fidelity"][-1]
    assert abs(f1 - f2) < 1e-4


def test_unnormalized_input_rejected():
    space = ss.HilbertSpace(1, 4)
    sched = schedules.constant_schedule(1, 0.0, 1.0, 1.0)
    cfg = evolve.IntegratorConfig.for_schedule(sched)
    with pytest.raises(ValueError):
        evolve.schrodinger_evolve(sched, np.ones(space.dim), cfg, space)


# ---------------------------------------------------------------------------
# master equation


def test_damped_oscillator_decay():
    # decoupled-qubit limit: resonator relaxes as <n>(t) = exp(-kappa t)
    space = ss.HilbertSpace(1, 8)
    sched = schedules.constant_schedule(1, 0.0, 0.0, 6.0)
    cfg = evolve.IntegratorConfig.for_schedule(sched, record_dt=0.5)
    kappa = 0.25
    dcfg = evolve.DissipatorConfig(kappa=kappa, basis_dim=space.dim)
    psi0 = ss.basis_state(space, 1, "d")
    rho0 = ss.density_matrix(psi0)
    snap = [2.0, 6.0]
    traj = evolve.lindblad_evolve(sched, rho0, cfg, dcfg, space,
                                  snapshot_times=snap)
    num = ss.embed(ss.number_operator(space.n_fock), "resonator", space).toarray()
    for t in snap:
        n_t = np.real(np.trace(num @ traj.snapshots[t]))
        assert abs(n_t - np.exp(-kappa * t)) < 1e-4
    assert traj.meta["trace_drift"] < 1e-6


def test_gibbs_fixed_point():
    space = ss.HilbertSpace(1, 5)
    g, omega_q, temp = 0.4, 0.7, 0.8
    sched = schedules.constant_schedule(1, g, omega_q, 400.0)
    cfg = evolve.IntegratorConfig.for_schedule(sched, record_dt=50.0)
    dcfg = evolve.DissipatorConfig(kappa=0.4, temperature=temp,
                                   basis_dim=space.dim)
    rho0 = ss.density_matrix(ss.basis_state(space, 0, "d"))
    traj = evolve.lindblad_evolve(sched, rho0, cfg, dcfg, space)
    h = model.build_full_hamiltonian(
        model.ModelParams.symmetric(1, 1.0, g, omega_q), space)
    rho_eq = evolve.gibbs_state(h, temp)
    delta = traj.final_state - rho_eq
    trace_distance = 0.5 * np.sum(np.abs(np.linalg.eigvalsh(delta)))
    assert trace_distance < 1e-3


def test_lindblad_kappa_zero_matches_schrodinger():
    space = ss.HilbertSpace(2, 16)
    p = schedules.GroundProtocolParams(n_qubits=2, t1=1.0, t2=1.0,
                                       t3=0.3, t4=0.3, hold=0.2,
                                       omega_max=5.0, g_max=1.5)
    sched = schedules.ground_state_protocol(p)
    cfg = evolve.IntegratorConfig.for_schedule(sched, record_dt=0.2)
    psi0 = ss.basis_state(space, 0, "dd")
    pure = evolve.schrodinger_evolve(sched, psi0, cfg, space)
    dcfg = evolve.DissipatorConfig(kappa=0.0)
    mixed = evolve.lindblad_evolve(sched, ss.density_matrix(psi0), cfg,
                                   dcfg, space)
    f = np.real(np.vdot(pure.final_state,
                        mixed.final_state @ pure.final_state))
    assert abs(f - 1.0) < 1e-6


def test_lindblad_input_validation():
    space = ss.HilbertSpace(1, 3)
    sched = schedules.constant_schedule(1, 0.0, 1.0, 1.0)
    cfg = evolve.IntegratorConfig.for_schedule(sched)
    dcfg = evolve.DissipatorConfig(kappa=0.1)
    with pytest.raises(ValueError):
        evolve.lindblad_evolve(sched, np.eye(space.dim), cfg, dcfg, space)
    with pytest.raises(ValueError):
        evolve.DissipatorConfig(kappa=-1.0)


def test_bose_occupation_limits():
    assert np.all(evolve.bose_occupation(np.array([1.0]), 0.0) == 0.0)
    assert abs(evolve.bose_occupation(np.array([1.0]), 1.0)[0]
               - 1 / (np.e - 1)) < 1e-12


def test_thermal_weights():
    p, residual = evolve.thermal_weights(1.0, 3)
    assert np.allclose(p, [0.5, 0.25, 0.125])
    assert abs(residual - 0.125) < 1e-12
    p0, r0 = evolve.thermal_weights(0.0, 5)
    assert p0[0] == 1.0 and r0 == 0.0


def test_thermal_average_zero_temperature_equals_pure_run():
    space = ss.HilbertSpace(2, 30)
    p = schedules.GroundProtocolParams(n_qubits=2, t1=1.5, t2=1.5, hold=0.5)
    sched = schedules.ground_state_protocol(p)
    cfg = evolve.IntegratorConfig.for_schedule(sched, record_dt=0.1)
    target = spectral.dicke_state(2, 1, 0, axis="x")
    avg, runs, residual = evolve.thermal_average(sched, 0.0, 1, cfg, space,
                                                 target=target)
    direct = evolve.schrodinger_evolve(
        sched, ss.basis_state(space, 0, "dd"), cfg, space, target=target)
    assert residual == 0.0
    assert np.allclose(avg.columns["fidelity"], direct.columns["fidelity"])


def test_thermal_average_residual_warning():
    space = ss.HilbertSpace(2, 20)
    sched = schedules.ground_state_protocol(
        schedules.GroundProtocolParams(n_qubits=2, t1=0.2, t2=0.2,
                                       t3=0.1, t4=0.1, hold=0.1))
    cfg = evolve.IntegratorConfig.for_schedule(sched, record_dt=0.2)
    with pytest.warns(RuntimeWarning):
        evolve.thermal_average(sched, 2.0, 2, cfg, space)


def test_protocol_mapping_property():
    # |n> x |down..down> maps onto the symmetric m_x = 0 state with the
    # photon index preserved, for n = 0 and 1
    space = ss.HilbertSpace(2, 60)
    p = schedules.GroundProtocolParams(n_qubits=2)
    sched = schedules.ground_state_protocol(p)
    cfg = evolve.IntegratorConfig.for_schedule(sched)
    target = spectral.dicke_state(2, 1, 0, axis="x")
    crest_grid = list(np.arange(p.t_protocol, sched.t_f, 0.01))
    for n, weight_floor in ((0, 0.9), (1, 0.8)):
        psi0 = ss.basis_state(space, n, "dd")
        traj = evolve.schrodinger_evolve(sched, psi0, cfg, space, target=target,
                                         snapshot_times=crest_grid)
        mask = traj.t >= p.t_protocol
        crest = traj.t[mask][np.argmax(traj.columns["fidelity"][mask])]
        psi = traj.snapshots[float(crest)]
        ideal = ss.compose(target, ss.fock_state(space, n))
        assert abs(np.vdot(ideal, psi)) ** 2 > weight_floor
        label = spectral.classify_state(psi, space, g_over_omega_r=0.1,
                                        tolerance=0.5)
        assert label is not None
        assert (label[0], label[1], label[2]) == (1, 0, n)
