"""Self-test harness: fast oracle checks runnable from the command line.

Each check recomputes a known quantity through an independent route
(dense brute force, analytic formulas, exact matrix exponentials) and
compares against the production path.  ``run_all`` prints one line per
check and reports overall success.
"""

import numpy as np
from scipy.linalg import expm

from . import evolve, model, observables, schedules, spectral
from . import statespace as ss
from .kernels import StackedCSR


def _check_ladder_bruteforce():
    n_fock = 5
    a = ss.annihilator(n_fock).toarray()
    dense = np.zeros((n_fock, n_fock), dtype=complex)
    for n in range(1, n_fock):
        dense[n - 1, n] = np.sqrt(n)
    err = np.max(np.abs(a - dense))
    return err < 1e-14, f"max err {err:.1e}"


def _check_operator_bruteforce():
    sigma = {"x": np.array([[0, 1], [1, 0]], dtype=complex),
             "z": np.diag([1.0, -1.0]).astype(complex)}
    worst = 0.0
    for n_qubits in (2, 3):
        for axis in "xz":
            dense = np.zeros((2 ** n_qubits,) * 2, dtype=complex)
            for i in range(1, n_qubits + 1):
                term = np.array([[1.0]], dtype=complex)
                for j in range(1, n_qubits + 1):
                    term = np.kron(term, sigma[axis] if j == i
                                   else np.eye(2, dtype=complex))
                dense += 0.5 * term
            got = ss.collective_spin(axis, n_qubits).toarray()
            worst = max(worst, np.max(np.abs(dense - got)))
    return worst < 1e-14, f"max err {worst:.1e}"


def _check_full_vs_collective():
    space = ss.HilbertSpace(3, 5)
    params = model.ModelParams.symmetric(3, 1.0, 2.1, 0.7)
    diff = (model.build_full_hamiltonian(params, space)
            - model.build_dicke_hamiltonian(1.0, 2.1, 0.7, space))
    err = np.max(np.abs(diff.data)) if diff.nnz else 0.0
    return err < 1e-12, f"entrywise diff {err:.1e}"


def _check_parity_symmetry():
    space = ss.HilbertSpace(2, 6)
    h = model.build_dicke_hamiltonian(1.0, 1.9, 0.8, space)
    pi_op = model.parity_operator(space)
    comm = h @ pi_op - pi_op @ h
    err = np.max(np.abs(comm.data)) if comm.nnz else 0.0
    return err < 1e-10, f"commutator {err:.1e}"


def _check_polaron_spectrum():
    space = ss.HilbertSpace(2, 50)
    h = model.build_dicke_hamiltonian(1.0, 1.5, 0.0, space)
    vals = np.sort(np.linalg.eigvalsh(h.toarray()))[:8]
    err = np.max(np.abs(vals - np.repeat([0.0, 1.0], 4)))
    return err < 1e-8, f"lowest-levels err {err:.1e}"


def _check_splitting_law():
    space = ss.HilbertSpace(2, 100)
    g = 5.0
    h = model.build_dicke_hamiltonian(1.0, g, 1.0, space)
    vals, _ = spectral.eigensystem(h, 4)
    analytic = spectral.usc_splittings(1.0, 1.0, g, 2).level_sequence()
    num = vals - vals[0]
    ana = analytic - analytic[0]
    rel = np.max(np.abs(num[1:] - ana[1:]) / ana[1:])
    return rel < 0.05, f"worst gap error {rel:.1%}"


def _check_angular_momentum_states():
    worst = 0.0
    for (n, s, m) in ((2, 1, 0), (4, 2, 0), (4, 0, 0), (6, 3, 0)):
        psi = spectral.dicke_state(n, s, m, axis="x")
        s2 = ss.total_spin_squared(n)
        worst = max(worst, np.linalg.norm(s2 @ psi - s * (s + 1) * psi))
    s_state, s_prime = spectral.singlet_states(4)
    for axis in "xyz":
        op = ss.collective_spin(axis, 4)
        worst = max(worst, np.linalg.norm(op @ s_state),
                    np.linalg.norm(op @ s_prime))
    return worst < 1e-10, f"worst residual {worst:.1e}"


def _check_propagator_oracle():
    space = ss.HilbertSpace(2, 12)
    sched = schedules.constant_schedule(2, 1.1, 0.9, 2.0)
    cfg = evolve.IntegratorConfig.for_schedule(sched, record_dt=0.5)
    rng = np.random.default_rng(3)
    psi0 = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
    psi0.reshape(4, 12)[:, 6:] = 0.0  # keep clear of the Fock truncation
    psi0 /= np.linalg.norm(psi0)
    traj = evolve.schrodinger_evolve(sched, psi0, cfg, space)
    h = model.build_full_hamiltonian(
        model.ModelParams.symmetric(2, 1.0, 1.1, 0.9), space).toarray()
    err = np.linalg.norm(traj.final_state - expm(-2.0j * h) @ psi0)
    return err < 1e-8, f"state error {err:.1e}"


def _check_damped_cavity():
    space = ss.HilbertSpace(1, 6)
    sched = schedules.constant_schedule(1, 0.0, 0.0, 4.0)
    cfg = evolve.IntegratorConfig.for_schedule(sched, record_dt=1.0)
    dcfg = evolve.DissipatorConfig(kappa=0.3, basis_dim=space.dim)
    rho0 = ss.density_matrix(ss.basis_state(space, 1, "d"))
    traj = evolve.lindblad_evolve(sched, rho0, cfg, dcfg, space,
                                  snapshot_times=(4.0,))
    num = ss.embed(ss.number_operator(6), "resonator", space).toarray()
    n_t = np.real(np.trace(num @ traj.snapshots[4.0]))
    err = abs(n_t - np.exp(-0.3 * 4.0))
    return err < 1e-4, f"<n> error {err:.1e}"


def _check_gibbs_fixed_point():
    space = ss.HilbertSpace(1, 4)
    sched = schedules.constant_schedule(1, 0.5, 0.8, 250.0)
    cfg = evolve.IntegratorConfig.for_schedule(sched, record_dt=50.0)
    dcfg = evolve.DissipatorConfig(kappa=0.5, temperature=0.7,
                                   basis_dim=space.dim)
    rho0 = ss.density_matrix(ss.basis_state(space, 0, "d"))
    traj = evolve.lindblad_evolve(sched, rho0, cfg, dcfg, space)
    h = model.build_full_hamiltonian(
        model.ModelParams.symmetric(1, 1.0, 0.5, 0.8), space)
    delta = traj.final_state - evolve.gibbs_state(h, 0.7)
    dist = 0.5 * np.sum(np.abs(np.linalg.eigvalsh(delta)))
    return dist < 1e-3, f"trace distance {dist:.1e}"


def _check_partial_trace():
    space = ss.HilbertSpace(2, 4)
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(20):
        mat = rng.normal(size=(space.dim, 3)) + 1j * rng.normal(size=(space.dim, 3))
        rho = mat @ mat.conj().T
        rho /= np.trace(rho).real
        for keep in ("qubits", "resonator", 1):
            reduced = ss.partial_trace(rho, keep, space)
            worst = max(worst, abs(np.trace(reduced).real - 1.0))
    return worst < 1e-12, f"trace deviation {worst:.1e}"


def _check_schedule_round_trip():
    sched = schedules.ground_state_protocol(
        schedules.GroundProtocolParams(n_qubits=4)).with_disorder(
            frequency_eps=[0.02, -0.07, 0.0, 0.04])
    clone = schedules.ControlSchedule.from_dict(sched.to_dict())
    worst = 0.0
    for t in np.linspace(0, sched.t_f, 31):
        g0, w0 = sched.evaluate(t)
        g1, w1 = clone.evaluate(t)
        worst = max(worst, np.max(np.abs(g0 - g1)), np.max(np.abs(w0 - w1)))
    return worst == 0.0, f"round-trip deviation {worst:.1e}"


def _check_kernel_consistency():
    import scipy.sparse as sparse
    rng = np.random.default_rng(5)
    blocks = [sparse.random(60, 60, density=0.07, random_state=k).tocsr()
              for k in range(4)]
    stacked = StackedCSR(blocks)
    coeffs = rng.normal(size=4)
    x = rng.normal(size=60) + 1j * rng.normal(size=60)
    y_fused = stacked.matvec(coeffs, x, scale=-1j)
    y_ref = -1j * (stacked.combine(coeffs.astype(complex)) @ x)
    err = np.max(np.abs(y_fused - y_ref))
    return err < 1e-12, f"fused vs combined {err:.1e}"


CHECKS = [
    ("ladder operator vs dense construction", _check_ladder_bruteforce),
    ("collective spin vs dense construction", _check_operator_bruteforce),
    ("per-qubit vs collective Hamiltonian", _check_full_vs_collective),
    ("parity conservation", _check_parity_symmetry),
    ("displacement-transformed spectrum at w_q=0", _check_polaron_spectrum),
    ("strong-coupling splitting law (N=2)", _check_splitting_law),
    ("angular-momentum target states", _check_angular_momentum_states),
    ("propagator vs exact matrix exponential", _check_propagator_oracle),
    ("damped-cavity decay rate", _check_damped_cavity),
    ("thermal fixed point of the dissipator", _check_gibbs_fixed_point),
    ("partial-trace normalization", _check_partial_trace),
    ("schedule serialization round trip", _check_schedule_round_trip),
    ("fused kernel vs materialized matrix", _check_kernel_consistency),
]


def run_all(verbose=True):
    """Run every check; returns True when all pass."""
    all_ok = True
    width = max(len(name) for name, _ in CHECKS)
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"raised {exc!r}"
        all_ok &= ok
        if verbose:
            print(f"{name:<{width}}  {'PASS' if ok else 'FAIL'}  {detail}")
    return all_ok
