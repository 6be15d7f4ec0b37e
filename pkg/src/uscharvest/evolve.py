"""Time propagation of pure states and density matrices.

Pure states follow the time-dependent Schrodinger equation under an
adaptive explicit Runge-Kutta integrator with a hard step-size cap that
resolves the fastest control scale.  Open-system runs use a master
equation whose jump operators connect instantaneous eigenstates of H(t)
(rebuilt on a fixed cadence, cached during holds) with rates weighted by
the ohmic factor Delta/w_r and the resonator quadrature matrix element.
"""

import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import linear_sum_assignment

from . import observables as obs
from . import statespace as ss
from .model import TimeDependentHamiltonian
from .spectral import eigensystem

_METHODS = {"dop853": "DOP853", "rk45": "RK45"}

#: trajectory CSV columns, fixed order
COLUMNS = ("fidelity", "purity", "entropy_qubits", "entropy_single_qubit",
           "S2_expectation", "top_fock_population")


def fastest_scale(schedule, omega_r=1.0):
    """max(w_max, g_max, g_max^2/w_r) over the whole schedule."""
    g_max = 0.0
    for w, p in schedule.g_modes:
        g_max = max(g_max, np.max(np.abs(p.endpoint_values())) * np.max(np.abs(w)))
    w_max = 0.0
    for w, p in schedule.omega_modes:
        w_max = max(w_max, np.max(np.abs(p.endpoint_values())) * np.max(np.abs(w)))
    return max(w_max, g_max, g_max ** 2 / omega_r, omega_r)


@dataclass(frozen=True)
class IntegratorConfig:
    """Step control for the propagators.

    ``dt_max`` must resolve the fastest control scale,
    dt_max <= 0.02 / max(w_max, g_max, g_max^2/w_r).
    """

    dt_max: float
    method: str = "dop853"
    tolerance: float = 1e-9
    record_dt: float = 0.01
    max_chunk: float = 2.0

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {tuple(_METHODS)}")
        if self.dt_max <= 0 or self.record_dt <= 0:
            raise ValueError("dt_max and record_dt must be positive")

    @classmethod
    def for_schedule(cls, schedule, omega_r=1.0, safety=0.02, **kwargs):
        return cls(dt_max=safety / fastest_scale(schedule, omega_r), **kwargs)

    def check_against(self, schedule, omega_r=1.0):
        bound = 0.02 / fastest_scale(schedule, omega_r)
        if self.dt_max > bound * (1 + 1e-12):
            raise ValueError(f"dt_max={self.dt_max:.3e} exceeds the resolution "
                             f"bound {bound:.3e} for this schedule")


class Trajectory:
    """Time grid with recorded observables and optional state snapshots."""

    def __init__(self, t, columns, snapshots=None, final_state=None, meta=None):
        self.t = np.asarray(t)
        self.columns = {k: np.asarray(v) for k, v in columns.items()}
        self.snapshots = snapshots or {}
        self.final_state = final_state
        self.meta = meta or {}

    def write_csv(self, path):
        names = ("t",) + COLUMNS
        data = np.column_stack([self.t] + [self.columns[c] for c in COLUMNS])
        with open(path, "w") as fh:
            fh.write(",".join(names) + "\n")
            for row in data:
                fh.write(",".join(f"{v:.12g}" for v in row) + "\n")


class StateRecorder:
    """Standard observable set for pure states."""

    def __init__(self, space, target=None):
        self.space = space
        self.target = None if target is None else np.asarray(target,
                                                             np.complex128)
        self.s2 = ss.total_spin_squared(space.n_qubits).toarray()

    def __call__(self, psi):
        dq, nf = self.space.dim_qubits, self.space.n_fock
        mat = psi.reshape(dq, nf)
        svals = np.linalg.svd(mat, compute_uv=False)
        probs = svals ** 2
        norm_sq = probs.sum()
        probs_n = probs / norm_sq
        rho_q = mat @ mat.conj().T
        rho_1 = np.einsum("arbr->ab", rho_q.reshape(2, dq // 2, 2, dq // 2))
        row = {
            "fidelity": (np.nan if self.target is None else
                         float(np.linalg.norm(self.target.conj() @ mat) ** 2)),
            "purity": float(np.sum(probs_n ** 2)),
            "entropy_qubits": obs.entropy_from_probabilities(probs_n),
            "entropy_single_qubit": obs.entanglement_entropy(rho_1 / norm_sq),
            "S2_expectation": float(np.real(np.sum(np.conj(mat) * (self.s2 @ mat)))
                                    / norm_sq),
            "top_fock_population": float(np.linalg.norm(mat[:, -1]) ** 2),
            "norm": float(np.sqrt(norm_sq)),
        }
        return row


class DensityRecorder:
    """Standard observable set for density matrices."""

    def __init__(self, space, target=None):
        self.space = space
        self.target = None if target is None else np.asarray(target,
                                                             np.complex128)
        self.s2 = ss.total_spin_squared(space.n_qubits).toarray()

    def __call__(self, rho):
        dq, nf = self.space.dim_qubits, self.space.n_fock
        rho_q = ss.partial_trace(rho, "qubits", self.space)
        trace = float(np.real(np.trace(rho_q)))
        rho_qn = rho_q / trace
        rho_1 = np.einsum("arbr->ab", rho_qn.reshape(2, dq // 2, 2, dq // 2))
        diag = np.real(np.diagonal(rho))
        row = {
            "fidelity": (np.nan if self.target is None else
                         float(np.real(self.target.conj() @ rho_q @ self.target))),
            "purity": obs.purity(rho_qn),
            "entropy_qubits": obs.entanglement_entropy(rho_qn),
            "entropy_single_qubit": obs.entanglement_entropy(rho_1),
            "S2_expectation": float(np.real(np.trace(self.s2 @ rho_qn))),
            "top_fock_population": float(np.sum(diag[nf - 1::nf])),
            "norm": trace,
        }
        return row


def _time_grid(t_end, record_dt, snapshot_times):
    n = int(np.floor(t_end / record_dt + 1e-9)) + 1
    grid = np.linspace(0.0, (n - 1) * record_dt, n)
    if grid[-1] < t_end - 1e-12:
        grid = np.append(grid, t_end)
    extra = [t for t in snapshot_times if t <= t_end + 1e-12]
    grid = np.unique(np.concatenate([grid, extra]))
    return grid


def _chunks(breakpoints, t_end, max_chunk):
    pts = [b for b in breakpoints if 1e-12 < b < t_end - 1e-12]
    edges = np.unique(np.concatenate([[0.0, t_end], pts]))
    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        n_sub = max(1, int(np.ceil((b - a) / max_chunk)))
        sub = np.linspace(a, b, n_sub + 1)
        out.extend(zip(sub[:-1], sub[1:]))
    return out


def schrodinger_evolve(schedule, psi0, config, space, omega_r=1.0,
                       target=None, snapshot_times=(), t_end=None,
                       recorder=None):
    """Propagate a pure state along the schedule, recording observables.

    Returns a Trajectory; ``meta`` carries the norm drift and truncation
    diagnostics.  Raises on step-size underflow; warns when population
    reaches the top Fock level.
    """
    psi = np.asarray(psi0, dtype=np.complex128).copy()
    if abs(np.linalg.norm(psi) - 1.0) > 1e-9:
        raise ValueError("initial state is not normalized")
    config.check_against(schedule, omega_r)
    ham = TimeDependentHamiltonian.from_schedule(space, omega_r, schedule)
    t_end = schedule.t_f if t_end is None else float(t_end)
    grid = _time_grid(t_end, config.record_dt, snapshot_times)
    recorder = recorder or StateRecorder(space, target)

    def rhs(t, y):
        return ham.stacked.matvec(ham.coefficients(t), y, scale=-1j)

    rows = {}
    times = []
    snapshots = {}
    snap_set = np.asarray(sorted(snapshot_times))
    for t_a, t_b in _chunks(schedule.breakpoints(), t_end, config.max_chunk):
        pts = grid[(grid >= t_a - 1e-12) & (grid <= t_b + 1e-12)]
        pts = np.unique(np.clip(np.append(pts, [t_a, t_b]), t_a, t_b))
        sol = solve_ivp(rhs, (t_a, t_b), psi, method=_METHODS[config.method],
                        t_eval=pts, max_step=config.dt_max,
                        first_step=min(config.dt_max, (t_b - t_a)),
                        rtol=config.tolerance, atol=config.tolerance * 1e-2)
        if not sol.success:
            raise RuntimeError(f"integration failed in [{t_a}, {t_b}]: "
                               f"{sol.message}")
        for i, t in enumerate(sol.t):
            if t < t_a + 1e-12 and times:
                continue  # chunk-start duplicate
            state = sol.y[:, i]
            on_grid = np.any(np.abs(grid - t) < 1e-9)
            if on_grid:
                times.append(t)
                for key, val in recorder(state).items():
                    rows.setdefault(key, []).append(val)
            if snap_set.size and np.any(np.abs(snap_set - t) < 1e-9):
                snapshots[float(t)] = state.copy()
        psi = sol.y[:, -1].copy()

    columns = {k: np.array(v) for k, v in rows.items()}
    norm_drift = float(np.max(np.abs(columns["norm"] - 1.0)))
    top = float(np.max(columns["top_fock_population"]))
    if top > 1e-6:
        warnings.warn(f"population {top:.2e} reached the Fock truncation; "
                      f"increase n_fock", RuntimeWarning)
    meta = {"norm_drift": norm_drift, "max_top_fock": top,
            "t_end": t_end, "method": config.method, "dt_max": config.dt_max}
    return Trajectory(np.array(times), columns, snapshots, psi, meta)


# ---------------------------------------------------------------------------
# master equation in the instantaneous eigenbasis


@dataclass(frozen=True)
class DissipatorConfig:
    """Dressed-basis cavity-decay channel.

    kappa is the bare decay rate w_r/Q; temperature is in units of
    hbar w_r / k_B; transitions whose downward weighted rate falls below
    ``rate_floor`` are discarded; ``basis_dim`` instantaneous eigenstates
    are retained when building the jump operators.
    """

    kappa: float
    temperature: float = 0.0
    rate_floor: float = 0.0
    basis_dim: int = 40
    rebuild_dt: float = 0.05
    positivity_check_dt: float = 1.0

    def __post_init__(self):
        if self.kappa < 0 or self.rate_floor < 0:
            raise ValueError("kappa and rate_floor must be nonnegative")
        if self.temperature < 0:
            raise ValueError("temperature must be nonnegative")


def bose_occupation(delta, temperature):
    """Mean bath occupation at transition frequency delta (> 0)."""
    if temperature <= 0.0:
        return np.zeros_like(np.asarray(delta, dtype=float))
    return 1.0 / np.expm1(np.asarray(delta, dtype=float) / temperature)


class _Dissipator:
    """Rates and retained eigenbasis frozen for one rebuild interval."""

    def __init__(self, h, space, dconfig, quad, omega_r):
        b = min(dconfig.basis_dim, space.dim)
        vals, vecs = eigensystem(h, b)
        self.vals = vals
        self.v = np.ascontiguousarray(vecs)
        c = self.v.conj().T @ (quad @ self.v)
        de = vals[np.newaxis, :] - vals[:, np.newaxis]  # de[k, l] = E_l - E_k
        gamma = dconfig.kappa * (de / omega_r) * np.abs(c) ** 2
        active = np.triu(de > 1e-12, k=1)
        nbar = np.zeros_like(de)
        if dconfig.temperature > 0:
            with np.errstate(over="ignore"):
                nbar[active] = bose_occupation(de[active], dconfig.temperature)
        down = np.where(active, gamma * (1.0 + nbar), 0.0)
        down[down < dconfig.rate_floor] = 0.0
        up = np.where(active & (down > 0), gamma * nbar, 0.0)

        # w[target, source]: population transfer rates between retained levels
        self.w = down + up.T
        self.gamma_out = down.sum(axis=0) + up.sum(axis=1)
        self.vg = self.v * self.gamma_out[np.newaxis, :]
        self.has_jumps = bool(np.any(self.w))

    def apply(self, rho):
        vh = self.v.conj().T
        a_rho = self.vg @ (vh @ rho)
        rho_a = (self.vg @ (vh @ rho.conj().T)).conj().T
        ptilde = np.real(np.einsum("dl,dl->l", self.v.conj(), rho @ self.v))
        gain = (self.v * (self.w @ ptilde)[np.newaxis, :]) @ vh
        return gain - 0.5 * (a_rho + rho_a)

    def overlap_deviation(self, other):
        """How far the aligned overlap with another basis is from a permutation."""
        o = np.abs(self.v.conj().T @ other.v)
        rows, cols = linear_sum_assignment(-o)
        return float(np.max(1.0 - o[rows, cols]))


def lindblad_evolve(schedule, rho0, config, dconfig, space, omega_r=1.0,
                    target=None, snapshot_times=(), t_end=None):
    """Propagate a density matrix with dressed-basis cavity decay.

    The dissipator is rebuilt every ``rebuild_dt`` while the controls move
    and cached during holds; the coherent part always uses the exact H(t).
    """
    rho = np.asarray(rho0, dtype=np.complex128).copy()
    if abs(np.trace(rho).real - 1.0) > 1e-8:
        raise ValueError("initial density matrix is not trace-1")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise ValueError("initial density matrix is not Hermitian")
    config.check_against(schedule, omega_r)
    ham = TimeDependentHamiltonian.from_schedule(space, omega_r, schedule)
    quad = None
    if dconfig.kappa > 0:
        a = ss.annihilator(space.n_fock)
        quad = ss.embed(a + a.getH(), "resonator", space).tocsr()
    t_end = schedule.t_f if t_end is None else float(t_end)
    grid = _time_grid(t_end, config.record_dt, snapshot_times)
    recorder = DensityRecorder(space, target)

    edges = np.unique(np.concatenate([
        np.arange(0.0, t_end, dconfig.rebuild_dt), [t_end],
        [b for b in schedule.breakpoints() if b < t_end]]))
    dim = space.dim
    dissipator = None
    cached_key = None
    prev_dissipator = None
    basis_flags = []
    worst_overlap = 0.0
    next_pos_check = 0.0

    times, rows, snapshots = [], {}, {}
    snap_set = np.asarray(sorted(snapshot_times))
    for t_a, t_b in zip(edges[:-1], edges[1:]):
        if dconfig.kappa > 0:
            t_mid = 0.5 * (t_a + t_b)
            key = tuple(np.round(ham.coefficients(t_mid).real, 12))
            if key != cached_key:
                prev_dissipator = dissipator
                dissipator = _Dissipator(ham.matrix(t_mid), space, dconfig,
                                         quad, omega_r)
                cached_key = key
                if prev_dissipator is not None:
                    dev = dissipator.overlap_deviation(prev_dissipator)
                    worst_overlap = max(worst_overlap, dev)
                    if dev > 1e-3:
                        basis_flags.append((float(t_mid), dev))

        def rhs(t, y):
            r = y.reshape(dim, dim)
            h = ham.stacked.combine(ham.coefficients(t))
            h_r = h @ r
            r_h = (h @ r.conj().T).conj().T
            dr = -1j * (h_r - r_h)
            if dissipator is not None and dissipator.has_jumps:
                dr += dissipator.apply(r)
            return dr.ravel()

        pts = grid[(grid >= t_a - 1e-12) & (grid <= t_b + 1e-12)]
        pts = np.unique(np.clip(np.append(pts, [t_a, t_b]), t_a, t_b))
        sol = solve_ivp(rhs, (t_a, t_b), rho.ravel(),
                        method=_METHODS[config.method], t_eval=pts,
                        max_step=config.dt_max,
                        first_step=min(config.dt_max, t_b - t_a),
                        rtol=config.tolerance, atol=config.tolerance * 1e-2)
        if not sol.success:
            raise RuntimeError(f"integration failed in [{t_a}, {t_b}]: "
                               f"{sol.message}")
        for i, t in enumerate(sol.t):
            if t < t_a + 1e-12 and times:
                continue
            state = sol.y[:, i].reshape(dim, dim)
            if np.any(np.abs(grid - t) < 1e-9):
                times.append(t)
                for key2, val in recorder(state).items():
                    rows.setdefault(key2, []).append(val)
                if t >= next_pos_check:
                    min_eig = float(np.min(np.linalg.eigvalsh(state)))
                    if min_eig < -1e-6:
                        raise RuntimeError(
                            f"density matrix lost positivity at t={t:.4f}: "
                            f"min eigenvalue {min_eig:.3e}")
                    next_pos_check = t + dconfig.positivity_check_dt
            if snap_set.size and np.any(np.abs(snap_set - t) < 1e-9):
                snapshots[float(t)] = state.copy()
        rho = sol.y[:, -1].reshape(dim, dim).copy()

    columns = {k: np.array(v) for k, v in rows.items()}
    trace_drift = float(np.max(np.abs(columns["norm"] - 1.0)))
    meta = {"trace_drift": trace_drift, "t_end": t_end,
            "eigenbasis_flags": basis_flags,
            "worst_basis_overlap_deviation": worst_overlap,
            "max_top_fock": float(np.max(columns["top_fock_population"]))}
    return Trajectory(np.array(times), columns, snapshots, rho, meta)


# ---------------------------------------------------------------------------
# thermal averaging of pure-state runs


def thermal_weights(n_bar, n_cut):
    """Geometric thermal distribution p_n over the first n_cut Fock states."""
    n = np.arange(n_cut)
    if n_bar <= 0:
        p = np.zeros(n_cut)
        p[0] = 1.0
        return p, 0.0
    p = n_bar ** n / (1.0 + n_bar) ** (n + 1)
    return p, float(1.0 - p.sum())


def thermal_average(schedule, n_bar, n_cut, config, space, omega_r=1.0,
                    target=None, snapshot_times=(), t_end=None, map_fn=None):
    """Average pure-state runs over thermally weighted initial Fock states.

    Solves one run per initial state |n> x |down...down>, then averages the
    fidelity (and the other recorded columns) with the renormalized
    weights.  Returns (averaged trajectory, per-n trajectories, residual
    thermal weight beyond the cut).
    """
    if n_cut < 1:
        raise ValueError("n_cut must be >= 1")
    weights, residual = thermal_weights(n_bar, n_cut)
    if residual > 1e-3:
        warnings.warn(f"thermal weight {residual:.2e} beyond the Fock cut; "
                      f"increase n_cut", RuntimeWarning)
    weights_n = weights / weights.sum()

    def one_run(n):
        psi0 = ss.basis_state(space, n, "d" * space.n_qubits)
        return schrodinger_evolve(schedule, psi0, config, space, omega_r,
                                  target=target, snapshot_times=snapshot_times,
                                  t_end=t_end)
    runs = list((map_fn or map)(one_run, range(n_cut)))

    columns = {}
    for key in runs[0].columns:
        stackcol = np.stack([tr.columns[key] for tr in runs])
        columns[key] = weights_n @ stackcol
    meta = {"n_bar": n_bar, "n_cut": n_cut, "residual_weight": residual,
            "weights": weights.tolist()}
    return Trajectory(runs[0].t.copy(), columns, meta=meta), runs, residual


def gibbs_state(h, temperature):
    """Thermal equilibrium state of a (small, dense) Hamiltonian."""
    h = h.toarray() if hasattr(h, "toarray") else np.asarray(h)
    vals, vecs = np.linalg.eigh(h)
    if temperature <= 0:
        p = np.zeros(len(vals))
        p[0] = 1.0
    else:
        w = np.exp(-(vals - vals[0]) / temperature)
        p = w / w.sum()
    return (vecs * p[np.newaxis, :]) @ vecs.conj().T
