"""Scenario drivers: harvesting runs, sweeps, ensembles, dissipative runs.

Every driver takes a frozen config dataclass, fans independent
trajectories out to a worker pool, and returns a result record whose
``summary()`` is JSON-serializable.  Fixed (config, seed) pairs produce
identical numbers regardless of worker count: all randomness is drawn
up front from a seeded generator and aggregation is order-preserving.
"""

import dataclasses
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import observables as obs
from . import schedules as sch
from . import spectral
from . import statespace as ss
from .evolve import (DissipatorConfig, IntegratorConfig, bose_occupation,
                     lindblad_evolve, schrodinger_evolve, thermal_average)
from .model import build_dicke_hamiltonian


class _BlasLimited:
    """Picklable wrapper keeping worker processes on one BLAS thread each."""

    def __init__(self, fn):
        self.fn = fn

    def __call__(self, item):
        try:
            from threadpoolctl import threadpool_limits
        except ImportError:
            return self.fn(item)
        with threadpool_limits(limits=1):
            return self.fn(item)


class _Caller:
    """Picklable wrapper calling a module-level function with fixed config."""

    def __init__(self, fn, cfg):
        self.fn = fn
        self.cfg = cfg

    def __call__(self, item):
        return self.fn(self.cfg, item)


def pmap(fn, items, workers=1):
    """Order-preserving map over independent work items."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(_BlasLimited(fn), items))


# ---------------------------------------------------------------------------
# configs


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def config_from_mapping(cls, data):
    """Build a config dataclass from a dict, reporting every problem."""
    problems = []
    names = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in names:
            problems.append(f"unknown key {key!r}")
    kwargs = {k: v for k, v in data.items() if k in names}
    if problems:
        raise ConfigError(problems)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError([str(exc)]) from exc


def config_to_mapping(cfg):
    out = dataclasses.asdict(cfg)
    for key, val in out.items():
        if isinstance(val, tuple):
            out[key] = list(val)
    return out


@dataclass(frozen=True)
class GroundHarvestConfig:
    """Four-stage harvesting run (coherent)."""

    n_qubits: int = 4
    n_fock: int = 100
    omega_max: float = 20.0
    omega_min: float = 0.5
    g_max: float = 4.5
    g_min: float = 0.1
    t1: float = 6.5
    t2: float = 6.5
    t3: float = 0.5
    t4: float = 0.5
    hold: float = 1.0
    adiabatic_shape: str = "cosine"
    fast_shape: str = "linear"
    record_dt: float = 0.01
    seed: int = 0
    check_convergence: bool = True
    convergence_tol: float = 0.01
    n_fock_step: int = 20

    def __post_init__(self):
        if self.n_qubits < 2 or self.n_qubits % 2:
            raise ValueError("protocol requires an even n_qubits >= 2")
        if self.n_fock < 2:
            raise ValueError("n_fock must be >= 2")
        for name in ("t1", "t2", "t3", "t4", "hold"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    def protocol(self):
        return sch.GroundProtocolParams(
            n_qubits=self.n_qubits, omega_max=self.omega_max,
            omega_min=self.omega_min, g_max=self.g_max, g_min=self.g_min,
            t1=self.t1, t2=self.t2, t3=self.t3, t4=self.t4, hold=self.hold,
            adiabatic_shape=self.adiabatic_shape, fast_shape=self.fast_shape)

    def space(self, n_fock=None):
        return ss.HilbertSpace(self.n_qubits, n_fock or self.n_fock)


@dataclass
class HarvestResult:
    trajectory: object
    eef: float
    purity_post_min: float
    convergence: dict

    def summary(self):
        return {"eef": self.eef, "purity_post_min": self.purity_post_min,
                "convergence": self.convergence,
                "norm_drift": self.trajectory.meta.get("norm_drift"),
                "max_top_fock": self.trajectory.meta.get("max_top_fock")}


def _harvest_once(cfg, n_fock, disorder=None, initial_fock=0,
                  snapshot_times=()):
    params = cfg.protocol()
    schedule = sch.ground_state_protocol(params)
    if disorder is not None:
        schedule = schedule.with_disorder(**disorder)
    space = cfg.space(n_fock)
    target = spectral.dicke_state(cfg.n_qubits, cfg.n_qubits / 2, 0, axis="x")
    psi0 = ss.basis_state(space, initial_fock, "d" * cfg.n_qubits)
    config = IntegratorConfig.for_schedule(schedule, record_dt=cfg.record_dt)
    traj = schrodinger_evolve(schedule, psi0, config, space, target=target,
                              snapshot_times=snapshot_times)
    return traj, params


def run_ground_harvest(cfg, workers=1):
    """Coherent harvesting run: F(t), purity, extraction fidelity."""
    traj, params = _harvest_once(cfg, cfg.n_fock)
    eef_val = obs.eef(traj, params.t_protocol)
    post = traj.t >= params.t_protocol - 1e-9
    purity_post = float(np.min(traj.columns["purity"][post]))
    convergence = {"checked": False}
    if cfg.check_convergence:
        traj2, _ = _harvest_once(cfg, cfg.n_fock + cfg.n_fock_step)
        drift = abs(obs.eef(traj2, params.t_protocol) - eef_val)
        convergence = {"checked": True, "quantity": "eef",
                       "n_fock_step": cfg.n_fock_step, "drift": drift,
                       "passed": bool(drift < cfg.convergence_tol)}
    return HarvestResult(traj, eef_val, purity_post, convergence)


# ---------------------------------------------------------------------------
# robustness sweep over (g_min, t4) with t3 slaved to t4


@dataclass(frozen=True)
class SweepConfig:
    base: GroundHarvestConfig = field(default_factory=GroundHarvestConfig)
    g_min_values: tuple = (0.1, 0.2, 0.4, 0.7, 1.0)
    t4_values: tuple = (0.25, 0.5, 1.0, 2.0)
    workers_hint: int = 1

    def points(self):
        return [(g, t4) for g in self.g_min_values for t4 in self.t4_values]


def _sweep_point(cfg, point):
    g_min, t4 = point
    sub = replace(cfg.base, g_min=g_min, t3=t4, t4=t4,
                  check_convergence=False)
    traj, params = _harvest_once(sub, sub.n_fock)
    return obs.eef(traj, params.t_protocol)


@dataclass
class SweepResult:
    points: list
    eef: list
    convergence: dict

    def rows(self):
        return [(g, t4, v) for (g, t4), v in zip(self.points, self.eef)]

    def summary(self):
        return {"points": [list(p) for p in self.points], "eef": self.eef,
                "convergence": self.convergence}


def sweep_eef(cfg, workers=1):
    """Extraction fidelity over the (g_min, T4 = T3) grid."""
    values = pmap(_Caller(_sweep_point, cfg), cfg.points(), workers)
    convergence = {"checked": False}
    if cfg.base.check_convergence:
        corner = cfg.points()[0]
        sub = replace(cfg.base, g_min=corner[0], t3=corner[1], t4=corner[1],
                      n_fock=cfg.base.n_fock + cfg.base.n_fock_step,
                      check_convergence=False)
        traj, params = _harvest_once(sub, sub.n_fock)
        drift = abs(obs.eef(traj, params.t_protocol) - values[0])
        convergence = {"checked": True, "corner": list(corner), "drift": drift,
                       "passed": bool(drift < cfg.base.convergence_tol)}
    return SweepResult(cfg.points(), [float(v) for v in values], convergence)


# ---------------------------------------------------------------------------
# thermal extraction


@dataclass(frozen=True)
class ThermalScanConfig:
    base: GroundHarvestConfig = field(default_factory=GroundHarvestConfig)
    temperatures: tuple = tuple(np.round(np.arange(0.0, 2.01, 0.1), 10))
    n_cut: int = 10
    n_cut_check: int = 4

    def __post_init__(self):
        if self.n_cut < 1:
            raise ValueError("n_cut must be >= 1")


def _thermal_run(cfg, n):
    params = cfg.base.protocol()
    t_star = params.t1 + params.t2
    traj, _ = _harvest_once(cfg.base, cfg.base.n_fock, initial_fock=n,
                            snapshot_times=(t_star,))
    return traj


@dataclass
class ThermalScanResult:
    temperatures: np.ndarray
    eef: np.ndarray
    ground_manifold_pop: np.ndarray
    convergence: dict

    def rows(self):
        return list(zip(self.temperatures, self.eef, self.ground_manifold_pop))

    def summary(self):
        return {"temperatures": list(map(float, self.temperatures)),
                "eef": list(map(float, self.eef)),
                "ground_manifold_pop": list(map(float,
                                                self.ground_manifold_pop)),
                "convergence": self.convergence}


def thermal_scan(cfg, workers=1):
    """Extraction fidelity and strong-coupling ground-manifold weight vs T.

    One coherent trajectory per initial Fock state is reused across the
    whole temperature grid; the manifold weight is evaluated at the end of
    the adiabatic preparation against the instantaneous eigenlevels.
    """
    base = replace(cfg.base, check_convergence=False)
    sub_cfg = replace(cfg, base=base)
    n_total = cfg.n_cut + cfg.n_cut_check
    runs = pmap(_Caller(_thermal_run, sub_cfg), range(n_total), workers)

    params = base.protocol()
    t_star = params.t1 + params.t2
    space = base.space()
    g_star, w_star = sch.ground_state_protocol(params).evaluate(t_star)
    h_star = build_dicke_hamiltonian(1.0, g_star[0], w_star[0], space)
    _, vecs = spectral.eigensystem(h_star, 2 ** base.n_qubits)
    manifold_weights = np.array([
        obs.manifold_population(tr.snapshots[t_star], vecs) for tr in runs])

    fid = np.stack([tr.columns["fidelity"] for tr in runs])
    t_grid = runs[0].t
    post = t_grid >= params.t_protocol - 1e-9

    def curve(n_cut, temperature):
        n_bar = float(bose_occupation(np.array([1.0]), temperature)[0])
        weights = (np.array([1.0] + [0.0] * (n_cut - 1)) if n_bar == 0 else
                   n_bar ** np.arange(n_cut) / (1 + n_bar) ** (np.arange(n_cut) + 1))
        weights = weights / weights.sum()
        f_avg = weights @ fid[:n_cut]
        return (float(np.max(f_avg[post])),
                float(weights @ manifold_weights[:n_cut]))

    eef_curve, pop_curve = zip(*[curve(cfg.n_cut, t) for t in cfg.temperatures])
    t_top = max(cfg.temperatures)
    drift = abs(curve(cfg.n_cut, t_top)[0] - curve(n_total, t_top)[0])
    convergence = {"checked": True, "quantity": "eef_at_max_T",
                   "n_cut": cfg.n_cut, "n_cut_check": n_total, "drift": drift,
                   "passed": bool(drift < base.convergence_tol)}
    return ThermalScanResult(np.asarray(cfg.temperatures),
                             np.asarray(eef_curve), np.asarray(pop_curve),
                             convergence)


# ---------------------------------------------------------------------------
# singlet harvesting


@dataclass(frozen=True)
class SingletConfig:
    n_qubits: int = 4
    n_fock: int = 60
    omega_max: float = 10.0
    omega_a: float = 0.48
    omega_b: float = 0.35
    omega_merge: float = 0.40
    g_max: float = 1.8
    g_f: float = 0.0
    t1: float = 6.0
    t2: float = 40.0
    t_release: float = 1.0
    t3: float = 4.0
    hold: float = 2.0
    record_dt: float = 0.02
    zero_offset_control: bool = False
    check_convergence: bool = True
    convergence_tol: float = 0.01
    n_fock_step: int = 20

    def protocol(self):
        omega_a = self.omega_a
        omega_b = self.omega_a if self.zero_offset_control else self.omega_b
        merge = omega_a if self.zero_offset_control else self.omega_merge
        return sch.SingletProtocolParams(
            n_qubits=self.n_qubits, omega_max=self.omega_max,
            omega_a=omega_a, omega_b=omega_b, omega_merge=merge,
            g_max=self.g_max, g_f=self.g_f, t1=self.t1, t2=self.t2,
            t_release=self.t_release, t3=self.t3, hold=self.hold)


@dataclass
class SingletResult:
    trajectory: object
    final_s2: float
    final_purity: float
    fidelity_singlet: float
    fidelity_other_singlet: float
    convergence: dict

    def summary(self):
        return {"final_s2": self.final_s2, "final_purity": self.final_purity,
                "fidelity_singlet": self.fidelity_singlet,
                "fidelity_other_singlet": self.fidelity_other_singlet,
                "convergence": self.convergence}


def _singlet_once(cfg, n_fock):
    params = cfg.protocol()
    schedule = sch.singlet_protocol(params)
    space = ss.HilbertSpace(cfg.n_qubits, n_fock)
    spins = "uudd" if cfg.n_qubits == 4 else "ud"
    psi0 = ss.basis_state(space, 0, spins)
    singlets = spectral.singlet_states(cfg.n_qubits)
    config = IntegratorConfig.for_schedule(schedule, record_dt=cfg.record_dt)
    traj = schrodinger_evolve(schedule, psi0, config, space,
                              target=singlets[0])
    f_s = obs.fidelity_to_qubit_state(traj.final_state, singlets[0], space)
    f_sp = (obs.fidelity_to_qubit_state(traj.final_state, singlets[1], space)
            if len(singlets) > 1 else 0.0)
    return traj, f_s, f_sp


def run_singlet_harvest(cfg, workers=1):
    """Drive a half-excited product state into the total-spin-zero state."""
    traj, f_s, f_sp = _singlet_once(cfg, cfg.n_fock)
    convergence = {"checked": False}
    if cfg.check_convergence:
        _, f_s2, _ = _singlet_once(cfg, cfg.n_fock + cfg.n_fock_step)
        drift = abs(f_s2 - f_s)
        convergence = {"checked": True, "quantity": "fidelity_singlet",
                       "drift": drift,
                       "passed": bool(drift < cfg.convergence_tol)}
    return SingletResult(traj, float(traj.columns["S2_expectation"][-1]),
                         float(traj.columns["purity"][-1]), f_s, f_sp,
                         convergence)


# ---------------------------------------------------------------------------
# protection of the extracted dark state


@dataclass(frozen=True)
class ProtectionConfig:
    n_qubits: int = 4
    n_fock: int = 40
    omega_q: float = 10.0
    g_f_values: tuple = (0.0, 0.5, 1.0, 2.0)
    epsilon_max: float = 0.05
    runs: int = 10
    window: float = 30.0
    record_dt: float = 0.05
    seed: int = 1234
    check_convergence: bool = True
    convergence_tol: float = 0.01
    n_fock_step: int = 20

    def __post_init__(self):
        if not 0 <= self.epsilon_max < 1:
            raise ValueError("epsilon_max must lie in [0, 1)")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")


def _protection_run(cfg, item):
    g_f, eps, n_fock = item
    space = ss.HilbertSpace(cfg.n_qubits, n_fock)
    omegas = cfg.omega_q * (1.0 + np.asarray(eps))
    schedule = sch.constant_schedule(cfg.n_qubits, g_f, omegas, cfg.window)
    singlet = spectral.singlet_states(cfg.n_qubits)[0]
    psi0 = ss.compose(singlet, ss.fock_state(space, 0))
    config = IntegratorConfig.for_schedule(schedule, record_dt=cfg.record_dt)
    traj = schrodinger_evolve(schedule, psi0, config, space, target=singlet)
    return traj.columns["S2_expectation"], traj.t


@dataclass
class ProtectionResult:
    g_f_values: tuple
    t: np.ndarray
    mean_s2: dict          # g_f -> curve
    time_avg_s2: dict      # g_f -> scalar
    convergence: dict

    def summary(self):
        return {"g_f_values": list(self.g_f_values),
                "time_avg_s2": {str(k): float(v)
                                for k, v in self.time_avg_s2.items()},
                "convergence": self.convergence}


def protection_scan(cfg, workers=1):
    """Ensemble-averaged total-spin drift of |0> x |S> for each held coupling.

    Frequency disorder dephases the singlet out of the spin-zero subspace
    at zero coupling; a retained coupling detunes those transitions.
    """
    rng = np.random.default_rng(cfg.seed)
    draws = rng.uniform(-cfg.epsilon_max, cfg.epsilon_max,
                        size=(cfg.runs, cfg.n_qubits))
    items = [(g_f, draws[r], cfg.n_fock)
             for g_f in cfg.g_f_values for r in range(cfg.runs)]
    results = pmap(_Caller(_protection_run, cfg), items, workers)
    t_grid = results[0][1]
    mean_s2, time_avg = {}, {}
    for i, g_f in enumerate(cfg.g_f_values):
        curves = [results[i * cfg.runs + r][0] for r in range(cfg.runs)]
        mean = np.mean(np.stack(curves), axis=0)
        mean_s2[g_f] = mean
        time_avg[g_f] = float(np.mean(mean))
    convergence = {"checked": False}
    if cfg.check_convergence:
        g_top = cfg.g_f_values[-1]
        ref, _ = _protection_run(cfg, (g_top, draws[0], cfg.n_fock))
        big, _ = _protection_run(cfg, (g_top, draws[0],
                                       cfg.n_fock + cfg.n_fock_step))
        drift = float(np.max(np.abs(ref - big)))
        convergence = {"checked": True, "quantity": "s2_curve", "drift": drift,
                       "passed": bool(drift < cfg.convergence_tol)}
    return ProtectionResult(cfg.g_f_values, t_grid, mean_s2, time_avg,
                            convergence)


# ---------------------------------------------------------------------------
# fabrication disorder


@dataclass(frozen=True)
class DisorderConfig:
    base: GroundHarvestConfig = field(default_factory=GroundHarvestConfig)
    kind: str = "coupling"  # or "frequency"
    epsilon_max: float = 0.1
    runs: int = 10
    seed: int = 42

    def __post_init__(self):
        if self.kind not in ("coupling", "frequency"):
            raise ValueError("kind must be 'coupling' or 'frequency'")
        if not 0 <= self.epsilon_max < 1:
            raise ValueError("epsilon_max must lie in [0, 1)")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")


def _disorder_run(cfg, eps):
    key = "coupling_eps" if cfg.kind == "coupling" else "frequency_eps"
    traj, params = _harvest_once(replace(cfg.base, check_convergence=False),
                                 cfg.base.n_fock, disorder={key: eps})
    return traj


@dataclass
class DisorderResult:
    t: np.ndarray
    mean_columns: dict
    mean_eef: float
    sem_eef: float
    mean_final_purity: float
    convergence: dict

    def summary(self):
        return {"mean_eef": self.mean_eef, "sem_eef": self.sem_eef,
                "mean_final_purity": self.mean_final_purity,
                "convergence": self.convergence}


def disorder_monte_carlo(cfg, workers=1):
    """Ensemble means of fidelity and entanglement diagnostics under disorder."""
    rng = np.random.default_rng(cfg.seed)
    draws = rng.uniform(-cfg.epsilon_max, cfg.epsilon_max,
                        size=(cfg.runs, cfg.base.n_qubits))
    runs = pmap(_Caller(_disorder_run, cfg), list(draws), workers)
    params = cfg.base.protocol()
    t_grid = runs[0].t
    mean_columns = {key: np.mean(np.stack([tr.columns[key] for tr in runs]),
                                 axis=0)
                    for key in runs[0].columns}
    eefs = np.array([obs.eef(tr, params.t_protocol) for tr in runs])
    purities = np.array([tr.columns["purity"][-1] for tr in runs])
    convergence = {"checked": False}
    if cfg.base.check_convergence:
        traj_small = _disorder_run(cfg, draws[0])
        big = replace(cfg, base=replace(
            cfg.base, n_fock=cfg.base.n_fock + cfg.base.n_fock_step))
        traj_big = _disorder_run(big, draws[0])
        drift = abs(obs.eef(traj_big, params.t_protocol)
                    - obs.eef(traj_small, params.t_protocol))
        convergence = {"checked": True, "quantity": "eef", "drift": drift,
                       "passed": bool(drift < cfg.base.convergence_tol)}
    return DisorderResult(t_grid, mean_columns, float(np.mean(eefs)),
                          float(np.std(eefs) / np.sqrt(cfg.runs)),
                          float(np.mean(purities)), convergence)


# ---------------------------------------------------------------------------
# dissipative harvesting


@dataclass(frozen=True)
class DissipativeConfig:
    n_qubits: int = 2
    n_fock: int = 60
    quality_factor: float = 100.0
    temperature: float = 0.0
    omega_max: float = 10.0
    omega_min: float = 0.5
    g_max: float = 4.5
    g_min: float = 0.1
    t1: float = 6.5
    t2: float = 6.5
    t3: float = 0.5
    t4: float = 0.5
    hold: float = 1.0
    basis_dim: int = 40
    rebuild_dt: float = 0.05
    rate_floor: float = 0.0
    record_dt: float = 0.05
    method: str = "rk45"
    coherent_n_cut: int = 10
    check_convergence: bool = False
    convergence_tol: float = 0.01
    n_fock_step: int = 20

    def protocol(self):
        return sch.GroundProtocolParams(
            n_qubits=self.n_qubits, omega_max=self.omega_max,
            omega_min=self.omega_min, g_max=self.g_max, g_min=self.g_min,
            t1=self.t1, t2=self.t2, t3=self.t3, t4=self.t4, hold=self.hold)


@dataclass
class DissipativeResult:
    trajectory: object
    eef: float
    eef_coherent: float
    degradation: float
    trace_drift: float
    convergence: dict

    def summary(self):
        return {"eef": self.eef, "eef_coherent": self.eef_coherent,
                "degradation": self.degradation,
                "trace_drift": self.trace_drift,
                "convergence": self.convergence,
                "eigenbasis_flags": len(
                    self.trajectory.meta.get("eigenbasis_flags", []))}


def _thermal_resonator_density(space, temperature):
    n_bar = float(bose_occupation(np.array([1.0]), temperature)[0])
    if n_bar == 0:
        p = np.zeros(space.n_fock)
        p[0] = 1.0
    else:
        n = np.arange(space.n_fock)
        p = n_bar ** n / (1 + n_bar) ** (n + 1)
        p = p / p.sum()
    reg = np.zeros(space.dim_qubits)
    reg[ss.register_index("d" * space.n_qubits)] = 1.0
    return np.kron(np.outer(reg, reg), np.diag(p)).astype(np.complex128)


def _dissipative_once(cfg, n_fock, workers=1):
    params = cfg.protocol()
    schedule = sch.ground_state_protocol(params)
    space = ss.HilbertSpace(cfg.n_qubits, n_fock)
    target = spectral.dicke_state(cfg.n_qubits, cfg.n_qubits / 2, 0, axis="x")
    rho0 = _thermal_resonator_density(space, cfg.temperature)
    config = IntegratorConfig.for_schedule(schedule, record_dt=cfg.record_dt,
                                           method=cfg.method)
    dcfg = DissipatorConfig(kappa=1.0 / cfg.quality_factor,
                            temperature=cfg.temperature,
                            rate_floor=cfg.rate_floor,
                            basis_dim=cfg.basis_dim,
                            rebuild_dt=cfg.rebuild_dt)
    traj = lindblad_evolve(schedule, rho0, config, dcfg, space, target=target)
    eef_val = obs.eef(traj, params.t_protocol)

    # decay-free reference at the same temperature
    int_cfg = IntegratorConfig.for_schedule(schedule, record_dt=cfg.record_dt)
    if cfg.temperature > 0:
        n_bar = float(bose_occupation(np.array([1.0]), cfg.temperature)[0])
        avg, _, _ = thermal_average(schedule, n_bar, cfg.coherent_n_cut,
                                    int_cfg, space, target=target)
        ref_traj = avg
    else:
        psi0 = ss.basis_state(space, 0, "d" * cfg.n_qubits)
        ref_traj = schrodinger_evolve(schedule, psi0, int_cfg, space,
                                      target=target)
    eef_ref = obs.eef(ref_traj, params.t_protocol)
    return traj, eef_val, eef_ref


def dissipative_harvest(cfg, workers=1):
    """Harvesting run with dressed-basis cavity decay and its coherent twin."""
    traj, eef_val, eef_ref = _dissipative_once(cfg, cfg.n_fock, workers)
    convergence = {"checked": False}
    if cfg.check_convergence:
        _, eef2, _ = _dissipative_once(cfg, cfg.n_fock + cfg.n_fock_step,
                                       workers)
        drift = abs(eef2 - eef_val)
        convergence = {"checked": True, "quantity": "eef", "drift": drift,
                       "passed": bool(drift < cfg.convergence_tol)}
    return DissipativeResult(traj, eef_val, eef_ref, eef_ref - eef_val,
                             traj.meta["trace_drift"], convergence)


# ---------------------------------------------------------------------------
# flux-qubit landscape and constrained-pulse harvesting


@dataclass(frozen=True)
class FluxMapConfig:
    alpha: float = 0.6
    beta: float = 6.0
    e_c: float = 4.99
    e_j: float = 99.7
    e_l: float = 2.57
    f_r: float = 0.5
    n_charge: int = 7
    n_osc: int = 30
    n_alpha: int = 15
    n_beta: int = 15
    f_alpha_max: float = 0.70 * np.pi
    f_beta_max: float = 0.96 * np.pi
    endpoint_n_charge: int = 13
    check_convergence: bool = True

    def circuit(self, n_charge=None, n_osc=None):
        from .fluxqubit import CircuitParams
        return CircuitParams(self.alpha, self.beta, self.e_c, self.e_j,
                             self.e_l, self.f_r, n_charge or self.n_charge,
                             n_osc or self.n_osc)

    def grids(self):
        return (np.linspace(0.0, self.f_alpha_max, self.n_alpha),
                np.linspace(0.0, self.f_beta_max, self.n_beta))


@dataclass
class FluxMapResult:
    f_alpha: np.ndarray
    f_beta: np.ndarray
    omega_map: np.ndarray
    g_map: np.ndarray
    ranges: dict
    failures: list
    convergence: dict

    def summary(self):
        return {"omega_range": self.ranges["omega"],
                "g_range": self.ranges["g"],
                "endpoint_refined": self.ranges.get("endpoint_refined", {}),
                "n_failures": len(self.failures),
                "convergence": self.convergence}


def _flux_map_row(cfg, i):
    from . import fluxqubit as fq
    fa_grid, fb_grid = cfg.grids()
    params = cfg.circuit()
    omega_row = np.full(len(fb_grid), np.nan)
    g_row = np.full(len(fb_grid), np.nan)
    fails = []
    for j, fb in enumerate(fb_grid):
        try:
            pt = fq.qubit_spectrum(params,
                                   fq.FluxPoint.sweet_spot(fa_grid[i], fb))
            omega_row[j] = pt.omega_q
            g_row[j] = pt.g
        except Exception as exc:
            fails.append((float(fa_grid[i]), float(fb), repr(exc)))
    return omega_row, g_row, fails


def flux_map(cfg, workers=1):
    """Tunability landscape over the sweet-spot-constrained flux window.

    The grid runs at the standard basis; the two range-defining corners
    (charge modes converge slowly there) are refined with a larger charge
    basis and reported alongside the raw grid extremes.
    """
    from . import fluxqubit as fq
    fa_grid, fb_grid = cfg.grids()
    rows = pmap(_Caller(_flux_map_row, cfg), range(len(fa_grid)), workers)
    omega_map = np.stack([r[0] for r in rows])
    g_map = np.stack([r[1] for r in rows])
    failures = [f for r in rows for f in r[2]]

    ranges = {"omega": [float(np.nanmin(omega_map)), float(np.nanmax(omega_map))],
              "g": [float(np.nanmin(g_map)), float(np.nanmax(g_map))]}
    convergence = {"checked": False}
    if cfg.check_convergence:
        refined = {}
        big = cfg.circuit(n_charge=cfg.endpoint_n_charge)
        for label, (i, j) in (("omega_max", np.unravel_index(
                np.nanargmax(omega_map), omega_map.shape)),
                ("g_min", np.unravel_index(np.nanargmin(g_map), g_map.shape))):
            pt = fq.qubit_spectrum(
                big, fq.FluxPoint.sweet_spot(fa_grid[i], fb_grid[j]))
            refined[label] = {"f_alpha": float(fa_grid[i]),
                              "f_beta": float(fb_grid[j]),
                              "omega_q": pt.omega_q, "g": pt.g}
        ranges["endpoint_refined"] = refined
        drift = abs(refined["omega_max"]["omega_q"]
                    - float(np.nanmax(omega_map)))
        convergence = {"checked": True,
                       "quantity": "omega_max_vs_refined_basis",
                       "drift_relative": drift / refined["omega_max"]["omega_q"],
                       "passed": bool(drift / refined["omega_max"]["omega_q"]
                                      < 0.1)}
    return FluxMapResult(fa_grid, fb_grid, omega_map, g_map, ranges,
                         failures, convergence)


@dataclass(frozen=True)
class FluxPathConfig:
    n_qubits: int = 4
    n_fock: int = 100
    t_up: float = 13.0
    t_down: float = 1.0
    hold: float = 1.0
    pulse_dt: float = 0.05
    samples_per_leg: int = 40
    record_dt: float = 0.01
    alpha: float = 0.6
    beta: float = 6.0
    e_c: float = 4.99
    e_j: float = 99.7
    e_l: float = 2.57
    f_r: float = 0.5
    n_charge: int = 9
    n_osc: int = 30
    check_convergence: bool = True
    convergence_tol: float = 0.01
    n_fock_step: int = 20

    def circuit(self):
        from .fluxqubit import CircuitParams
        return CircuitParams(self.alpha, self.beta, self.e_c, self.e_j,
                             self.e_l, self.f_r, self.n_charge, self.n_osc)


@dataclass
class FluxPathResult:
    columns: dict           # t, f_alpha, f_beta, g, omega_q
    trajectory: object
    eef: float
    endpoints: dict
    convergence: dict

    def summary(self):
        return {"eef": self.eef, "endpoints": self.endpoints,
                "convergence": self.convergence}


def _coupled_pulse(cfg, path):
    """Target coupling pulse: smooth rise to the path maximum, fast return."""
    from . import fluxqubit as fq
    g_lo = float(path.g[0])
    g_hi = float(np.max(path.g))
    t_total = cfg.t_up + cfg.t_down + cfg.hold
    t = np.arange(0.0, t_total + cfg.pulse_dt / 2, cfg.pulse_dt)
    g_target = np.empty_like(t)
    up = t <= cfg.t_up
    g_target[up] = g_lo + (g_hi - g_lo) * 0.5 * (1 - np.cos(np.pi * t[up]
                                                            / cfg.t_up))
    down = (t > cfg.t_up) & (t <= cfg.t_up + cfg.t_down)
    g_target[down] = g_hi + (g_lo - g_hi) * (t[down] - cfg.t_up) / cfg.t_down
    g_target[t > cfg.t_up + cfg.t_down] = g_lo
    return fq.synthesize_path(cfg.circuit(), t, g_target, path=path)


def _flux_path_run(cfg, n_fock, columns):
    schedule = sch.schedule_from_table(columns["t"], columns["g"],
                                       columns["omega_q"], cfg.n_qubits,
                                       t_protocol=cfg.t_up + cfg.t_down)
    space = ss.HilbertSpace(cfg.n_qubits, n_fock)
    target = spectral.dicke_state(cfg.n_qubits, cfg.n_qubits / 2, 0, axis="x")
    psi0 = ss.basis_state(space, 0, "d" * cfg.n_qubits)
    config = IntegratorConfig.for_schedule(schedule, record_dt=cfg.record_dt)
    return schedule, schrodinger_evolve(schedule, psi0, config, space,
                                        target=target)


def flux_path_harvest(cfg, workers=1):
    """Synthesize the constrained (g, w_q) pulse and run the protocol on it."""
    from . import fluxqubit as fq
    path = fq.sample_control_path(cfg.circuit(),
                                  samples_per_leg=cfg.samples_per_leg)
    columns = _coupled_pulse(cfg, path)
    schedule, traj = _flux_path_run(cfg, cfg.n_fock, columns)
    eef_val = obs.eef(traj, schedule.t_protocol)
    endpoints = {"omega_start": float(columns["omega_q"][0]),
                 "omega_bottom": float(np.min(columns["omega_q"])),
                 "omega_end": float(columns["omega_q"][-1]),
                 "g_start": float(columns["g"][0]),
                 "g_peak": float(np.max(columns["g"]))}
    convergence = {"checked": False}
    if cfg.check_convergence:
        _, traj2 = _flux_path_run(cfg, cfg.n_fock + cfg.n_fock_step, columns)
        drift = abs(obs.eef(traj2, schedule.t_protocol) - eef_val)
        convergence = {"checked": True, "quantity": "eef", "drift": drift,
                       "passed": bool(drift < cfg.convergence_tol)}
    return FluxPathResult(columns, traj, eef_val, endpoints, convergence)


# ---------------------------------------------------------------------------
# spectrum exports


@dataclass(frozen=True)
class SpectrumConfig:
    n_qubits: int = 4
    n_fock: int = 140
    omega_q: float = 1.0
    omega_r: float = 1.0
    g_start: float = 0.0
    g_stop: float = 5.0
    g_step: float = 0.05
    k_levels: int = 20
    mode: str = "coupling"      # or "schedule"
    schedule_preset: str = "fig2b"
    t_step: float = 0.25
    label_tolerance: float = 0.05
    check_convergence: bool = True
    convergence_tol: float = 0.01
    n_fock_step: int = 20

    def g_values(self):
        n = int(round((self.g_stop - self.g_start) / self.g_step)) + 1
        return np.linspace(self.g_start, self.g_stop, n)


@dataclass
class SpectrumResult:
    rows: list
    header: tuple
    convergence: dict

    def summary(self):
        return {"n_rows": len(self.rows), "convergence": self.convergence}


def _spectrum_point(cfg, g):
    rows = spectral.spectrum_rows(cfg.n_qubits, cfg.omega_q, cfg.omega_r,
                                  [g], cfg.n_fock, cfg.k_levels,
                                  cfg.label_tolerance)
    return rows


def spectrum_scan(cfg, workers=1):
    """Labelled level diagram vs coupling, or sampled along a schedule."""
    if cfg.mode == "coupling":
        chunks = pmap(_Caller(_spectrum_point, cfg), cfg.g_values(), workers)
        rows = [row for chunk in chunks for row in chunk]
        header = ("g", "level_index", "energy_minus_E0", "s", "m_x", "n")
    else:
        from .model import TimeDependentHamiltonian
        from .presets import PRESETS
        preset_cfg = config_from_mapping(GroundHarvestConfig,
                                         PRESETS[cfg.schedule_preset]["config"])
        schedule = sch.ground_state_protocol(preset_cfg.protocol())
        space = ss.HilbertSpace(preset_cfg.n_qubits, cfg.n_fock)
        ham = TimeDependentHamiltonian.from_schedule(space, cfg.omega_r,
                                                     schedule)
        rows = []
        for t in np.arange(0.0, schedule.t_f + cfg.t_step / 2, cfg.t_step):
            vals, vecs = spectral.eigensystem(ham.matrix(t), cfg.k_levels)
            g_t = schedule.evaluate(t)[0][0]
            levels = spectral.label_levels(vals, vecs, space,
                                           g_t / cfg.omega_r,
                                           cfg.label_tolerance)
            for idx, lv in enumerate(levels):
                rows.append((t, idx, lv.energy - vals[0],
                             lv.s if lv.labeled else np.nan,
                             lv.m_x if lv.labeled else np.nan,
                             lv.n if lv.labeled else np.nan))
        header = ("t", "level_index", "energy_minus_E0", "s", "m_x", "n")

    convergence = {"checked": False}
    if cfg.check_convergence and cfg.mode == "coupling":
        g_top = cfg.g_values()[-1]
        if g_top > 0:
            base_rows = _spectrum_point(cfg, g_top)
            big = replace(cfg, n_fock=cfg.n_fock + cfg.n_fock_step,
                          check_convergence=False)
            big_rows = _spectrum_point(big, g_top)
            drift = max(abs(a[2] - b[2])
                        for a, b in zip(base_rows, big_rows))
            convergence = {"checked": True, "quantity": "levels_at_g_max",
                           "drift": drift,
                           "passed": bool(drift < cfg.convergence_tol)}
    return SpectrumResult(rows, header, convergence)
