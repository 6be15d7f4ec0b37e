"""Time-dependent control pulses for the couplings g_i(t) and splittings w_q^i(t).

A schedule is a set of control modes: per-qubit weight vectors paired with
scalar profiles, so that g_i(t) = sum_m w_i^m f_m(t) (and likewise for
w_q^i).  The symmetric protocols use a single mode with unit weights;
multiplicative disorder scales the weights; the singlet protocol uses two
frequency groups.  Profiles are piecewise ramps (linear / cosine / hold)
or monotone-cubic interpolants of externally supplied sample tables.
"""

import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import PchipInterpolator

RAMP_SHAPES = ("linear", "cosine", "hold")


@dataclass(frozen=True)
class ProfileSegment:
    duration: float
    v0: float
    v1: float
    shape: str = "linear"

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("segment duration must be nonnegative")
        if self.shape not in RAMP_SHAPES:
            raise ValueError(f"shape must be one of {RAMP_SHAPES}, got {self.shape!r}")
        if self.shape == "hold" and self.v0 != self.v1:
            raise ValueError("hold segments must have equal endpoints")


class PiecewiseProfile:
    """Scalar control profile made of ordered ramp segments.

    Evaluation outside [0, t_f] clamps to the boundary values.  Consecutive
    segments must match endpoint values; zero-duration segments carry
    instantaneous jumps (degenerate quench limit) and are exempt.
    """

    def __init__(self, segments):
        self.segments = [s if isinstance(s, ProfileSegment) else ProfileSegment(*s)
                         for s in segments]
        if not self.segments:
            raise ValueError("profile needs at least one segment")
        for prev, nxt in zip(self.segments, self.segments[1:]):
            if prev.duration > 0 and nxt.duration > 0 and \
                    abs(prev.v1 - nxt.v0) > 1e-12 * max(1.0, abs(prev.v1)):
                raise ValueError(
                    f"discontinuous profile: segment ends at {prev.v1}, "
                    f"next starts at {nxt.v0}")
        durations = np.array([s.duration for s in self.segments])
        self._ends = np.cumsum(durations)
        self._starts = self._ends - durations
        self.t_f = float(self._ends[-1])

    def __call__(self, t):
        if t <= 0.0:
            return self.segments[0].v0
        if t >= self.t_f:
            return self.segments[-1].v1
        k = int(np.searchsorted(self._ends, t, side="left"))
        seg = self.segments[k]
        if seg.duration == 0.0:
            return seg.v1
        return _ramp(seg, (t - self._starts[k]) / seg.duration)

    def values(self, ts):
        return np.array([self(t) for t in np.asarray(ts, dtype=float)])

    def breakpoints(self):
        return np.concatenate(([0.0], self._ends))

    def reversed(self):
        segs = [ProfileSegment(s.duration, s.v1, s.v0, s.shape)
                for s in self.segments[::-1]]
        return PiecewiseProfile(segs)

    def endpoint_values(self):
        return np.array([[s.v0, s.v1] for s in self.segments])

    def to_dict(self):
        return {"kind": "piecewise",
                "segments": [[s.duration, s.v0, s.v1, s.shape]
                             for s in self.segments]}


def _ramp(seg, tau):
    if seg.shape == "hold":
        return seg.v0
    if seg.shape == "linear":
        return seg.v0 + (seg.v1 - seg.v0) * tau
    return seg.v0 + (seg.v1 - seg.v0) * 0.5 * (1.0 - np.cos(np.pi * tau))


class SampledProfile:
    """Monotone-cubic interpolation of (t, value) samples, clamped outside."""

    def __init__(self, t, v):
        t = np.asarray(t, dtype=float)
        v = np.asarray(v, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or len(t) < 2:
            raise ValueError("need matching 1d sample arrays of length >= 2")
        if np.any(np.diff(t) <= 0):
            raise ValueError("sample times must be strictly increasing")
        self.t = t
        self.v = v
        self.t_f = float(t[-1])
        self._interp = PchipInterpolator(t, v, extrapolate=False)

    def __call__(self, t):
        t = np.clip(t, self.t[0], self.t[-1])
        return float(self._interp(t))

    def values(self, ts):
        ts = np.clip(np.asarray(ts, dtype=float), self.t[0], self.t[-1])
        return self._interp(ts)

    def breakpoints(self):
        return np.array([self.t[0], self.t_f])

    def reversed(self):
        return SampledProfile(self.t_f - self.t[::-1], self.v[::-1])

    def endpoint_values(self):
        return np.array([[self.v.min(), self.v.max()]])

    def to_dict(self):
        return {"kind": "sampled", "t": self.t.tolist(), "v": self.v.tolist()}


def _profile_from_dict(d):
    if d["kind"] == "piecewise":
        return PiecewiseProfile([ProfileSegment(*row) for row in d["segments"]])
    if d["kind"] == "sampled":
        return SampledProfile(d["t"], d["v"])
    raise ValueError(f"unknown profile kind {d['kind']!r}")


class ControlSchedule:
    """Per-qubit control functions assembled from weighted scalar modes."""

    def __init__(self, n_qubits, g_modes, omega_modes, t_protocol=None):
        self.n_qubits = int(n_qubits)
        self.g_modes = [(np.asarray(w, dtype=float), p) for w, p in g_modes]
        self.omega_modes = [(np.asarray(w, dtype=float), p) for w, p in omega_modes]
        for w, _ in self.g_modes + self.omega_modes:
            if w.shape != (self.n_qubits,):
                raise ValueError("mode weights must have length n_qubits")
        t_fs = [p.t_f for _, p in self.g_modes + self.omega_modes]
        if max(t_fs) - min(t_fs) > 1e-12:
            raise ValueError("all control profiles must share the same duration")
        self.t_f = float(max(t_fs))
        self.t_protocol = float(t_protocol) if t_protocol is not None else self.t_f
        for w, p in self.g_modes:
            if np.any(w < 0) or np.any(p.endpoint_values() < -1e-12):
                raise ValueError("couplings g_i(t) must stay nonnegative")

    def evaluate(self, t):
        """Per-qubit control vectors (g_i(t), w_q^i(t))."""
        g = np.zeros(self.n_qubits)
        for w, p in self.g_modes:
            g += w * p(t)
        omega = np.zeros(self.n_qubits)
        for w, p in self.omega_modes:
            omega += w * p(t)
        return g, omega

    def breakpoints(self):
        pts = np.concatenate([p.breakpoints()
                              for _, p in self.g_modes + self.omega_modes])
        pts = np.unique(np.round(pts, 12))
        return pts[(pts >= 0) & (pts <= self.t_f + 1e-12)]

    def with_disorder(self, coupling_eps=None, frequency_eps=None):
        """Multiplicative per-qubit disorder factors (1 + eps_i) on the controls."""
        g_modes = self.g_modes
        omega_modes = self.omega_modes
        if coupling_eps is not None:
            eps = np.asarray(coupling_eps, dtype=float)
            g_modes = [(w * (1.0 + eps), p) for w, p in g_modes]
        if frequency_eps is not None:
            eps = np.asarray(frequency_eps, dtype=float)
            omega_modes = [(w * (1.0 + eps), p) for w, p in omega_modes]
        return ControlSchedule(self.n_qubits, g_modes, omega_modes,
                               t_protocol=self.t_protocol)

    def time_reversed(self):
        rev = lambda modes: [(w, p.reversed()) for w, p in modes]
        return ControlSchedule(self.n_qubits, rev(self.g_modes),
                               rev(self.omega_modes),
                               t_protocol=self.t_f - self.t_protocol)

    def to_dict(self):
        return {
            "n_qubits": self.n_qubits,
            "t_protocol": self.t_protocol,
            "g_modes": [{"weights": w.tolist(), "profile": p.to_dict()}
                        for w, p in self.g_modes],
            "omega_modes": [{"weights": w.tolist(), "profile": p.to_dict()}
                            for w, p in self.omega_modes],
        }

    @classmethod
    def from_dict(cls, d):
        unpack = lambda modes: [(m["weights"], _profile_from_dict(m["profile"]))
                                for m in modes]
        return cls(d["n_qubits"], unpack(d["g_modes"]), unpack(d["omega_modes"]),
                   t_protocol=d.get("t_protocol"))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def evaluate(schedule, t):
    """Module-level alias for ControlSchedule.evaluate."""
    return schedule.evaluate(t)


@dataclass(frozen=True)
class GroundProtocolParams:
    """Four-stage ground-state harvesting pulse parameters (units of w_r)."""

    n_qubits: int
    omega_max: float = 20.0
    omega_min: float = 0.5
    g_max: float = 4.5
    g_min: float = 0.1
    t1: float = 6.5
    t2: float = 6.5
    t3: float = 0.5
    t4: float = 0.5
    hold: float = 1.0
    omega_r: float = 1.0
    adiabatic_shape: str = "cosine"
    fast_shape: str = "linear"

    def __post_init__(self):
        if not self.omega_max > self.omega_r > self.omega_min:
            raise ValueError("need omega_max > omega_r > omega_min")
        if not (self.g_max > self.omega_r > self.g_min >= 0):
            raise ValueError("need g_max > omega_r > g_min >= 0")

    @property
    def t_protocol(self):
        return self.t1 + self.t2 + self.t3 + self.t4


def ground_state_protocol(p):
    """Adiabatic entry into the strong-coupling regime, fast reversed exit.

    Stage 1 ramps the coupling up at large detuning, stage 2 lowers the
    qubit frequency, stages 3 and 4 undo both fast, and a trailing hold
    gives the extraction-fidelity search its window.
    """
    g_prof = PiecewiseProfile([
        (p.t1, p.g_min, p.g_max, p.adiabatic_shape),
        (p.t2, p.g_max, p.g_max, "hold"),
        (p.t3, p.g_max, p.g_min, p.fast_shape),
        (p.t4, p.g_min, p.g_min, "hold"),
        (p.hold, p.g_min, p.g_min, "hold"),
    ])
    w_prof = PiecewiseProfile([
        (p.t1, p.omega_max, p.omega_max, "hold"),
        (p.t2, p.omega_max, p.omega_min, p.adiabatic_shape),
        (p.t3, p.omega_min, p.omega_min, "hold"),
        (p.t4, p.omega_min, p.omega_max, p.fast_shape),
        (p.hold, p.omega_max, p.omega_max, "hold"),
    ])
    ones = np.ones(p.n_qubits)
    return ControlSchedule(p.n_qubits, [(ones, g_prof)], [(ones, w_prof)],
                           t_protocol=p.t_protocol)


@dataclass(frozen=True)
class SingletProtocolParams:
    """Singlet-harvesting pulse: two frequency groups with a closing offset.

    For four qubits the groups are the pairs (1,2) and (3,4); for two
    qubits each group is a single qubit (the offset is what breaks the
    permutation symmetry and couples total-spin sectors).
    """

    n_qubits: int
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
    omega_r: float = 1.0
    pair_offsets: tuple = None

    def __post_init__(self):
        if self.n_qubits not in (2, 4):
            raise ValueError("singlet protocol supports N = 2 or 4")
        if self.n_qubits == 2 and self.pair_offsets is not None:
            raise ValueError("pair offsets need two qubit pairs; N=2 has one")
        if not (self.omega_b <= self.omega_a < 0.5 * self.omega_r):
            raise ValueError("group frequencies must satisfy "
                             "omega_b <= omega_a < omega_r / 2")
        if self.g_f < 0 or self.g_max <= 0:
            raise ValueError("couplings must be nonnegative with g_max > 0")

    @property
    def t_protocol(self):
        return self.t1 + self.t2 + self.t_release + self.t3

    def group_masks(self):
        if self.n_qubits == 4:
            return np.array([1.0, 1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0, 1.0])
        return np.array([1.0, 0.0]), np.array([0.0, 1.0])

    def group_frequencies(self):
        wa, wb = self.omega_a, self.omega_b
        if self.pair_offsets is not None:
            wa, wb = wa + self.pair_offsets[0], wb + self.pair_offsets[1]
        return wa, wb


def singlet_protocol(p):
    """Harvest the total-spin-zero state from a half-excited product state."""
    wa, wb = p.group_frequencies()
    g_prof = PiecewiseProfile([
        (p.t1, 0.0, 0.0, "hold"),
        (p.t2, 0.0, p.g_max, "cosine"),
        (p.t_release, p.g_max, p.g_f, "linear"),
        (p.t3, p.g_f, p.g_f, "hold"),
        (p.hold, p.g_f, p.g_f, "hold"),
    ])

    def freq_profile(w_target):
        return PiecewiseProfile([
            (p.t1, p.omega_max, w_target, "cosine"),
            (p.t2, w_target, p.omega_merge, "cosine"),
            (p.t_release, p.omega_merge, p.omega_merge, "hold"),
            (p.t3, p.omega_merge, p.omega_max, "cosine"),
            (p.hold, p.omega_max, p.omega_max, "hold"),
        ])

    mask_a, mask_b = p.group_masks()
    ones = np.ones(p.n_qubits)
    return ControlSchedule(
        p.n_qubits,
        [(ones, g_prof)],
        [(mask_a, freq_profile(wa)), (mask_b, freq_profile(wb))],
        t_protocol=p.t_protocol)


def constant_schedule(n_qubits, g_values, omega_values, duration):
    """Time-independent controls (one mode per qubit where values differ)."""
    g_values = np.broadcast_to(np.asarray(g_values, dtype=float), (n_qubits,))
    omega_values = np.broadcast_to(np.asarray(omega_values, dtype=float),
                                   (n_qubits,))

    def modes(values):
        out = []
        for val in np.unique(values):
            mask = (values == val).astype(float)
            out.append((mask, PiecewiseProfile([(duration, val, val, "hold")])))
        return out

    return ControlSchedule(n_qubits, modes(g_values), modes(omega_values),
                           t_protocol=0.0)


def schedule_from_table(t, g, omega, n_qubits, t_protocol=None):
    """Coupled-pulse mode: symmetric controls from sampled (t, g, w_q) rows."""
    ones = np.ones(n_qubits)
    return ControlSchedule(n_qubits,
                           [(ones, SampledProfile(t, g))],
                           [(ones, SampledProfile(t, omega))],
                           t_protocol=t_protocol)


def save_pulse_table(path, t, g, omega):
    rows = np.column_stack([t, g, omega])
    header = "t,g,omega_q"
    np.savetxt(path, rows, delimiter=",", header=header, comments="",
               fmt="%.12g")


def load_pulse_table(path):
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return rows[:, 0], rows[:, 1], rows[:, 2]
