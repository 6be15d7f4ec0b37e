"""Four-junction flux-qubit circuit: spectrum, tunability maps, pulse synthesis.

Two junctions of the qubit loop are SQUID loops acting as flux-tunable
junctions of relative size alpha and beta.  After flux quantization
eliminates three phases, the circuit Hamiltonian lives on three modes
(phi_1, phi_3, phitilde_4).  Modes 1 and 3 use charge bases (periodic
potentials); once the resonator-induced E_L phitilde_4^2 / 2 term is
included, mode 4 is no longer periodic and uses the harmonic-oscillator
eigenbasis of the quadratic part, with cos(phitilde_4) built from the
displacement operator.

All energies are E/h in GHz; the resonator frequency enters as
f_r = w_r / 2pi (default 0.5 GHz).
"""

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import PchipInterpolator
from scipy.linalg import expm
from scipy.optimize import brentq

from .model import coupling_from_circuit


@dataclass(frozen=True)
class CircuitParams:
    """Junction ratios, circuit energies (GHz), and basis truncations."""

    alpha: float = 0.6
    beta: float = 6.0
    e_c: float = 4.99
    e_j: float = 99.7
    e_l: float = 2.57
    f_r: float = 0.5
    n_charge: int = 7
    n_osc: int = 30

    def __post_init__(self):
        if min(self.alpha, self.beta, self.e_c, self.e_j, self.e_l,
               self.f_r) <= 0:
            raise ValueError("junction ratios and energies must be positive")
        if self.n_charge < 3:
            raise ValueError("n_charge must be >= 3")
        if self.n_osc < 4:
            raise ValueError("n_osc must be >= 4")

    @property
    def kinetic_prefactor(self):
        return 4.0 * self.e_c / (self.alpha + self.beta
                                 + 2.0 * self.alpha * self.beta)


@dataclass(frozen=True)
class FluxPoint:
    """Magnetic frustrations (radians) through the three loops."""

    f_alpha: float
    f_beta: float
    f_epsilon: float

    @classmethod
    def sweet_spot(cls, f_alpha, f_beta):
        """Bias with f_epsilon slaved so the shifted frustration stays at pi."""
        return cls(f_alpha, f_beta, (2.0 * np.pi + f_alpha - f_beta) / 2.0)

    @property
    def f_eps_tilde(self):
        return self.f_epsilon + (self.f_beta - self.f_alpha) / 2.0


def _charge_mode(n_charge):
    dim = 2 * n_charge + 1
    n_op = sp.diags(np.arange(-n_charge, n_charge + 1, dtype=float))
    shift_up = sp.diags(np.ones(dim - 1), -1)  # e^{i phi} |n> = |n+1>
    return n_op.tocsr(), shift_up.tocsr()


def _oscillator_mode(params, f_beta):
    """HO eigenbasis of the quadratic part of mode 4.

    The quadratic stiffness includes the beta junction expanded around
    phitilde_4 = 0 (its flux-tuned Josephson energy dominates E_L over
    most of the window); matching the basis width to the actual well is
    what makes ~30 levels converge.
    """
    a_coef = params.kinetic_prefactor * (1.0 + 2.0 * params.alpha)
    b_coef = params.e_l + params.e_j * params.beta * max(
        np.cos(f_beta / 2.0), 0.0)
    phi_zpf = (a_coef / (2.0 * b_coef)) ** 0.25
    n_zpf = 1.0 / (2.0 * phi_zpf)
    dim = params.n_osc
    b = np.diag(np.sqrt(np.arange(1, dim)), 1)
    phi = phi_zpf * (b + b.T)
    n_op = 1j * n_zpf * (b.T - b)
    e_iphi = expm(1j * phi)
    return (sp.csr_matrix(n_op), sp.csr_matrix(e_iphi),
            sp.csr_matrix(phi.astype(complex)))


def _kron3(a, b, c):
    return sp.kron(sp.kron(a, b, format="csr"), c, format="csr")


def mode_operators(params, include_renormalization=True, f_beta=0.0):
    """Per-mode charge and phase operators embedded on the 3-mode space.

    With the renormalization term the mode-4 basis is matched to the
    flux-dependent quadratic part, so the operators depend on f_beta.
    """
    n1, e1 = _charge_mode(params.n_charge)
    n3, e3 = _charge_mode(params.n_charge)
    if include_renormalization:
        n4, e4, phi4 = _oscillator_mode(params, f_beta)
    else:
        n4, e4 = _charge_mode(params.n_charge)
        phi4 = None
    d1, d3, d4 = n1.shape[0], n3.shape[0], n4.shape[0]
    i1, i3, i4 = (sp.identity(d, dtype=complex, format="csr")
                  for d in (d1, d3, d4))
    ops = {
        "n1": _kron3(n1, i3, i4),
        "n3": _kron3(i1, n3, i4),
        "n4": _kron3(i1, i3, n4),
        "cos1": _kron3((e1 + e1.getH()) / 2.0, i3, i4),
        "cos3": _kron3(i1, (e3 + e3.getH()) / 2.0, i4),
        "cos4": _kron3(i1, i3, (e4 + e4.getH()) / 2.0),
        "e_loop": _kron3(e1, e3, e4),  # e^{i(phi1 + phi3 + phitilde4)}
    }
    if phi4 is not None:
        ops["phi4"] = _kron3(i1, i3, phi4)
    return ops


@lru_cache(maxsize=128)
def _cached_mode_operators(params, include_renormalization, f_beta_key):
    return mode_operators(params, include_renormalization, float(f_beta_key))


def _ops_for(params, flux, include_renormalization=True):
    key = round(float(flux.f_beta), 12) if include_renormalization else 0.0
    return _cached_mode_operators(params, include_renormalization, key)


def qubit_hamiltonian(params, flux, include_renormalization=True, ops=None):
    """Three-mode circuit Hamiltonian at a flux bias point (GHz units)."""
    ops = ops or _ops_for(params, flux, include_renormalization)
    al, be = params.alpha, params.beta
    pref = params.kinetic_prefactor
    n1, n3, n4 = ops["n1"], ops["n3"], ops["n4"]
    kinetic = pref * ((al + be + al * be) * (n1 @ n1 + n3 @ n3)
                      + (1.0 + 2.0 * al) * (n4 @ n4)
                      - 2.0 * al * be * (n1 @ n3)
                      - 2.0 * al * ((n1 + n3) @ n4))
    loop = np.exp(1j * flux.f_eps_tilde) * ops["e_loop"]
    cos_loop = (loop + loop.getH()) / 2.0
    potential = -params.e_j * (
        ops["cos1"] + ops["cos3"]
        + al * np.cos(flux.f_alpha / 2.0) * cos_loop
        + be * np.cos(flux.f_beta / 2.0) * ops["cos4"])
    h = kinetic + potential
    if include_renormalization:
        phi4 = ops["phi4"]
        h = h + 0.5 * params.e_l * (phi4 @ phi4)
    return h.tocsr()


def _lowest_eigh(h, params, k=3):
    """Lowest k eigenpairs; plain Lanczos first, shift-inverted on failure.

    For the shift-invert fallback: the potential is bounded below by
    -E_J (2 + alpha + beta) and the charging form is positive
    semidefinite, so a shift just below that bound targets the ground
    levels.
    """
    try:
        vals, vecs = spla.eigsh(h.tocsr(), k=k, which="SA", tol=1e-10,
                                maxiter=30000)
    except spla.ArpackNoConvergence:
        sigma = -params.e_j * (2.0 + params.alpha + params.beta) - 1.0
        vals, vecs = spla.eigsh(h.tocsc(), k=k, sigma=sigma, which="LM")
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


@dataclass
class QubitPoint:
    """Two-level reduction of the circuit at one flux bias."""

    omega_q: float          # qubit splitting, units of w_r
    g: float                # qubit-resonator coupling, units of w_r
    delta_phi_eg: float     # |<e| phitilde_4 |g>|
    gap_ratio: float        # (E_2 - E_1) / (E_1 - E_0)
    crossing_flag: bool


def qubit_spectrum(params, flux, ops=None, check_convergence=False):
    """(w_q, |Delta phi_eg|, g) at a flux point, in resonator units.

    The coupling uses phi_0 = 2 <e|Delta phi|g> with Delta phi = phitilde_4,
    fed through the circuit-to-model coupling formula.
    """
    ops = ops or _ops_for(params, flux)
    h = qubit_hamiltonian(params, flux, True, ops=ops)
    vals, vecs = _lowest_eigh(h, params, k=3)
    if check_convergence:
        bigger = CircuitParams(params.alpha, params.beta, params.e_c,
                               params.e_j, params.e_l, params.f_r,
                               params.n_charge + 2, params.n_osc + 6)
        h2 = qubit_hamiltonian(bigger, flux, True)
        vals2, _ = _lowest_eigh(h2, bigger, k=2)
        shift = np.max(np.abs(vals[:2] - vals2[:2]))
        if shift > 1e-3 * params.e_c:
            raise RuntimeError(
                f"basis not converged: lowest levels shift {shift:.2e} GHz "
                f"under n_charge+2 / n_osc+6")
    omega_q_ghz = vals[1] - vals[0]
    dphi = vecs[:, 1].conj() @ (ops["phi4"] @ vecs[:, 0])
    phi0 = 2.0 * abs(dphi)
    g_ghz = coupling_from_circuit(phi0, params.f_r, params.e_l)
    gap_ratio = (vals[2] - vals[1]) / max(omega_q_ghz, 1e-12)
    return QubitPoint(omega_q=omega_q_ghz / params.f_r,
                      g=g_ghz / params.f_r,
                      delta_phi_eg=abs(dphi),
                      gap_ratio=gap_ratio,
                      crossing_flag=gap_ratio < 0.1)


def flux_landscape(params, f_alpha_values, f_beta_values, progress=None):
    """Maps of w_q/w_r and g/w_r over a sweet-spot-constrained flux grid.

    Returns (omega_map, g_map, failures); failed grid points are recorded
    and left as NaN rather than aborting the scan.
    """
    omega_map = np.full((len(f_alpha_values), len(f_beta_values)), np.nan)
    g_map = np.full_like(omega_map, np.nan)
    failures = []
    for i, fa in enumerate(f_alpha_values):
        for j, fb in enumerate(f_beta_values):
            try:
                point = qubit_spectrum(
                    params, FluxPoint.sweet_spot(fa, fb))
                omega_map[i, j] = point.omega_q
                g_map[i, j] = point.g
            except Exception as exc:  # record, keep scanning
                failures.append((fa, fb, repr(exc)))
            if progress:
                progress(i, j)
    return omega_map, g_map, failures


def write_landscape_csv(path, f_alpha_values, f_beta_values, omega_map, g_map):
    with open(path, "w") as fh:
        fh.write("f_alpha,f_beta,omega_q_over_omega_r,g_over_omega_r\n")
        for i, fa in enumerate(f_alpha_values):
            for j, fb in enumerate(f_beta_values):
                fh.write(f"{fa:.12g},{fb:.12g},{omega_map[i, j]:.12g},"
                         f"{g_map[i, j]:.12g}\n")


#: default control path in the (f_alpha, f_beta) plane: from the origin
#: (w_q = 22.8 w_r, g = 0.25 w_r) out to the strong-coupling edge
#: (w_q = 0.69 w_r, g = 4.1 w_r) and back along the same line.  The loop is
#: published only graphically; these vertices reproduce the quoted
#: endpoint frequencies (22.8 -> 0.7 -> 22.8) with monotone coupling per
#: leg.
DEFAULT_PATH_VERTICES = ((0.0, 0.0),
                         (0.30 * np.pi, 0.96 * np.pi))


@dataclass
class ControlPath:
    """Sampled flux path with monotone interpolants of g and w_q per leg."""

    s: np.ndarray
    f_alpha: np.ndarray
    f_beta: np.ndarray
    g: np.ndarray
    omega_q: np.ndarray

    def leg_bounds(self):
        """Split the path at the coupling maximum: an up leg and a down leg."""
        i_max = int(np.argmax(self.g))
        return (0, i_max), (i_max, len(self.s) - 1)


def sample_control_path(params, vertices=DEFAULT_PATH_VERTICES,
                        samples_per_leg=48, round_trip=True):
    """Diagonalize along the polyline; a round trip retraces it backwards."""
    vertices = [np.asarray(v, dtype=float) for v in vertices]
    if round_trip:
        vertices = vertices + vertices[-2::-1]
    lengths = [np.linalg.norm(b - a) for a, b in zip(vertices, vertices[1:])]
    total = sum(lengths)
    points = []
    s_values = []
    s0 = 0.0
    for (a, b), ell in zip(zip(vertices, vertices[1:]), lengths):
        taus = np.linspace(0.0, 1.0, samples_per_leg, endpoint=False)
        for tau in taus:
            points.append(a + tau * (b - a))
            s_values.append(s0 + tau * ell / total)
        s0 += ell / total
    points.append(vertices[-1])
    s_values.append(1.0)

    g_vals, w_vals = [], []
    for fa, fb in points:
        point = qubit_spectrum(params, FluxPoint.sweet_spot(fa, fb))
        g_vals.append(point.g)
        w_vals.append(point.omega_q)
    pts = np.asarray(points)
    return ControlPath(np.asarray(s_values), pts[:, 0], pts[:, 1],
                       np.asarray(g_vals), np.asarray(w_vals))


def synthesize_path(params, t, g_target, path=None, vertices=DEFAULT_PATH_VERTICES,
                    samples_per_leg=48):
    """Invert a requested coupling pulse g(t) into flux biases and w_q(t).

    The requested pulse must rise to its maximum once and come back (the
    path's achievable coupling is monotone per leg); each sample is
    inverted by root-finding on the monotone interpolant of g(s).
    Returns a dict of sampled columns (t, f_alpha, f_beta, g, omega_q).
    """
    t = np.asarray(t, dtype=float)
    g_target = np.asarray(g_target, dtype=float)
    if path is None:
        path = sample_control_path(params, vertices, samples_per_leg)
    g_lo = max(path.g[0], path.g[-1])
    g_hi = path.g.max()
    if np.any(g_target > g_hi + 1e-9) or np.any(g_target < min(path.g) - 1e-9):
        raise ValueError(f"requested coupling outside achievable range "
                         f"[{min(path.g):.3g}, {g_hi:.3g}]")

    (up_a, up_b), (dn_a, dn_b) = path.leg_bounds()
    i_peak = int(np.argmax(g_target))
    columns = {"t": t, "f_alpha": np.empty_like(t), "f_beta": np.empty_like(t),
               "g": np.empty_like(t), "omega_q": np.empty_like(t)}
    for leg, idx in ((slice(up_a, up_b + 1), np.arange(0, i_peak + 1)),
                     (slice(dn_a, dn_b + 1), np.arange(i_peak + 1, len(t)))):
        if len(idx) == 0:
            continue
        s_leg = path.s[leg]
        g_leg = path.g[leg]
        order = np.argsort(g_leg)
        g_sorted, s_sorted = g_leg[order], s_leg[order]
        keep = np.concatenate([[True], np.diff(g_sorted) > 1e-12])
        g_interp = PchipInterpolator(g_sorted[keep], s_sorted[keep])
        interp = {name: PchipInterpolator(s_leg, getattr(path, name)[leg])
                  for name in ("f_alpha", "f_beta", "g", "omega_q")}
        for i in idx:
            target = np.clip(g_target[i], g_leg.min(), g_leg.max())
            s_val = float(g_interp(target))
            for name in ("f_alpha", "f_beta", "omega_q"):
                columns[name][i] = float(interp[name](s_val))
            columns["g"][i] = target
    return columns


def write_path_csv(path_file, columns):
    names = ("t", "f_alpha", "f_beta", "g", "omega_q")
    with open(path_file, "w") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*(columns[n] for n in names)):
            fh.write(",".join(f"{v:.12g}" for v in row) + "\n")
