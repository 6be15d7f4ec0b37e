"""Eigen-analysis and angular-momentum state constructions.

In the strong-coupling regime the spectrum organises into near-degenerate
manifolds of displaced photon-number states labelled (s, m_x, n); the
in-manifold splittings follow delta_E = Delta [m_x^2 - s(s+1)] with
Delta = w_q^2 w_r / (2 g^2).  This module computes exact eigensystems,
builds the labelled target states, and classifies numerical eigenvectors.
"""

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import statespace as ss

#: single-qubit map sending the z basis onto the rotated (x) basis,
#: columns are (down+up)/sqrt2 and (down-up)/sqrt2 in (up, down) coordinates
_ROT_TO_X = np.array([[1.0, -1.0], [1.0, 1.0]]) / np.sqrt(2.0)

DENSE_EIGEN_CUTOFF = 900


@dataclass
class LabeledLevel:
    """Eigenlevel with angular-momentum/photon labels (None when unlabeled)."""

    energy: float
    s: float = None
    m_x: float = None
    n: int = None
    vector: np.ndarray = None

    @property
    def labeled(self):
        return self.s is not None


def eigensystem(h, k):
    """k lowest eigenpairs of a Hermitian operator, energies ascending.

    Dense diagonalisation below ``DENSE_EIGEN_CUTOFF``; shift-inverted
    Lanczos above it.  Raises on non-Hermitian input; reports residual
    norms if convergence fails.
    """
    if sp.issparse(h):
        ss.check_hermitian(h, tol=1e-10)
        dim = h.shape[0]
    else:
        h = np.asarray(h)
        if np.max(np.abs(h - h.conj().T)) > 1e-10:
            raise ValueError("operator is not Hermitian")
        dim = h.shape[0]
    if not 1 <= k <= dim:
        raise ValueError(f"need 1 <= k <= dim, got k={k}, dim={dim}")

    if dim <= DENSE_EIGEN_CUTOFF or k > dim // 3:
        dense = h.toarray() if sp.issparse(h) else h
        vals, vecs = np.linalg.eigh(dense)
        return vals[:k].copy(), vecs[:, :k].copy()

    h = h.tocsc()
    try:
        e0 = spla.eigsh(h, k=1, which="SA", tol=1e-7,
                        return_eigenvectors=False)[0]
        sigma = e0 - 0.05 * max(1.0, abs(e0))
        vals, vecs = spla.eigsh(h, k=k, sigma=sigma, which="LM")
    except spla.ArpackNoConvergence as exc:
        got = exc.eigenvalues
        raise RuntimeError(
            f"eigensolver converged only {len(got)}/{k} eigenvalues; "
            f"residual eigenvalues so far: {got}") from exc
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


def check_eigen_residuals(h, vals, vecs, rel_tol=1e-8):
    """Verify H v = E v for each returned pair; returns max relative residual."""
    norm_h = spla.onenormest(h) if sp.issparse(h) else np.linalg.norm(h, 1)
    res = h @ vecs - vecs * vals[np.newaxis, :]
    worst = float(np.max(np.linalg.norm(res, axis=0)))
    if worst > rel_tol * norm_h:
        raise RuntimeError(f"eigenpair residual {worst:.3e} exceeds "
                           f"{rel_tol:.1e} * |H| = {rel_tol * norm_h:.3e}")
    return worst / norm_h


def spin_multiplicity(n_qubits, s):
    """Number of spin-s multiplets for N qubits."""
    k = int(round(n_qubits / 2 - s))
    if k < 0:
        return 0
    m = math.comb(n_qubits, k)
    if k >= 1:
        m -= math.comb(n_qubits, k - 1)
    return m


def allowed_spins(n_qubits):
    s = n_qubits / 2.0
    out = []
    while s >= -1e-9:
        out.append(round(s, 1) if s % 1 else int(s))
        s -= 1.0
    return out


@dataclass
class SplittingTable:
    """In-manifold splitting law evaluated for every (s, m_x) sector."""

    delta: float
    rows: list  # (s, m_x, delta_e, multiplicity)

    def level_sequence(self):
        """delta_e values repeated per degeneracy, ascending (2^N entries)."""
        seq = []
        for s, m_x, de, mult in self.rows:
            seq.extend([de] * mult)
        return np.sort(np.array(seq))


def usc_splittings(omega_q, omega_r, g, n_qubits):
    """Lowest-manifold splittings delta_E = Delta [m_x^2 - s(s+1)]."""
    if g <= 0:
        raise ValueError("splitting scale undefined at g = 0")
    delta = omega_q ** 2 * omega_r / (2.0 * g ** 2)
    rows = []
    for s in allowed_spins(n_qubits):
        mult = spin_multiplicity(n_qubits, s)
        m = -s
        while m <= s + 1e-9:
            rows.append((s, round(m, 1) if m % 1 else int(m),
                         delta * (m * m - s * (s + 1)), mult))
            m += 1.0
    rows.sort(key=lambda r: r[2])
    return SplittingTable(delta=delta, rows=rows)


# ---------------------------------------------------------------------------
# angular-momentum states on the qubit register


def _pattern_state(pattern, n_qubits, axis):
    """Register state from {spin string: amplitude}; axis picks the basis
    the labels refer to."""
    psi = ss.register_state(pattern, n_qubits)
    if axis == "z":
        return psi
    if axis == "x":
        rot = reduce(np.kron, [_ROT_TO_X] * n_qubits)
        return rot @ psi
    raise ValueError(f"axis must be 'x' or 'z', got {axis!r}")


def _symmetric_pattern(n_qubits, m):
    """Fully symmetric spin-N/2 state pattern with projection m."""
    n_down = round(n_qubits / 2 - m)
    if not 0 <= n_down <= n_qubits:
        raise ValueError(f"invalid projection m={m} for N={n_qubits}")
    pattern = {}
    for bits in range(2 ** n_qubits):
        spins = format(bits, f"0{n_qubits}b").replace("0", "u").replace("1", "d")
        if spins.count("d") == n_down:
            pattern[spins] = 1.0
    return pattern


_N2_MULTIPLETS = {
    (1, 1): [{"uu": 1}],
    (1, 0): [{"ud": 1, "du": 1}],
    (1, -1): [{"dd": 1}],
    (0, 0): [{"ud": 1, "du": -1}],
}

_N4_MULTIPLETS = {
    (1, 1): [
        {"uuud": 1, "uudu": 1, "uduu": -1, "duuu": -1},
        {"uuud": 1, "uudu": -1, "uduu": 1, "duuu": -1},
        {"uuud": 1, "uudu": -1, "uduu": -1, "duuu": 1},
    ],
    (1, 0): [
        {"uudd": 1, "dduu": -1},
        {"udud": 1, "dudu": -1},
        {"uddu": 1, "duud": -1},
    ],
    (1, -1): [
        {"uddd": 1, "dudd": 1, "ddud": -1, "dddu": -1},
        {"uddd": 1, "dudd": -1, "ddud": 1, "dddu": -1},
        {"uddd": 1, "dudd": -1, "ddud": -1, "dddu": 1},
    ],
    (0, 0): [
        {"uudd": 2, "dduu": 2, "udud": -1, "uddu": -1, "duud": -1, "dudu": -1},
        {"udud": 1, "uddu": -1, "duud": -1, "dudu": 1},
    ],
}


def dicke_state(n_qubits, s, m, axis="x", index=0):
    """Normalized joint eigenvector of S^2 (eigenvalue s(s+1)) and S_axis.

    ``index`` selects a member of a degenerate multiplet; for N = 2 and 4
    the members follow the explicit basis listed in the construction
    tables, and other cases fall back to numerical simultaneous
    diagonalisation with a fixed (but arbitrary) internal ordering.
    """
    if abs(m) > s + 1e-9 or s > n_qubits / 2 + 1e-9 or s < 0:
        raise ValueError(f"invalid quantum numbers s={s}, m={m} for N={n_qubits}")
    mult = spin_multiplicity(n_qubits, s)
    if not 0 <= index < mult:
        raise ValueError(f"degeneracy index {index} out of range for "
                         f"multiplicity {mult}")

    if abs(s - n_qubits / 2) < 1e-9:
        return _pattern_state(_symmetric_pattern(n_qubits, m), n_qubits, axis)
    table = _N2_MULTIPLETS if n_qubits == 2 else (
        _N4_MULTIPLETS if n_qubits == 4 else None)
    key = (int(round(s)), int(round(m)))
    if table is not None and key in table:
        return _pattern_state(table[key][index], n_qubits, axis)
    return _numeric_multiplet(n_qubits, s, m, axis)[index]


def _numeric_multiplet(n_qubits, s, m, axis):
    s2 = ss.total_spin_squared(n_qubits).toarray()
    s_ax = ss.collective_spin(axis, n_qubits).toarray()
    vals, vecs = np.linalg.eigh(s2)
    sel = np.abs(vals - s * (s + 1)) < 1e-8
    block = vecs[:, sel]
    m_ax, m_vecs = np.linalg.eigh(block.conj().T @ s_ax @ block)
    sel_m = np.abs(m_ax - m) < 1e-8
    members = block @ m_vecs[:, sel_m]
    return [members[:, i] for i in range(members.shape[1])]


def singlet_states(n_qubits):
    """Orthonormal basis of the total-spin-zero subspace (z-basis form)."""
    if n_qubits == 2:
        return (_pattern_state(_N2_MULTIPLETS[(0, 0)][0], 2, "z"),)
    if n_qubits == 4:
        return (_pattern_state(_N4_MULTIPLETS[(0, 0)][0], 4, "z"),
                _pattern_state(_N4_MULTIPLETS[(0, 0)][1], 4, "z"))
    raise ValueError("explicit singlet basis available for N = 2 or 4")


# ---------------------------------------------------------------------------
# displaced photon-number eigenstate approximation


@lru_cache(maxsize=8)
def _displacement_generator(n_qubits, n_fock):
    a = ss.annihilator(n_fock)
    return sp.kron(ss.collective_spin("x", n_qubits), a.getH() - a,
                   format="csc")


def displaced_state(n, s, m_x, g_over_omega_r, space, index=0):
    """exp(-(g/w_r)(a^dag - a) S_x) |n> x |s, m_x>_x on the truncated space."""
    qubit = dicke_state(space.n_qubits, s, m_x, axis="x", index=index)
    psi0 = ss.compose(qubit, ss.fock_state(space, n))
    gen = _displacement_generator(space.n_qubits, space.n_fock)
    psi = spla.expm_multiply(-g_over_omega_r * gen, psi0)
    psi = psi / np.linalg.norm(psi)
    top = np.linalg.norm(psi.reshape(space.dim_qubits, space.n_fock)[:, -1])
    if top > 1e-6:
        warnings.warn(f"displaced state reaches the Fock truncation "
                      f"(top-level amplitude {top:.2e}); increase n_fock",
                      RuntimeWarning)
    return psi


# ---------------------------------------------------------------------------
# classification of numerical states


@lru_cache(maxsize=8)
def _classify_ops(n_qubits, n_fock):
    space = ss.HilbertSpace(n_qubits, n_fock)
    s2 = ss.embed(ss.total_spin_squared(n_qubits), "qubits", space)
    s_x = ss.embed(ss.collective_spin("x", n_qubits), "qubits", space)
    num = ss.embed(ss.number_operator(n_fock), "resonator", space)
    return s2.tocsr(), s_x.tocsr(), num.tocsr()


def _moments(op, psi):
    op_psi = op @ psi
    mean = np.real(np.vdot(psi, op_psi))
    var = np.real(np.vdot(op_psi, op_psi)) - mean ** 2
    return mean, max(var, 0.0)


def classify_state(psi, space, g_over_omega_r=0.0, tolerance=0.05):
    """Assign (s, m_x, n) labels, or None when outside every sector.

    The photon index is read after undoing the coupling-conditioned
    displacement for the identified m_x, so labels remain meaningful deep
    in the strong-coupling regime.
    """
    psi = np.asarray(psi, dtype=np.complex128)
    s2_op, sx_op, _ = _classify_ops(space.n_qubits, space.n_fock)

    s2, var_s2 = _moments(s2_op, psi)
    spins = allowed_spins(space.n_qubits)
    s = min(spins, key=lambda cand: abs(cand * (cand + 1) - s2))
    if abs(s * (s + 1) - s2) > tolerance or var_s2 > tolerance:
        return None

    mx, var_mx = _moments(sx_op, psi)
    m = round(mx) if space.n_qubits % 2 == 0 else round(mx - 0.5) + 0.5
    if abs(m) > s or abs(mx - m) > tolerance or var_mx > tolerance:
        return None

    if g_over_omega_r != 0.0 and m != 0:
        gen = _displacement_generator(space.n_qubits, space.n_fock)
        psi = spla.expm_multiply(g_over_omega_r * gen, psi)
    num_op = _classify_ops(space.n_qubits, space.n_fock)[2]
    nbar, var_n = _moments(num_op, psi)
    n = int(round(nbar))
    if abs(nbar - n) > 10 * tolerance or var_n > 10 * tolerance:
        return None
    return (s, int(m) if m % 1 == 0 else m, n)


def label_levels(vals, vecs, space, g_over_omega_r, tolerance=0.05):
    """Wrap an eigensystem into LabeledLevel records via classify_state."""
    out = []
    for i in range(len(vals)):
        label = classify_state(vecs[:, i], space, g_over_omega_r, tolerance)
        if label is None:
            out.append(LabeledLevel(energy=vals[i], vector=vecs[:, i]))
        else:
            out.append(LabeledLevel(energy=vals[i], s=label[0], m_x=label[1],
                                    n=label[2], vector=vecs[:, i]))
    return out


def spectrum_rows(n_qubits, omega_q, omega_r, g_values, n_fock, k,
                  tolerance=0.05):
    """(g, level_index, energy_minus_E0, s, m_x, n) rows for a coupling sweep."""
    from .model import build_dicke_hamiltonian  # local import avoids a cycle

    space = ss.HilbertSpace(n_qubits, n_fock)
    rows = []
    for g in g_values:
        h = build_dicke_hamiltonian(omega_r, g, omega_q, space)
        vals, vecs = eigensystem(h, k)
        levels = label_levels(vals, vecs, space, g / omega_r, tolerance)
        for idx, lv in enumerate(levels):
            rows.append((g, idx, lv.energy - vals[0],
                         lv.s if lv.labeled else np.nan,
                         lv.m_x if lv.labeled else np.nan,
                         lv.n if lv.labeled else np.nan))
    return rows


def write_spectrum_csv(path, rows):
    with open(path, "w") as fh:
        fh.write("g,level_index,energy_minus_E0,s,m_x,n\n")
        for row in rows:
            fh.write(",".join("" if isinstance(v, float) and np.isnan(v)
                              else f"{v:.12g}" for v in row) + "\n")
