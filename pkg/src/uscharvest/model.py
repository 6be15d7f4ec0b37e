"""Multiqubit resonator Hamiltonians.

The full per-qubit Hamiltonian is

    H = w_r a^dag a + sum_i (g_i/2)(a^dag + a) sigma_x^i
        + sum_i (w_q^i/2) sigma_z^i
        + sum_{i,j} g_i g_j / (4 w_r) sigma_x^i sigma_x^j,

with hbar = 1 and all frequencies in units of w_r unless stated otherwise.
The i = j terms of the double sum are kept (a constant N g^2/(4 w_r) shift)
so the symmetric case agrees entrywise with the collective form

    H = w_r a^dag a + g (a^dag + a) S_x + w_q S_z + (g^2/w_r) S_x^2.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import statespace as ss
from .kernels import StackedCSR


@dataclass(frozen=True)
class ModelParams:
    """Static model parameters; g and omega_q are per-qubit vectors."""

    omega_r: float
    g: np.ndarray
    omega_q: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "g", np.atleast_1d(np.asarray(self.g, dtype=float)))
        object.__setattr__(self, "omega_q",
                           np.atleast_1d(np.asarray(self.omega_q, dtype=float)))
        if self.omega_r <= 0:
            raise ValueError("omega_r must be positive")
        if len(self.g) != len(self.omega_q):
            raise ValueError("g and omega_q must have equal length")
        if np.any(self.g < 0):
            raise ValueError("couplings g_i must be nonnegative")

    @property
    def n_qubits(self):
        return len(self.g)

    @classmethod
    def symmetric(cls, n_qubits, omega_r, g, omega_q):
        return cls(omega_r, np.full(n_qubits, float(g)),
                   np.full(n_qubits, float(omega_q)))


def build_full_hamiltonian(params, space):
    """Per-qubit Hamiltonian with individual couplings and splittings."""
    if params.n_qubits != space.n_qubits:
        raise ValueError("parameter vectors do not match the space")
    n = space.n_qubits
    a = ss.annihilator(space.n_fock)
    h = params.omega_r * ss.embed(ss.number_operator(space.n_fock), "resonator", space)
    quad = a + a.getH()
    sx = [ss.pauli(i, "x", n) for i in range(1, n + 1)]
    sz = [ss.pauli(i, "z", n) for i in range(1, n + 1)]
    for i in range(n):
        h = h + 0.5 * params.g[i] * sp.kron(sx[i], quad, format="csr")
        h = h + 0.5 * params.omega_q[i] * ss.embed(sz[i], "qubits", space)
    for i in range(n):
        for j in range(n):
            coeff = params.g[i] * params.g[j] / (4.0 * params.omega_r)
            h = h + coeff * ss.embed(sx[i] @ sx[j], "qubits", space)
    return h.tocsr()


def build_dicke_hamiltonian(omega_r, g, omega_q, space):
    """Collective (symmetric) form with the S_x^2 qubit-qubit term."""
    n = space.n_qubits
    a = ss.annihilator(space.n_fock)
    s_x = ss.collective_spin("x", n)
    s_z = ss.collective_spin("z", n)
    h = omega_r * ss.embed(ss.number_operator(space.n_fock), "resonator", space)
    h = h + g * sp.kron(s_x, a + a.getH(), format="csr")
    h = h + omega_q * ss.embed(s_z, "qubits", space)
    h = h + (g * g / omega_r) * ss.embed((s_x @ s_x).tocsr(), "qubits", space)
    return h.tocsr()


def coupling_from_circuit(varphi0, omega_r, e_l):
    """Qubit-resonator coupling from the phase matrix element.

    g = |varphi0| sqrt(E_L w_r / 2) with E_L = Phi_0^2 / L expressed as an
    angular frequency (hbar = 1) in the same units as w_r.
    """
    if omega_r <= 0 or e_l <= 0:
        raise ValueError("omega_r and E_L must be positive")
    return abs(varphi0) * np.sqrt(e_l * omega_r / 2.0)


def parity_operator(space):
    """Pi = exp(i pi (a^dag a + S_z + N/2)); diagonal +-1 in the fixed basis."""
    n = space.n_qubits
    reg = np.arange(space.dim_qubits)
    n_up = n - np.array([bin(r).count("1") for r in reg])
    phase_reg = (-1.0) ** n_up
    phase_fock = (-1.0) ** np.arange(space.n_fock)
    return sp.diags(np.kron(phase_reg, phase_fock).astype(np.complex128),
                    format="csr")


@dataclass(frozen=True)
class ControlMode:
    """One scalar control profile distributed over qubits by fixed weights."""

    weights: np.ndarray
    profile: object  # callable t -> float with attribute t_f

    def __post_init__(self):
        object.__setattr__(self, "weights",
                           np.asarray(self.weights, dtype=float))


class TimeDependentHamiltonian:
    """H(t) assembled as a linear combination of cached sparse blocks.

    Controls arrive as modes (weight vector over qubits, scalar profile):
    g_i(t) = sum_m w_i^m f_m(t) and w_q^i(t) = sum_m v_i^m h_m(t).  Only the
    profile values are recomputed per step; blocks are fixed sparse
    matrices sharing one union pattern.
    """

    def __init__(self, space, omega_r, g_modes, omega_modes):
        self.space = space
        self.omega_r = float(omega_r)
        self.g_modes = list(g_modes)
        self.omega_modes = list(omega_modes)
        n = space.n_qubits
        for mode in self.g_modes + self.omega_modes:
            if len(mode.weights) != n:
                raise ValueError("mode weight vector length != n_qubits")

        a = ss.annihilator(space.n_fock)
        quad = a + a.getH()
        x_ops = []
        for mode in self.g_modes:
            x = sp.csr_matrix((space.dim_qubits, space.dim_qubits),
                              dtype=np.complex128)
            for i, w in enumerate(mode.weights, start=1):
                if w != 0.0:
                    x = x + w * ss.pauli(i, "x", n)
            x_ops.append(x.tocsr())

        blocks = [omega_r * ss.embed(ss.number_operator(space.n_fock),
                                     "resonator", space)]
        for x in x_ops:
            blocks.append(0.5 * sp.kron(x, quad, format="csr"))
        for mode in self.omega_modes:
            z = sp.csr_matrix((space.dim_qubits, space.dim_qubits),
                              dtype=np.complex128)
            for i, v in enumerate(mode.weights, start=1):
                if v != 0.0:
                    z = z + 0.5 * v * ss.pauli(i, "z", n)
            blocks.append(ss.embed(z.tocsr(), "qubits", space))
        self._xx_pairs = []
        for m in range(len(x_ops)):
            for mp in range(m, len(x_ops)):
                factor = (1.0 if m == mp else 2.0) / (4.0 * omega_r)
                blocks.append(factor * ss.embed((x_ops[m] @ x_ops[mp]).tocsr(),
                                                "qubits", space))
                self._xx_pairs.append((m, mp))
        self.stacked = StackedCSR(blocks)

    @property
    def dim(self):
        return self.space.dim

    def coefficients(self, t):
        f = np.array([mode.profile(t) for mode in self.g_modes], dtype=float)
        h = np.array([mode.profile(t) for mode in self.omega_modes], dtype=float)
        coeffs = np.empty(1 + len(f) + len(h) + len(self._xx_pairs),
                          dtype=np.float64)
        coeffs[0] = 1.0
        coeffs[1:1 + len(f)] = f
        coeffs[1 + len(f):1 + len(f) + len(h)] = h
        for idx, (m, mp) in enumerate(self._xx_pairs):
            coeffs[1 + len(f) + len(h) + idx] = f[m] * f[mp]
        return coeffs

    def matvec(self, t, psi, out=None):
        return self.stacked.matvec(self.coefficients(t), psi, out=out)

    def matrix(self, t):
        return self.stacked.combine(self.coefficients(t))

    @classmethod
    def from_schedule(cls, space, omega_r, schedule):
        return cls(space, omega_r,
                   [ControlMode(w, p) for w, p in schedule.g_modes],
                   [ControlMode(w, p) for w, p in schedule.omega_modes])
