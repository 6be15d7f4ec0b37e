"""Truncated qubit-register x Fock Hilbert space and the operators on it.

Conventions (fixed; every other module relies on them):

* basis ordering is (qubit register) x (resonator Fock, ascending n), with
  qubit 1 the most significant register bit,
* qubit basis index 0 is the excited state ``up``, index 1 the ground state
  ``down``, so sigma_z = diag(+1, -1) and ``down ... down`` is the last
  register basis state,
* operators are stored sparse (CSR, complex128), states and density
  matrices dense.
"""

from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sp

SPIN_UP = 0
SPIN_DOWN = 1

_PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128),
}


@dataclass(frozen=True)
class HilbertSpace:
    """Composite space of ``n_qubits`` two-level systems and one truncated mode."""

    n_qubits: int
    n_fock: int

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        if self.n_fock < 2:
            raise ValueError("n_fock must be >= 2")

    @property
    def dim_qubits(self):
        return 2 ** self.n_qubits

    @property
    def dim(self):
        return self.dim_qubits * self.n_fock


def annihilator(n_fock):
    """Resonator lowering operator a with a|n> = sqrt(n)|n-1>."""
    if n_fock < 2:
        raise ValueError("n_fock must be >= 2")
    return sp.diags(np.sqrt(np.arange(1, n_fock)), offsets=1,
                    format="csr", dtype=np.complex128)


def number_operator(n_fock):
    """a^dag a on the truncated Fock space."""
    return sp.diags(np.arange(n_fock, dtype=np.float64),
                    format="csr", dtype=np.complex128)


def pauli(qubit_index, axis, n_qubits):
    """sigma_axis acting on one qubit of the register (1-based index).

    Returns an operator on the 2^N register only, no resonator factor.
    """
    if axis not in _PAULI:
        raise ValueError(f"axis must be one of x, y, z, got {axis!r}")
    if not 1 <= qubit_index <= n_qubits:
        raise ValueError(f"qubit_index {qubit_index} out of range 1..{n_qubits}")
    factors = [sp.identity(2, dtype=np.complex128, format="csr")] * n_qubits
    factors[qubit_index - 1] = sp.csr_matrix(_PAULI[axis])
    return reduce(lambda a, b: sp.kron(a, b, format="csr"), factors)


def collective_spin(axis, n_qubits):
    """Collective spin component S_axis = sum_i sigma_axis^i / 2 on the register."""
    out = sp.csr_matrix((2 ** n_qubits, 2 ** n_qubits), dtype=np.complex128)
    for i in range(1, n_qubits + 1):
        out = out + 0.5 * pauli(i, axis, n_qubits)
    return out.tocsr()


def total_spin_squared(n_qubits):
    """S^2 = S_x^2 + S_y^2 + S_z^2 on the register."""
    out = sp.csr_matrix((2 ** n_qubits, 2 ** n_qubits), dtype=np.complex128)
    for axis in "xyz":
        s = collective_spin(axis, n_qubits)
        out = out + s @ s
    return out.tocsr()


def embed(op, which, space):
    """Tensor-extend a register or resonator operator with identity on the rest."""
    op = sp.csr_matrix(op)
    if which == "qubits":
        if op.shape != (space.dim_qubits, space.dim_qubits):
            raise ValueError(f"operator dim {op.shape[0]} != register dim "
                             f"{space.dim_qubits}")
        return sp.kron(op, sp.identity(space.n_fock, dtype=np.complex128),
                       format="csr")
    if which == "resonator":
        if op.shape != (space.n_fock, space.n_fock):
            raise ValueError(f"operator dim {op.shape[0]} != Fock dim {space.n_fock}")
        return sp.kron(sp.identity(space.dim_qubits, dtype=np.complex128), op,
                       format="csr")
    raise ValueError(f"which must be 'qubits' or 'resonator', got {which!r}")


def check_hermitian(op, tol=1e-12):
    """Raise if the sparse operator deviates from M = M^dag entrywise."""
    delta = op - op.getH()
    err = np.max(np.abs(delta.data)) if delta.nnz else 0.0
    if err > tol:
        raise ValueError(f"operator not Hermitian: max |M - M^dag| = {err:.3e}")


def basis_state(space, fock_n, spins):
    """Product state |spins> x |fock_n>; spins is a string like 'uudd'."""
    if len(spins) != space.n_qubits:
        raise ValueError("spin string length != n_qubits")
    if not 0 <= fock_n < space.n_fock:
        raise ValueError("fock_n out of range")
    reg = register_index(spins)
    psi = np.zeros(space.dim, dtype=np.complex128)
    psi[reg * space.n_fock + fock_n] = 1.0
    return psi


def register_index(spins):
    """Basis index of a product register state ('u'/'d' per qubit, qubit 1 first)."""
    idx = 0
    for ch in spins:
        if ch == "u":
            bit = SPIN_UP
        elif ch == "d":
            bit = SPIN_DOWN
        else:
            raise ValueError(f"spin characters must be 'u' or 'd', got {ch!r}")
        idx = 2 * idx + bit
    return idx


def register_state(amplitudes_by_spins, n_qubits):
    """Normalized register state from a {spin string: amplitude} mapping."""
    psi = np.zeros(2 ** n_qubits, dtype=np.complex128)
    for spins, amp in amplitudes_by_spins.items():
        if len(spins) != n_qubits:
            raise ValueError("spin string length != n_qubits")
        psi[register_index(spins)] += amp
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("state has zero norm")
    return psi / norm


def compose(qubit_state, fock_state):
    """Tensor product (register state) x (Fock state) as a dense vector."""
    return np.kron(np.asarray(qubit_state, dtype=np.complex128),
                   np.asarray(fock_state, dtype=np.complex128))


def fock_state(space, n):
    vec = np.zeros(space.n_fock, dtype=np.complex128)
    vec[n] = 1.0
    return vec


def density_matrix(psi):
    psi = np.asarray(psi, dtype=np.complex128)
    return np.outer(psi, psi.conj())


def partial_trace(rho, keep, space):
    """Reduced density matrix of the kept factor.

    ``keep`` is ``'qubits'``, ``'resonator'``, an integer (single qubit,
    1-based), or a tuple of qubit indices (1-based) to keep.
    """
    rho = np.asarray(rho)
    dq, nf = space.dim_qubits, space.n_fock
    if rho.shape != (space.dim, space.dim):
        raise ValueError(f"density matrix shape {rho.shape} != space dim {space.dim}")
    rho4 = rho.reshape(dq, nf, dq, nf)
    if keep == "resonator":
        return np.einsum("anam->nm", rho4)
    rho_q = np.einsum("anbn->ab", rho4)
    if keep == "qubits":
        return rho_q
    if isinstance(keep, (int, np.integer)):
        keep = (int(keep),)
    if isinstance(keep, (tuple, list)):
        return _trace_register(rho_q, tuple(keep), space.n_qubits)
    raise ValueError(f"invalid subsystem specification {keep!r}")


def _trace_register(rho_q, keep, n_qubits):
    keep = tuple(sorted(set(keep)))
    if not keep or any(not 1 <= q <= n_qubits for q in keep):
        raise ValueError(f"qubit subset {keep} out of range 1..{n_qubits}")
    shape = (2,) * n_qubits
    rho_t = rho_q.reshape(shape + shape)
    # einsum with kept axes distinct, traced axes repeated between bra and ket
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = []
    col = []
    out = []
    next_letter = 0
    for q in range(1, n_qubits + 1):
        if q in keep:
            row.append(letters[next_letter])
            col.append(letters[next_letter + 1])
            out.extend(letters[next_letter:next_letter + 2])
            next_letter += 2
        else:
            row.append(letters[next_letter])
            col.append(letters[next_letter])
            next_letter += 1
    spec = "".join(row) + "".join(col) + "->" + "".join(out[::2]) + "".join(out[1::2])
    k = len(keep)
    return np.einsum(spec, rho_t).reshape(2 ** k, 2 ** k)


def reduced_qubit_density(psi, space):
    """Qubit-register reduced density matrix of a pure state (fast path)."""
    mat = np.asarray(psi).reshape(space.dim_qubits, space.n_fock)
    return mat @ mat.conj().T
