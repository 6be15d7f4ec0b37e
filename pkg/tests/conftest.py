"""Shared oracle helpers: independent dense constructions used to cross-check
the sparse operator algebra, plus random-state generators."""

import numpy as np

SIGMA = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "i": np.eye(2, dtype=complex),
}


def dense_annihilator(n_fock):
    a = np.zeros((n_fock, n_fock), dtype=complex)
    for n in range(1, n_fock):
        a[n - 1, n] = np.sqrt(n)
    return a


def dense_pauli(qubit_index, axis, n_qubits):
    out = np.array([[1.0]], dtype=complex)
    for i in range(1, n_qubits + 1):
        out = np.kron(out, SIGMA[axis] if i == qubit_index else SIGMA["i"])
    return out


def dense_collective(axis, n_qubits):
    dim = 2 ** n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for i in range(1, n_qubits + 1):
        out += 0.5 * dense_pauli(i, axis, n_qubits)
    return out


def dense_embed(op, which, n_qubits, n_fock):
    if which == "qubits":
        return np.kron(op, np.eye(n_fock, dtype=complex))
    return np.kron(np.eye(2 ** n_qubits, dtype=complex), op)


def random_state(dim, rng):
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return psi / np.linalg.norm(psi)


def random_density_matrix(dim, rng, rank=None):
    rank = rank or dim
    a = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real
