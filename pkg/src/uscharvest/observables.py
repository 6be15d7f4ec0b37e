"""Scalar diagnostics: fidelity, extraction fidelity, purity, entropies, spin."""

import numpy as np

from . import statespace as ss


def _reduced_qubit(state, space):
    state = np.asarray(state)
    if state.ndim == 1:
        return ss.reduced_qubit_density(state, space)
    return ss.partial_trace(state, "qubits", space)


def fidelity_to_qubit_state(state, target, space):
    """F = <target| Tr_r rho |target> for a pure qubit-register target."""
    target = np.asarray(target, dtype=np.complex128)
    if target.shape != (space.dim_qubits,):
        raise ValueError("target must live on the qubit register")
    state = np.asarray(state)
    if state.ndim == 1:
        mat = state.reshape(space.dim_qubits, space.n_fock)
        return float(np.linalg.norm(target.conj() @ mat) ** 2)
    rho_q = ss.partial_trace(state, "qubits", space)
    return float(np.real(target.conj() @ rho_q @ target))


def eef(trajectory, t_f):
    """Extraction fidelity: max fidelity recorded at times >= t_f."""
    mask = trajectory.t >= t_f - 1e-9
    if not np.any(mask):
        raise ValueError(f"trajectory has no samples at t >= {t_f}")
    return float(np.max(trajectory.columns["fidelity"][mask]))


def purity(rho):
    rho = np.asarray(rho)
    return float(np.real(np.trace(rho @ rho)))


def clipped_eigenvalues(rho, floor=-1e-6):
    """Eigenvalues of a density matrix with tiny negatives discarded.

    Values in (-1e-10, 0) are clipped and the rest renormalized; anything
    below ``floor`` signals a genuinely invalid state and raises.
    """
    vals = np.linalg.eigvalsh(np.asarray(rho))
    if np.min(vals) < floor:
        raise ValueError(f"density matrix has eigenvalue {np.min(vals):.3e} "
                         f"below {floor:.1e}")
    vals = np.clip(vals, 0.0, None)
    total = vals.sum()
    return vals / total if total > 0 else vals


def entanglement_entropy(rho):
    """Von Neumann entropy in bits, -sum p log2 p over nonzero eigenvalues."""
    vals = clipped_eigenvalues(rho)
    vals = vals[vals > 0]
    return float(-np.sum(vals * np.log2(vals)))


def entropy_from_probabilities(p):
    p = np.asarray(p, dtype=float)
    p = p[p > 1e-300]
    return float(-np.sum(p * np.log2(p)))


def total_spin(state, space):
    """Expectation value of S^2 for a full-space state or density matrix."""
    s2 = ss.total_spin_squared(space.n_qubits)
    state = np.asarray(state)
    if state.ndim == 1:
        mat = state.reshape(space.dim_qubits, space.n_fock)
        return float(np.real(np.sum(np.conj(mat) * (s2 @ mat))))
    rho_q = ss.partial_trace(state, "qubits", space)
    return float(np.real(np.trace(s2 @ rho_q)))


def manifold_population(state, level_vectors):
    """Total weight of a state on a set of eigenlevels (columns of a matrix)."""
    state = np.asarray(state)
    v = np.asarray(level_vectors)
    if state.ndim == 1:
        return float(np.linalg.norm(v.conj().T @ state) ** 2)
    return float(np.real(np.trace(v.conj().T @ state @ v)))
