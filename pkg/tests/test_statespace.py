import numpy as np
import pytest

from uscharvest import statespace as ss

from conftest import (dense_annihilator, dense_collective, dense_embed,
                      dense_pauli, random_density_matrix, random_state)


def test_annihilator_defining_action():
    a = ss.annihilator(3).toarray()
    expected = np.zeros((3, 3), dtype=complex)
    expected[0, 1] = 1.0
    expected[1, 2] = np.sqrt(2)
    assert np.array_equal(a, expected)


def test_number_operator_eigenvalue():
    a = ss.annihilator(5)
    n2 = np.zeros(5, dtype=complex)
    n2[2] = 1.0
    assert np.allclose((a.getH() @ a) @ n2, 2.0 * n2)


def test_canonical_commutator_within_truncation():
    n_fock = 6
    a = ss.annihilator(n_fock).toarray()
    comm = a @ a.conj().T - a.conj().T @ a
    # identity except for the last Fock level, which the truncation corrupts
    assert np.allclose(comm[:n_fock - 1, :n_fock - 1], np.eye(n_fock - 1))


def test_annihilator_rejects_tiny_space():
    with pytest.raises(ValueError):
        ss.annihilator(1)


def test_pauli_z_basis_convention():
    sz = ss.pauli(1, "z", 1).toarray()
    assert np.array_equal(sz, np.diag([1.0, -1.0]).astype(complex))


def test_pauli_xx_flips_all_down():
    op = (ss.pauli(1, "x", 2) @ ss.pauli(2, "x", 2)).toarray()
    down_down = np.zeros(4)
    down_down[ss.register_index("dd")] = 1.0
    flipped = op @ down_down
    assert flipped[ss.register_index("uu")] == 1.0
    assert np.linalg.norm(flipped) == 1.0


@pytest.mark.parametrize("n_qubits,i", [(1, 1), (3, 2), (4, 4)])
def test_pauli_involution(n_qubits, i):
    sx = ss.pauli(i, "x", n_qubits)
    assert np.allclose((sx @ sx).toarray(), np.eye(2 ** n_qubits))


def test_pauli_index_out_of_range():
    with pytest.raises(ValueError):
        ss.pauli(3, "x", 2)
    with pytest.raises(ValueError):
        ss.pauli(0, "z", 2)


def test_collective_spin_up_up():
    sz = ss.collective_spin("z", 2)
    up_up = np.zeros(4)
    up_up[ss.register_index("uu")] = 1.0
    assert np.allclose(sz @ up_up, up_up)


def test_singlet_triplet_decomposition():
    s2 = ss.total_spin_squared(2).toarray()
    vals = np.sort(np.linalg.eigvalsh(s2))
    assert np.allclose(vals, [0.0, 2.0, 2.0, 2.0])


@pytest.mark.parametrize("n_qubits,n_fock", [(1, 5), (2, 4), (3, 3), (3, 5)])
def test_operators_match_dense_bruteforce(n_qubits, n_fock):
    space = ss.HilbertSpace(n_qubits, n_fock)
    assert np.allclose(ss.annihilator(n_fock).toarray(),
                       dense_annihilator(n_fock))
    for axis in "xyz":
        for i in range(1, n_qubits + 1):
            assert np.allclose(ss.pauli(i, axis, n_qubits).toarray(),
                               dense_pauli(i, axis, n_qubits))
        assert np.allclose(ss.collective_spin(axis, n_qubits).toarray(),
                           dense_collective(axis, n_qubits))
        assert np.allclose(
            ss.embed(ss.collective_spin(axis, n_qubits), "qubits", space).toarray(),
            dense_embed(dense_collective(axis, n_qubits), "qubits",
                        n_qubits, n_fock))
    assert np.allclose(
        ss.embed(ss.annihilator(n_fock), "resonator", space).toarray(),
        dense_embed(dense_annihilator(n_fock), "resonator", n_qubits, n_fock))


def test_embed_identity_and_commutation():
    space = ss.HilbertSpace(2, 4)
    ident = ss.embed(np.eye(4), "qubits", space)
    assert np.allclose(ident.toarray(), np.eye(space.dim))
    a_full = ss.embed(ss.annihilator(4), "resonator", space)
    x_full = ss.embed(ss.pauli(1, "x", 2), "qubits", space)
    assert np.allclose((a_full @ x_full - x_full @ a_full).toarray(), 0.0)


def test_embed_homomorphism():
    space = ss.HilbertSpace(2, 3)
    rng = np.random.default_rng(7)
    a = rng.normal(size=(4, 4))
    b = rng.normal(size=(4, 4))
    lhs = (ss.embed(a, "qubits", space) @ ss.embed(b, "qubits", space)).toarray()
    rhs = ss.embed(a @ b, "qubits", space).toarray()
    assert np.allclose(lhs, rhs)


def test_embed_dimension_mismatch():
    space = ss.HilbertSpace(2, 4)
    with pytest.raises(ValueError):
        ss.embed(np.eye(3), "qubits", space)


def test_partial_trace_product_state():
    space = ss.HilbertSpace(2, 3)
    psi = ss.basis_state(space, 0, "dd")
    rho_q = ss.partial_trace(ss.density_matrix(psi), "qubits", space)
    expected = np.zeros((4, 4))
    expected[ss.register_index("dd"), ss.register_index("dd")] = 1.0
    assert np.allclose(rho_q, expected)


def test_partial_trace_bell_state_maximally_mixed():
    space = ss.HilbertSpace(2, 2)
    bell = ss.register_state({"uu": 1, "dd": 1}, 2)
    psi = ss.compose(bell, ss.fock_state(space, 0))
    rho1 = ss.partial_trace(ss.density_matrix(psi), 1, space)
    assert np.allclose(rho1, 0.5 * np.eye(2), atol=1e-12)


def test_partial_trace_preserves_trace_random():
    space = ss.HilbertSpace(2, 4)
    rng = np.random.default_rng(11)
    for _ in range(50):
        rho = random_density_matrix(space.dim, rng, rank=5)
        for keep in ("qubits", "resonator", 1, (1, 2)):
            reduced = ss.partial_trace(rho, keep, space)
            assert abs(np.trace(reduced).real - 1.0) < 1e-12
            assert np.allclose(reduced, reduced.conj().T)


def test_partial_trace_chaining():
    space = ss.HilbertSpace(3, 3)
    rng = np.random.default_rng(3)
    rho = random_density_matrix(space.dim, rng, rank=4)
    rho_q = ss.partial_trace(rho, "qubits", space)
    # direct single-qubit reduction equals reducing the register result
    direct = ss.partial_trace(rho, 2, space)
    via_register = ss._trace_register(rho_q, (2,), 3)
    assert np.allclose(direct, via_register, atol=1e-13)


def test_purity_of_reduction_product_vs_entangled():
    space = ss.HilbertSpace(2, 3)
    product = ss.compose(ss.register_state({"ud": 1}, 2), ss.fock_state(space, 1))
    rho_q = ss.reduced_qubit_density(product, space)
    assert abs(np.trace(rho_q @ rho_q).real - 1.0) < 1e-12

    entangled = (ss.basis_state(space, 0, "uu") + ss.basis_state(space, 1, "dd"))
    entangled /= np.linalg.norm(entangled)
    rho_q = ss.reduced_qubit_density(entangled, space)
    assert np.trace(rho_q @ rho_q).real < 1.0 - 1e-6


def test_reduced_qubit_density_matches_partial_trace():
    space = ss.HilbertSpace(2, 5)
    rng = np.random.default_rng(5)
    psi = random_state(space.dim, rng)
    assert np.allclose(ss.reduced_qubit_density(psi, space),
                       ss.partial_trace(ss.density_matrix(psi), "qubits", space))


def test_check_hermitian():
    ss.check_hermitian(ss.collective_spin("y", 2))
    bad = ss.annihilator(4)
    with pytest.raises(ValueError):
        ss.check_hermitian(bad)


def test_space_validation():
    with pytest.raises(ValueError):
        ss.HilbertSpace(0, 4)
    with pytest.raises(ValueError):
        ss.HilbertSpace(2, 1)
