import numpy as np
import pytest
import scipy.sparse as sp

from uscharvest import model, spectral
from uscharvest import statespace as ss

from conftest import random_state


def test_eigensystem_two_level():
    h = sp.csr_matrix(np.diag([0.5, -0.5]).astype(complex))
    vals, vecs = spectral.eigensystem(h, 2)
    assert np.allclose(vals, [-0.5, 0.5])
    assert np.allclose(np.abs(vecs.conj().T @ vecs), np.eye(2), atol=1e-12)


def test_eigensystem_rejects_non_hermitian():
    with pytest.raises(ValueError):
        spectral.eigensystem(ss.annihilator(4), 2)


def test_decoupled_ground_energy_n4():
    space = ss.HilbertSpace(4, 6)
    h = model.build_dicke_hamiltonian(1.0, 0.0, 1.0, space)
    vals, _ = spectral.eigensystem(h, 1)
    assert abs(vals[0] - (-2.0)) < 1e-10


def test_manifold_separation_in_strong_coupling():
    # n_fock must accommodate the displaced m_x = +-2 states (<n> ~ (g m)^2)
    space = ss.HilbertSpace(4, 140)
    h = model.build_dicke_hamiltonian(1.0, 5.0, 1.0, space)
    vals, _ = spectral.eigensystem(h, 17)
    manifold_width = vals[15] - vals[0]
    gap_to_next = vals[16] - vals[15]
    assert gap_to_next > 3 * manifold_width


def test_eigensystem_shift_invert_path_matches_dense():
    # force dim above the dense cutoff
    space = ss.HilbertSpace(2, 300)
    h = model.build_dicke_hamiltonian(1.0, 1.2, 0.8, space)
    vals, vecs = spectral.eigensystem(h, 6)
    dense_vals = np.sort(np.linalg.eigvalsh(h.toarray()))[:6]
    assert np.allclose(vals, dense_vals, atol=1e-9)
    spectral.check_eigen_residuals(h, vals, vecs)


def test_splitting_table_n4():
    table = spectral.usc_splittings(1.0, 1.0, 5.0, 4)
    assert abs(table.delta - 1.0 / 50.0) < 1e-15
    lowest = table.rows[0]
    assert lowest[0] == 2 and lowest[1] == 0
    assert abs(lowest[2] - (-6 * table.delta)) < 1e-15
    zero_rows = [r for r in table.rows if r[0] == 0]
    assert all(abs(r[2]) < 1e-15 for r in zero_rows)
    seq = table.level_sequence()
    assert len(seq) == 16
    # degeneracy pattern of Fig-style ordering: 1, 2, (2+3), (3+3), 2
    counts = [int(np.sum(np.isclose(seq, v))) for v in
              np.unique(np.round(seq, 12))]
    assert counts == [1, 2, 5, 6, 2]


def test_usc_splittings_rejects_zero_coupling():
    with pytest.raises(ValueError):
        spectral.usc_splittings(1.0, 1.0, 0.0, 4)


def test_splittings_match_diagonalization_n2():
    n_fock = 100
    g = 5.0
    space = ss.HilbertSpace(2, n_fock)
    h = model.build_dicke_hamiltonian(1.0, g, 1.0, space)
    vals, _ = spectral.eigensystem(h, 4)
    table = spectral.usc_splittings(1.0, 1.0, g, 2)
    analytic = table.level_sequence()
    numeric = vals - vals[0]
    shifted = analytic - analytic[0]
    for num, ana in zip(numeric[1:], shifted[1:]):
        assert abs(num - ana) / ana < 0.05


def test_spin_multiplicities():
    assert spectral.spin_multiplicity(2, 1) == 1
    assert spectral.spin_multiplicity(2, 0) == 1
    assert spectral.spin_multiplicity(4, 2) == 1
    assert spectral.spin_multiplicity(4, 1) == 3
    assert spectral.spin_multiplicity(4, 0) == 2
    assert spectral.spin_multiplicity(6, 3) == 1
    assert spectral.spin_multiplicity(6, 0) == 5


def test_dicke_state_n2_supplement_form():
    psi = spectral.dicke_state(2, 1, 0, axis="x")
    expected = np.zeros(4, dtype=complex)
    expected[ss.register_index("dd")] = 1 / np.sqrt(2)
    expected[ss.register_index("uu")] = -1 / np.sqrt(2)
    assert np.allclose(psi, expected, atol=1e-12)


def test_dicke_state_n4_supplement_amplitudes():
    psi = spectral.dicke_state(4, 2, 0, axis="x")
    assert abs(psi[ss.register_index("uuuu")] - 3 / np.sqrt(24)) < 1e-12
    assert abs(psi[ss.register_index("dddd")] - 3 / np.sqrt(24)) < 1e-12
    for pattern in ("uudd", "udud", "uddu", "duud", "dudu", "dduu"):
        assert abs(psi[ss.register_index(pattern)] + 1 / np.sqrt(24)) < 1e-12


@pytest.mark.parametrize("n_qubits,s,m,index", [
    (2, 1, 1, 0), (2, 0, 0, 0), (4, 2, 0, 0), (4, 2, -2, 0),
    (4, 1, 0, 0), (4, 1, 0, 2), (4, 1, -1, 1), (4, 0, 0, 1),
    (6, 3, 0, 0), (6, 3, 2, 0),
])
def test_dicke_state_defining_property(n_qubits, s, m, index):
    for axis in ("x", "z"):
        psi = spectral.dicke_state(n_qubits, s, m, axis=axis, index=index)
        s2 = ss.total_spin_squared(n_qubits)
        s_ax = ss.collective_spin(axis, n_qubits)
        assert np.linalg.norm(s2 @ psi - s * (s + 1) * psi) < 1e-10
        assert np.linalg.norm(s_ax @ psi - m * psi) < 1e-10
        assert abs(np.linalg.norm(psi) - 1.0) < 1e-12


def test_dicke_state_axis_rotation():
    rot = spectral._ROT_TO_X
    for (s, m, idx) in [(2, 0, 0), (1, 1, 1), (0, 0, 0)]:
        z_state = spectral.dicke_state(4, s, m, axis="z", index=idx)
        x_state = spectral.dicke_state(4, s, m, axis="x", index=idx)
        full_rot = np.kron(np.kron(rot, rot), np.kron(rot, rot))
        assert np.linalg.norm(x_state - full_rot @ z_state) < 1e-12


def test_dicke_state_invalid_numbers():
    with pytest.raises(ValueError):
        spectral.dicke_state(4, 3, 0)
    with pytest.raises(ValueError):
        spectral.dicke_state(4, 1, 2)
    with pytest.raises(ValueError):
        spectral.dicke_state(4, 1, 0, index=3)


def test_singlet_states_dark_and_orthonormal():
    s_state, s_prime = spectral.singlet_states(4)
    for axis in "xyz":
        op = ss.collective_spin(axis, 4)
        assert np.linalg.norm(op @ s_state) < 1e-12
        assert np.linalg.norm(op @ s_prime) < 1e-12
    assert abs(np.vdot(s_state, s_prime)) < 1e-12
    # rotation invariance of the s=0 subspace: same pattern in both bases
    from uscharvest.spectral import _N4_MULTIPLETS, _pattern_state
    for idx in (0, 1):
        x_form = _pattern_state(_N4_MULTIPLETS[(0, 0)][idx], 4, "x")
        z_form = _pattern_state(_N4_MULTIPLETS[(0, 0)][idx], 4, "z")
        assert np.linalg.norm(x_form - z_form) < 1e-12


def test_singlet_states_n2():
    (s_state,) = spectral.singlet_states(2)
    expected = np.zeros(4, dtype=complex)
    expected[ss.register_index("ud")] = 1 / np.sqrt(2)
    expected[ss.register_index("du")] = -1 / np.sqrt(2)
    assert np.allclose(s_state, expected)


def test_displaced_state_trivial_at_mx_zero():
    space = ss.HilbertSpace(2, 30)
    psi = spectral.displaced_state(2, 1, 0, 5.0, space)
    direct = ss.compose(spectral.dicke_state(2, 1, 0, axis="x"),
                        ss.fock_state(space, 2))
    assert np.linalg.norm(psi - direct) < 1e-12


def test_displaced_state_approximates_eigenstate():
    space = ss.HilbertSpace(2, 100)
    g = 5.0
    h = model.build_dicke_hamiltonian(1.0, g, 1.0, space)
    vals, vecs = spectral.eigensystem(h, 4)
    # (n=0, s=1, m_x=+-1) lie at -5*Delta: the degenerate pair above ground
    pair = vecs[:, 1:3]
    approx = spectral.displaced_state(0, 1, 1, g, space)
    overlap = np.linalg.norm(pair.conj().T @ approx) ** 2
    assert overlap > 0.99


def test_displaced_state_weak_coupling_degrades():
    # documents the validity regime: outside strong coupling the overlap drops
    space = ss.HilbertSpace(2, 60)
    g = 0.1
    h = model.build_dicke_hamiltonian(1.0, g, 1.0, space)
    vals, vecs = spectral.eigensystem(h, 4)
    approx = spectral.displaced_state(0, 1, 1, g, space)
    best = np.max(np.abs(vecs.conj().T @ approx) ** 2)
    assert best < 0.99


def test_displaced_state_truncation_warning():
    space = ss.HilbertSpace(2, 8)
    with pytest.warns(RuntimeWarning):
        spectral.displaced_state(0, 1, 1, 2.5, space)


def test_classify_trivial_states():
    space = ss.HilbertSpace(4, 12)
    d0 = spectral.dicke_state(4, 2, 0, axis="x")
    label = spectral.classify_state(ss.compose(d0, ss.fock_state(space, 0)), space)
    assert label == (2, 0, 0)

    down_x = spectral.dicke_state(4, 2, -2, axis="x")
    label = spectral.classify_state(ss.compose(down_x, ss.fock_state(space, 1)),
                                    space)
    assert label == (2, -2, 1)


def test_classify_random_vector_unlabeled():
    space = ss.HilbertSpace(3, 10)
    rng = np.random.default_rng(2)
    assert spectral.classify_state(random_state(space.dim, rng), space) is None


def test_classify_with_displacement_correction():
    space = ss.HilbertSpace(2, 60)
    g = 3.0
    psi = spectral.displaced_state(1, 1, -1, g, space)
    assert spectral.classify_state(psi, space, g_over_omega_r=g) == (1, -1, 1)
    # without the correction the photon label is meaningless
    assert spectral.classify_state(psi, space, g_over_omega_r=0.0) is None


def test_level_ordering_matches_splitting_law():
    # strong-coupling manifold ordering: ground (s=N/2, m_x=0), top s=0
    space = ss.HilbertSpace(4, 120)
    g = 4.0
    h = model.build_dicke_hamiltonian(1.0, g, 1.0, space)
    vals, vecs = spectral.eigensystem(h, 16)
    levels = spectral.label_levels(vals, vecs, space, g, tolerance=0.05)
    assert levels[0].labeled and (levels[0].s, levels[0].m_x) == (2, 0)
    top_sector = {(lv.s, lv.m_x) for lv in levels[14:16]}
    assert top_sector == {(0, 0)}
    labels = [(lv.s, lv.m_x) for lv in levels]
    assert labels.count((1, 0)) == 3 and labels.count((0, 0)) == 2


def test_spectrum_rows_export(tmp_path):
    rows = spectral.spectrum_rows(2, 1.0, 1.0, [0.0, 2.0], n_fock=30, k=4)
    assert len(rows) == 8
    path = tmp_path / "spec.csv"
    spectral.write_spectrum_csv(path, rows)
    header = path.read_text().splitlines()[0]
    assert header == "g,level_index,energy_minus_E0,s,m_x,n"
