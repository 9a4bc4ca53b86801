import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from qline import spectral
from qline.hamiltonian import Basis, build_h0_adiabatic, build_hprop, path_matrix, restrict_to_history_basis
from qline.circuit import identity_circuit


def random_hermitian(rng, d, sparse_density=None):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    if sparse_density is not None:
        a *= rng.random((d, d)) < sparse_density
    return (a + a.conj().T) / 2


def random_psd(rng, d):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return a @ a.conj().T / d


def test_path_matrix_eigenvalues():
    r = spectral.smallest_eigs(path_matrix(2), 3)
    assert np.allclose(r.eigenvalues, [0, 0.5, 1.5], atol=1e-12)


def test_identity_spectrum():
    assert np.allclose(spectral.smallest_eigs(np.eye(5), 5).eigenvalues, 1)


def test_prop_null_space_degeneracy():
    basis = Basis.legal(2, 2)
    H = build_hprop(identity_circuit(2, 2), basis)
    ev = spectral.smallest_eigs(H, basis.dim).eigenvalues
    assert np.sum(np.abs(ev) < spectral.NULL_TOL) == 4


def test_gap_of_path_closed_form():
    K = 15
    e0, gap = spectral.spectral_gap(path_matrix(K))
    assert abs(e0) < 1e-12
    assert abs(gap - (1 - np.cos(np.pi / (K + 1)))) < 1e-9


def test_gap_of_h0_restricted():
    c = identity_circuit(2, 2)
    M = restrict_to_history_basis(c, build_h0_adiabatic(Basis.legal(2, 2)))
    assert spectral.spectral_gap(M)[1] == pytest.approx(1.0)


def test_levels_merge_degeneracies():
    assert spectral.levels(np.array([0, 1e-12, 1, 1 + 1e-11, 2])) == pytest.approx([0, 1, 2])


@pytest.mark.parametrize("d", [50, 300, 512])
def test_lanczos_matches_dense(d):
    rng = np.random.default_rng(d)
    H = sp.csr_matrix(random_hermitian(rng, d, 0.05))
    k = 4
    lz = spectral.lanczos_eigs(H, k)
    dn = spectral.dense_eigs(H, k)
    assert np.allclose(lz.eigenvalues, dn.eigenvalues, atol=1e-8)
    assert np.all(lz.residuals <= 1e-8 * max(1.0, spectral.norm1(H)))


def test_lanczos_resolves_degenerate_levels():
    basis = Basis.legal(2, 3)
    H = build_hprop(identity_circuit(2, 3), basis)
    lz = spectral.lanczos_eigs(H, 6)
    dn = spectral.dense_eigs(H, 6)
    assert np.allclose(lz.eigenvalues, dn.eigenvalues, atol=1e-8)


def test_lanczos_is_deterministic():
    rng = np.random.default_rng(0)
    H = sp.csr_matrix(random_hermitian(rng, 200, 0.05))
    a, b = spectral.lanczos_eigs(H, 2), spectral.lanczos_eigs(H, 2)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)


def test_smallest_eigs_rejects_large_k():
    with pytest.raises(ValueError):
        spectral.smallest_eigs(np.eye(3), 4)


def test_monotone_under_psd_addition():
    rng = np.random.default_rng(0x5EED)
    for _ in range(1000):
        d = int(rng.integers(2, 65))
        A, B = random_hermitian(rng, d), random_psd(rng, d)
        assert np.linalg.eigvalsh(A + B)[0] >= np.linalg.eigvalsh(A)[0] - 1e-10


# -- angles ----------------------------------------------------------------------------------


def test_orthogonal_lines():
    a = np.array([[1.0], [0.0]])
    b = np.array([[0.0], [1.0]])
    assert spectral.principal_angle(a, b) == pytest.approx(np.pi / 2)


def test_diagonal_line():
    a = np.array([[1.0], [0.0]])
    b = np.array([[1.0], [1.0]]) / np.sqrt(2)
    assert spectral.principal_angle(a, b) == pytest.approx(np.pi / 4)


def test_angle_rejects_shared_direction():
    a = np.eye(3)[:, :2]
    b = np.eye(3)[:, 1:]
    with pytest.raises(spectral.AngleError):
        spectral.principal_angle(a, b)


def test_angle_rejects_non_orthonormal():
    with pytest.raises(ValueError):
        spectral.principal_angle(np.array([[2.0], [0.0]]), np.array([[0.0], [1.0]]))


def test_kitaev_two_by_two():
    A1 = np.diag([0.0, 1.0])
    u = np.array([1.0, 1.0]) / np.sqrt(2)
    A2 = np.eye(2) - np.outer(u, u)
    cert = spectral.kitaev_bound(A1, A2)
    assert cert.bound == pytest.approx(2 * np.sin(np.pi / 8) ** 2)
    assert cert.min_eig >= cert.bound - 1e-12


def test_kitaev_shared_null_vector():
    with pytest.raises(spectral.AngleError):
        spectral.kitaev_bound(np.diag([0.0, 1.0]), np.diag([0.0, 1.0]))


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_kitaev_inequality_on_random_pairs(d, seed):
    rng = np.random.default_rng(seed)
    # projectors onto random complements give generic, trivially intersecting null spaces
    def proj(k):
        q, _ = np.linalg.qr(rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k)))
        return q @ q.conj().T

    # ranks k1 + k2 >= d so the two null spaces generically meet only at zero
    k1 = int(rng.integers(1, d))
    k2 = int(rng.integers(max(1, d - k1), d))
    A1, A2 = proj(k1), proj(k2)
    try:
        cert = spectral.kitaev_bound(A1, A2)
    except spectral.AngleError:
        return
    assert cert.min_eig >= cert.bound - 1e-10


# -- block-wise routines -------------------------------------------------------------------


def block_diag_test_matrix(rng):
    blocks = [random_hermitian(rng, d) for d in (1, 3, 3, 5, 2)]
    return sp.block_diag(blocks, format="csr"), blocks


def test_component_minima_match_blocks():
    rng = np.random.default_rng(4)
    H, blocks = block_diag_test_matrix(rng)
    labels, minima, exact = spectral.component_minima(H)
    want = sorted(np.linalg.eigvalsh(b)[0] for b in blocks)
    assert np.allclose(sorted(minima), want)
    assert exact.all()


def test_component_minima_skip_needs_floor():
    rng = np.random.default_rng(4)
    H, _ = block_diag_test_matrix(rng)
    with pytest.raises(ValueError):
        spectral.component_minima(H, skip_above=0.0)


def test_component_minima_skipped_blocks_report_floor():
    H = sp.block_diag([np.array([[2.0, 1.0], [1.0, 2.0]]), np.array([[0.0, 0.5], [0.5, 0.0]])], format="csr")
    floor = np.array([1.0, 1.0, 0.0, 0.0])
    _, minima, exact = spectral.component_minima(H, floor, skip_above=1.0)
    assert list(exact) == [False, True]
    assert minima[0] == 1.0 and minima[1] == pytest.approx(-0.5)


def test_block_spectrum_lowest():
    rng = np.random.default_rng(5)
    H, blocks = block_diag_test_matrix(rng)
    allev = np.sort(np.concatenate([np.linalg.eigvalsh(b) for b in blocks]))
    r = spectral.block_spectrum(H, 6)
    assert np.allclose(r.eigenvalues, allev[:6])
    assert np.all(r.residuals < 1e-10)


def test_spectrum_csv_format():
    text = spectral.spectrum_csv(spectral.dense_eigs(np.diag([0.1, 2.0])))
    assert text.splitlines()[0] == "index,eigenvalue,residual"
    assert text.splitlines()[1].startswith("0,0.10000000000000001,")
