import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from heatsink_twin.errors import ConflictError, InvalidInputError, NotFoundError, ShapeError
from heatsink_twin.pod import (PodBasis, RomComponent, RomLibrary, SnapshotMatrix, build_basis,
                               compute_svd, energy_fraction, geometry_hash, is_orthonormal,
                               project, reconstruct, select_modes)


def random_snapshots(n_dof=300, n_snap=40, seed=0):
    return SnapshotMatrix(np.random.default_rng(seed).standard_normal((n_dof, n_snap)))


def test_svd_matches_lapack():
    S = random_snapshots()
    svd = compute_svd(S)
    ref = np.linalg.svd(S.data, compute_uv=False)
    np.testing.assert_allclose(svd.singular_values, ref, rtol=1e-10)
    recon = svd.left_modes * svd.singular_values @ svd.right_factors
    np.testing.assert_allclose(recon, S.data, atol=1e-10)
    assert is_orthonormal(svd.left_modes)


def test_svd_rank_deficient_fixture():
    svd = compute_svd(np.array([[1.0, 2.0], [2.0, 4.0]]))
    assert svd.rank == 1
    assert svd.singular_values[0] == pytest.approx(5.0, rel=1e-14)
    np.testing.assert_allclose(np.abs(svd.left_modes[:, 0]), [1, 2] / np.sqrt(5), rtol=1e-14)


def test_sign_convention():
    svd = compute_svd(random_snapshots(seed=3))
    for j in range(svd.rank):
        first = svd.left_modes[np.flatnonzero(svd.left_modes[:, j])[0], j]
        assert first > 0


@pytest.mark.parametrize("sigma,k", [([3.0, 1.0], 2), ([3.0, 0.5], 1), ([1.0] * 20, 19),
                                     ([1.0], 1), ([5.0, 0.0, 0.0], 1)])
def test_select_modes_fixtures(sigma, k):
    assert select_modes(sigma, 0.95) == k


def test_select_modes_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        select_modes([1.0, 0.5], 0.0)
    with pytest.raises(InvalidInputError):
        select_modes([0.0, 0.0])
    with pytest.raises(InvalidInputError):
        select_modes([1.0, -0.1])


@given(arrays(np.float64, st.integers(1, 12), elements=st.floats(0.0, 1e3)),
       st.floats(0.05, 1.0))
def test_select_modes_is_minimal(sigma, threshold):
    sigma = np.sort(sigma)[::-1]
    if not np.any(sigma > 0):
        return
    k = select_modes(sigma, threshold)
    frac = energy_fraction(sigma)
    assert frac[k - 1] >= threshold * (1 - 1e-12)
    if k > 1:
        assert frac[k - 2] < threshold * (1 - 1e-12)


def test_eckart_young_on_training_set():
    S = random_snapshots(500, 60, seed=1)
    basis = build_basis(S, 0.9)
    recon = reconstruct(basis, project(basis, S.data))
    err = np.sum((S.data - recon) ** 2)
    assert err == pytest.approx(basis.discarded_energy, rel=1e-8)
    assert 0.9 <= basis.energy_retained < 1.0


@given(st.integers(1, 8), st.integers(0, 1000))
def test_exact_low_rank_recovered(rank, seed):
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((80, rank)) @ rng.standard_normal((rank, 20)) + 3.0
    basis = build_basis(SnapshotMatrix(data), 1.0)
    assert basis.k <= rank
    recon = reconstruct(basis, project(basis, data))
    np.testing.assert_allclose(recon, data, atol=1e-9 * np.abs(data).max())


def test_zero_variance_guard():
    data = np.tile(np.linspace(300.0, 301.0, 50)[:, None], (1, 7))
    basis = build_basis(SnapshotMatrix(data))
    assert basis.k == 1 and basis.energy_retained == 1.0
    assert not np.any(basis.modes)
    np.testing.assert_allclose(reconstruct(basis, project(basis, data)), data, rtol=1e-15)


def test_project_reconstruct_single_field():
    S = random_snapshots(seed=4)
    basis = build_basis(S, 0.99)
    a = project(basis, S.data[:, 0])
    assert a.shape == (basis.k,)
    np.testing.assert_allclose(project(basis, reconstruct(basis, a)), a, atol=1e-10)
    with pytest.raises(ShapeError):
        project(basis, np.zeros(basis.n_dof + 1))
    with pytest.raises(ShapeError):
        reconstruct(basis, np.zeros(basis.k + 1))


def test_snapshot_matrix_validation():
    with pytest.raises(ShapeError):
        SnapshotMatrix(np.zeros(5))
    with pytest.raises(InvalidInputError):
        SnapshotMatrix(np.array([[1.0, np.nan]]))


def test_library_lookup_and_conflicts():
    basis = PodBasis(np.zeros(3), np.eye(3)[:, :1], np.ones(1), 1.0)
    lib = RomLibrary([RomComponent("b", basis), RomComponent("a", basis)])
    assert lib.ids() == ["a", "b"] and len(lib) == 2 and "a" in lib
    assert lib.lookup("a").basis is basis
    with pytest.raises(NotFoundError):
        lib.lookup("c")
    with pytest.raises(ConflictError):
        RomLibrary([RomComponent("a", basis), RomComponent("a", basis)])


def test_geometry_hash_is_stable():
    assert geometry_hash({"w": 1}, 2.0) == geometry_hash({"w": 1}, 2.0)
    assert geometry_hash({"w": 1}, 2.0) != geometry_hash({"w": 2}, 2.0)
    assert len(geometry_hash("x")) == 16
