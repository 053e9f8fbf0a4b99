"""Snapshot POD: SVD by the method of snapshots, energy truncation, ROM library."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from .errors import ConflictError, InvalidInputError, NotFoundError, ShapeError

RANK_CUTOFF = 1e-12
ZERO_SPREAD = 1e-13


@dataclass(frozen=True, eq=False)
class SnapshotMatrix:
    data: np.ndarray  # n_dof x n_snap, column i is snapshot i
    operating_points: tuple = ()

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[1] < 1:
            raise ShapeError(f"snapshot matrix must be 2D with >= 1 column, got {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise InvalidInputError("snapshot matrix has non-finite entries")

    @property
    def shape(self):
        return self.data.shape


@dataclass(frozen=True, eq=False)
class SvdResult:
    left_modes: np.ndarray       # n_dof x r
    singular_values: np.ndarray  # r, non-increasing
    right_factors: np.ndarray    # r x n_snap
    mean: np.ndarray | None = None

    @property
    def rank(self) -> int:
        return len(self.singular_values)


@dataclass(frozen=True, eq=False)
class PodBasis:
    mean_vector: np.ndarray
    modes: np.ndarray            # n_dof x k
    singular_values: np.ndarray  # k
    energy_retained: float
    discarded_energy: float = 0.0

    @property
    def n_dof(self) -> int:
        return len(self.mean_vector)

    @property
    def k(self) -> int:
        return self.modes.shape[1]


@dataclass(frozen=True, eq=False)
class RomComponent:
    component_id: str
    basis: PodBasis
    provenance: dict = field(default_factory=dict)


def build_snapshot_matrix(snapshots) -> SnapshotMatrix:
    snapshots = list(snapshots)
    if not snapshots:
        raise InvalidInputError("need at least one snapshot")
    columns = [np.asarray(s.field.node_temperatures, dtype=float) for s in snapshots]
    n_dof = len(columns[0])
    for i, col in enumerate(columns):
        if len(col) != n_dof:
            raise ShapeError(f"snapshot {i} has {len(col)} dofs, expected {n_dof}")
    return SnapshotMatrix(np.column_stack(columns),
                          tuple(s.operating_point for s in snapshots))


def _fix_signs(u, vt):
    # first nonzero entry of each mode non-negative
    for j in range(u.shape[1]):
        nz = np.flatnonzero(u[:, j])
        if len(nz) and u[nz[0], j] < 0:
            u[:, j] *= -1
            vt[j] *= -1
    return u, vt


def compute_svd(matrix: SnapshotMatrix | np.ndarray, centered: bool = False) -> SvdResult:
    """Thin SVD through the n_snap x n_snap Gram matrix.

    Eigenpairs of S^T S give sigma^2 and V; the left modes are S V / sigma,
    re-orthonormalized by a QR pass so orthonormality holds to round-off
    even for modes whose sigma is close to the rank cutoff.
    """
    data = matrix.data if isinstance(matrix, SnapshotMatrix) else np.asarray(matrix, float)
    if not np.all(np.isfinite(data)):
        raise InvalidInputError("non-finite entries")
    mean = None
    if centered:
        mean = data.mean(axis=1)
        data = data - mean[:, None]
    n_dof, n_snap = data.shape
    gram = data.T @ data
    gram = 0.5 * (gram + gram.T)
    eigvals, eigvecs = np.linalg.eigh(gram)
    order = np.argsort(eigvals)[::-1]
    sigma = np.sqrt(np.clip(eigvals[order], 0.0, None))
    v = eigvecs[:, order]
    if sigma.size == 0 or sigma[0] == 0.0:
        return SvdResult(np.zeros((n_dof, 0)), np.zeros(0), np.zeros((0, n_snap)), mean)
    r = int(np.sum(sigma > RANK_CUTOFF * sigma[0]))
    sigma, v = sigma[:r], v[:, :r]
    u, rfac = np.linalg.qr(data @ v)
    # QR may flip column signs; align with S v
    flip = np.sign(np.diag(rfac))
    flip[flip == 0] = 1.0
    u = u * flip
    u, vt = _fix_signs(u, v.T.copy())
    return SvdResult(u, sigma, vt, mean)


def select_modes(singular_values, energy_threshold: float = 0.95) -> int:
    """Smallest k whose leading sigma^2 reach ``energy_threshold`` of the total."""
    if not (0.0 < energy_threshold <= 1.0):
        raise InvalidInputError(f"energy_threshold must lie in (0, 1], got {energy_threshold}")
    s = np.asarray(singular_values, dtype=float)
    if s.size == 0 or np.any(s < 0) or not np.any(s > 0):
        raise InvalidInputError("need non-negative singular values with at least one positive")
    s = s / s.max()  # keeps s**2 clear of underflow
    energy = np.cumsum(s ** 2) / np.sum(s ** 2)
    # relative slack of a few ulps so exact ratios like 19/20 are not lost to rounding
    k = int(np.argmax(energy >= energy_threshold * (1.0 - 1e-12))) + 1
    return k


def build_basis(matrix: SnapshotMatrix, energy_threshold: float = 0.95) -> PodBasis:
    data = matrix.data if isinstance(matrix, SnapshotMatrix) else np.asarray(matrix, float)
    n_dof = data.shape[0]
    mean = data.mean(axis=1)
    # snapshots identical up to the round-off of the mean: nothing to decompose
    spread = np.max(np.abs(data - mean[:, None]), initial=0.0)
    if spread <= ZERO_SPREAD * np.max(np.abs(data), initial=0.0):
        return PodBasis(mean, np.zeros((n_dof, 1)), np.zeros(1), 1.0, 0.0)
    svd = compute_svd(data, centered=True)
    k = select_modes(svd.singular_values, energy_threshold)
    energy = svd.singular_values ** 2
    return PodBasis(
        mean_vector=svd.mean,
        modes=svd.left_modes[:, :k].copy(),
        singular_values=svd.singular_values[:k].copy(),
        energy_retained=float(np.sum(energy[:k]) / np.sum(energy)),
        discarded_energy=float(np.sum(energy[k:])),
    )


def project(basis: PodBasis, u) -> np.ndarray:
    """Coefficients a = Phi^T (u - mean).  Accepts one field or n_dof x n columns."""
    u = np.asarray(u, dtype=float)
    if u.shape[0] != basis.n_dof:
        raise ShapeError(f"field has {u.shape[0]} dofs, basis has {basis.n_dof}")
    centred = u - (basis.mean_vector if u.ndim == 1 else basis.mean_vector[:, None])
    return basis.modes.T @ centred


def reconstruct(basis: PodBasis, a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape[0] != basis.k:
        raise ShapeError(f"expected {basis.k} coefficients, got {a.shape[0]}")
    out = basis.modes @ a
    return out + (basis.mean_vector if a.ndim == 1 else basis.mean_vector[:, None])


def is_orthonormal(modes, tol: float = 1e-10) -> bool:
    gram = modes.T @ modes
    return bool(np.max(np.abs(gram - np.eye(gram.shape[0])), initial=0.0) <= tol)


class RomLibrary:
    """Read-only map from component id to RomComponent."""

    def __init__(self, components=()):
        store = {}
        for comp in components:
            if comp.component_id in store:
                raise ConflictError(f"duplicate component id {comp.component_id!r}")
            store[comp.component_id] = comp
        self._components = MappingProxyType(store)

    def __len__(self):
        return len(self._components)

    def __iter__(self):
        return iter(sorted(self._components))

    def __contains__(self, component_id):
        return component_id in self._components

    def lookup(self, component_id: str) -> RomComponent:
        try:
            return self._components[component_id]
        except KeyError:
            raise NotFoundError(f"no component {component_id!r}") from None

    def ids(self):
        return sorted(self._components)


def assemble_library(components) -> RomLibrary:
    return RomLibrary(components)


def lookup(library: RomLibrary, component_id: str) -> RomComponent:
    return library.lookup(component_id)


def energy_fraction(singular_values) -> np.ndarray:
    s = np.asarray(singular_values, float)
    s2 = (s / s.max()) ** 2 if s.size and s.max() > 0 else s ** 2
    return np.cumsum(s2) / s2.sum() if s2.sum() > 0 else np.ones_like(s2)


def geometry_hash(*parts) -> str:
    text = "|".join(repr(p) for p in parts)
    return hashlib.sha256(text.encode()).hexdigest()[:16]

