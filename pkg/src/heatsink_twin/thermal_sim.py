"""Steady conduction in a 2D heatsink cross-section.

The cross-section spans the base width (x) and the base thickness plus fin
height (y); the base length is the out-of-plane depth and the flow direction.
Heat enters through the bottom face of the base with a uniform flux and
leaves through every air-exposed face by convection, q = h (T - T_amb).

Discretization is vertex-centred finite volumes on a uniform grid: every
vertex of a solid cell is a node, its control volume is the dual cell, and
boundary faces are split evenly between their two end nodes.  On interior
nodes this is the five-point Laplacian.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np
import pyamg
import scipy.sparse as sp
from scipy.sparse.linalg import cg
from scipy.stats import qmc

from .errors import InvalidInputError, SolverFailure, DegenerateFieldError

H_FLOOR = 5.0  # W m^-2 K^-1, natural-convection floor
DEFAULT_RESOLUTION = 1000.0  # cells per metre
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class HeatsinkGeometry:
    base_length: float = 0.1
    base_width: float = 0.06
    base_thickness: float = 0.005
    fin_count: int = 8
    fin_height: float = 0.1
    fin_thickness: float = 0.002

    def __post_init__(self):
        lengths = (self.base_length, self.base_width, self.base_thickness,
                   self.fin_height, self.fin_thickness)
        if not all(math.isfinite(v) and v > 0 for v in lengths):
            raise InvalidInputError(f"geometry lengths must be finite and > 0: {self}")
        if int(self.fin_count) != self.fin_count or self.fin_count < 1:
            raise InvalidInputError(f"fin_count must be an integer >= 1, got {self.fin_count}")
        if self.fin_count * self.fin_thickness > self.base_width * (1 + 1e-12):
            raise InvalidInputError("fins do not fit on the base")

    @property
    def fin_spacing(self) -> float:
        """Gap between neighbouring fins (0 for a single fin)."""
        if self.fin_count == 1:
            return 0.0
        return (self.base_width - self.fin_count * self.fin_thickness) / (self.fin_count - 1)

    @property
    def total_height(self) -> float:
        return self.base_thickness + self.fin_height


@dataclass(frozen=True)
class MaterialProps:
    """Solid properties plus the air properties used by the h(v) closure.

    Defaults are aluminium and air at 300 K.
    """

    conductivity: float = 205.0
    density: float = 2700.0
    specific_heat: float = 900.0
    air_kinematic_viscosity: float = 1.6e-5
    air_prandtl: float = 0.707
    air_conductivity: float = 0.0263

    def __post_init__(self):
        for name, value in vars(self).items():
            if not (math.isfinite(value) and value > 0):
                raise InvalidInputError(f"{name} must be finite and > 0, got {value}")


@dataclass(frozen=True)
class OperatingPoint:
    inlet_velocity: float
    wall_heat_flux: float
    ambient_temperature: float = 300.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in vars(self).values()):
            raise InvalidInputError(f"non-finite operating point: {self}")
        if self.inlet_velocity < 0 or self.wall_heat_flux < 0:
            raise InvalidInputError(f"velocity and flux must be >= 0: {self}")
        if self.ambient_temperature <= 0:
            raise InvalidInputError("ambient_temperature must be > 0 K")


@dataclass(frozen=True, eq=False)
class Mesh:
    """Node layout of a rasterized cross-section.

    ``areas`` are dual-cell areas (m^2, in-plane).  ``surface_areas`` and
    ``flux_areas`` are exposed face areas (m^2) including the depth.
    """

    coords: np.ndarray
    areas: np.ndarray
    surface_nodes: np.ndarray
    surface_areas: np.ndarray
    flux_nodes: np.ndarray
    flux_areas: np.ndarray
    grid_index: np.ndarray = field(default=None, repr=False)
    conduction: sp.csr_matrix = field(default=None, repr=False)
    _preconditioners: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_dof(self) -> int:
        return len(self.coords)


@dataclass(frozen=True, eq=False)
class ThermalField:
    node_temperatures: np.ndarray
    mesh: Mesh

    def __post_init__(self):
        if len(self.node_temperatures) != self.mesh.n_dof:
            raise InvalidInputError("temperature vector length does not match mesh")


@dataclass(frozen=True, eq=False)
class SimResult:
    field: ThermalField
    heat_coefficient: float
    max_temperature: float
    total_heat: float
    operating_point: OperatingPoint


def convective_coefficient(velocity, char_length, air: MaterialProps) -> float:
    """Laminar flat-plate closure, h = max(5, 0.664 Re^1/2 Pr^1/3 k_air / L)."""
    if not (math.isfinite(velocity) and math.isfinite(char_length)):
        raise InvalidInputError("velocity and char_length must be finite")
    if char_length <= 0 or velocity < 0:
        raise InvalidInputError("need char_length > 0 and velocity >= 0")
    reynolds = velocity * char_length / air.air_kinematic_viscosity
    nusselt = 0.664 * math.sqrt(reynolds) * air.air_prandtl ** (1.0 / 3.0)
    return max(H_FLOOR, nusselt * air.air_conductivity / char_length)


def _solid_mask(geometry: HeatsinkGeometry, resolution: float):
    nx = max(1, round(geometry.base_width * resolution))
    ny = max(1, round(geometry.total_height * resolution))
    dx = geometry.base_width / nx
    dy = geometry.total_height / ny
    nb = max(1, round(geometry.base_thickness / dy))
    mask = np.zeros((nx, ny), dtype=bool)
    mask[:, :nb] = True
    xc = (np.arange(nx) + 0.5) * dx
    pitch = geometry.fin_thickness + geometry.fin_spacing
    in_fin = np.zeros(nx, dtype=bool)
    for j in range(geometry.fin_count):
        left = j * pitch
        in_fin |= (xc >= left) & (xc <= left + geometry.fin_thickness)
    # fins narrower than a cell would vanish; keep the nearest column
    for j in range(geometry.fin_count):
        centre = j * pitch + 0.5 * geometry.fin_thickness
        in_fin[min(nx - 1, int(centre / dx))] = True
    mask[in_fin, nb:] = True
    return mask, dx, dy


def build_mesh(geometry: HeatsinkGeometry, resolution: float = DEFAULT_RESOLUTION,
               conductivity: float = 1.0, insulate_sides: bool = False) -> Mesh:
    """Rasterize the cross-section and assemble the conduction operator.

    ``conductivity`` scales the stored conduction matrix.  With
    ``insulate_sides`` the faces at x = 0 and x = base_width are adiabatic.
    """
    mask, dx, dy = _solid_mask(geometry, resolution)
    nx, ny = mask.shape
    if mask.sum() < 100:
        raise InvalidInputError(
            f"resolution {resolution} gives {mask.sum()} cells, need at least 100")
    depth = geometry.base_length

    vert = np.zeros((nx + 1, ny + 1), dtype=bool)
    ci, cj = np.nonzero(mask)
    for a in (0, 1):
        for b in (0, 1):
            vert[ci + a, cj + b] = True
    grid_index = -np.ones((nx + 1, ny + 1), dtype=np.int64)
    vi, vj = np.nonzero(vert)
    n = len(vi)
    grid_index[vi, vj] = np.arange(n)
    coords = np.column_stack([vi * dx, vj * dy])

    v00 = grid_index[ci, cj]
    v10 = grid_index[ci + 1, cj]
    v01 = grid_index[ci, cj + 1]
    v11 = grid_index[ci + 1, cj + 1]
    gx = conductivity * depth * 0.5 * dy / dx
    gy = conductivity * depth * 0.5 * dx / dy
    pairs = [(v00, v10, gx), (v01, v11, gx), (v00, v01, gy), (v10, v11, gy)]
    rows, cols, vals = [], [], []
    for p, q, g in pairs:
        gg = np.full(len(p), g)
        rows += [p, q, p, q]
        cols += [p, q, q, p]
        vals += [gg, gg, -gg, -gg]
    conduction = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n)).tocsr()

    areas = np.zeros(n)
    np.add.at(areas, np.concatenate([v00, v10, v01, v11]), 0.25 * dx * dy)

    padded = np.zeros((nx + 2, ny + 2), dtype=bool)
    padded[1:-1, 1:-1] = mask
    robin = np.zeros(n)
    flux = np.zeros(n)

    def add_faces(target, faces, a, b, length):
        np.add.at(target, a[faces], 0.5 * length * depth)
        np.add.at(target, b[faces], 0.5 * length * depth)

    below = ~padded[ci + 1, cj]
    above = ~padded[ci + 1, cj + 2]
    left = ~padded[ci, cj + 1]
    right = ~padded[ci + 2, cj + 1]
    add_faces(flux, below & (cj == 0), v00, v10, dx)
    add_faces(robin, below & (cj > 0), v00, v10, dx)
    add_faces(robin, above, v01, v11, dx)
    outer_left = left & (ci == 0)
    outer_right = right & (ci == nx - 1)
    add_faces(robin, left & ~outer_left, v00, v01, dy)
    add_faces(robin, right & ~outer_right, v10, v11, dy)
    if not insulate_sides:
        add_faces(robin, outer_left, v00, v01, dy)
        add_faces(robin, outer_right, v10, v11, dy)

    surface_nodes = np.flatnonzero(robin)
    flux_nodes = np.flatnonzero(flux)
    return Mesh(coords=coords, areas=areas,
                surface_nodes=surface_nodes, surface_areas=robin[surface_nodes],
                flux_nodes=flux_nodes, flux_areas=flux[flux_nodes],
                grid_index=grid_index, conduction=conduction)


def _preconditioner(mesh: Mesh, conductivity: float):
    # One AMG hierarchy per (mesh, k), built at the h floor so the result
    # does not depend on which operating point is solved first.
    if conductivity not in mesh._preconditioners:
        robin = np.zeros(mesh.n_dof)
        robin[mesh.surface_nodes] = H_FLOOR * mesh.surface_areas
        reference = (conductivity * mesh.conduction + sp.diags(robin)).tocsr()
        # pyamg seeds its spectral-radius estimate from the global legacy RNG;
        # pin it so the hierarchy (and every solve) is reproducible
        saved = np.random.get_state()
        np.random.seed(0)
        try:
            amg = pyamg.smoothed_aggregation_solver(reference, symmetry="symmetric")
        finally:
            np.random.set_state(saved)
        mesh._preconditioners[conductivity] = amg.aspreconditioner(cycle="V")
    return mesh._preconditioners[conductivity]


def _solve_excess(mesh: Mesh, conductivity: float, h: float, heat_flux: float,
                  tol: float = RESIDUAL_TOL) -> np.ndarray:
    """Temperature excess over ambient.  Raises SolverFailure on stall."""
    n = mesh.n_dof
    if heat_flux == 0.0:
        return np.zeros(n)
    # the problem is linear in the flux: solve for unit flux and scale, so
    # tiny (subnormal) or huge fluxes cannot underflow the residual norm
    rhs = np.zeros(n)
    rhs[mesh.flux_nodes] = mesh.flux_areas
    robin = np.zeros(n)
    robin[mesh.surface_nodes] = h * mesh.surface_areas
    system = (conductivity * mesh.conduction + sp.diags(robin)).tocsr()
    theta, info = cg(system, rhs, rtol=tol, atol=0.0, maxiter=100 * n,
                     M=_preconditioner(mesh, conductivity))
    residual = np.linalg.norm(rhs - system @ theta) / np.linalg.norm(rhs)
    if info != 0 or not np.isfinite(residual) or residual > 1e-8:
        raise SolverFailure(f"conduction solve stalled at relative residual {residual:.3e}",
                            residual=residual)
    return heat_flux * theta


def solve_steady(geometry: HeatsinkGeometry, material: MaterialProps, op: OperatingPoint,
                 resolution: float = DEFAULT_RESOLUTION, mesh: Mesh | None = None,
                 insulate_sides: bool = False) -> ThermalField:
    """Solve k lap(T) = 0 with base flux and convective faces.

    Pass a prebuilt ``mesh`` (from ``build_mesh`` with unit conductivity) to
    skip rasterization when sweeping operating points.
    """
    if mesh is None:
        mesh = build_mesh(geometry, resolution, insulate_sides=insulate_sides)
    h = convective_coefficient(op.inlet_velocity, geometry.base_length, material)
    theta = _solve_excess(mesh, material.conductivity, h, op.wall_heat_flux)
    return ThermalField(node_temperatures=op.ambient_temperature + theta, mesh=mesh)


def extract_qois(field: ThermalField, op: OperatingPoint, h: float):
    """Return (effective heat coefficient, max temperature, total heat)."""
    mesh = field.mesh
    excess = field.node_temperatures[mesh.surface_nodes] - op.ambient_temperature
    area = mesh.surface_areas
    total_heat = float(np.sum(h * area * excess))
    max_temperature = float(np.max(field.node_temperatures))
    mean_excess = float(np.sum(area * excess) / np.sum(area))
    if mean_excess == 0.0:
        if total_heat > 0.0:
            raise DegenerateFieldError("surface at ambient but heat flows")
        return 0.0, max_temperature, total_heat
    return total_heat / (np.sum(area) * mean_excess), max_temperature, total_heat


def simulate(geometry: HeatsinkGeometry, material: MaterialProps, op: OperatingPoint,
             resolution: float = DEFAULT_RESOLUTION, mesh: Mesh | None = None) -> SimResult:
    if mesh is None:
        mesh = build_mesh(geometry, resolution)
    field = solve_steady(geometry, material, op, mesh=mesh)
    h = convective_coefficient(op.inlet_velocity, geometry.base_length, material)
    h_eff, t_max, q = extract_qois(field, op, h)
    return SimResult(field=field, heat_coefficient=h_eff, max_temperature=t_max,
                     total_heat=q, operating_point=op)


def latin_hypercube(bounds, n: int, seed: int) -> np.ndarray:
    """n x d samples, one per equal-width stratum in every dimension."""
    bounds = np.asarray(bounds, dtype=float)
    unit = qmc.LatinHypercube(d=len(bounds), seed=np.random.default_rng(seed)).random(n)
    return bounds[:, 0] + unit * (bounds[:, 1] - bounds[:, 0])


def _simulate_point(args, geometry, material, mesh, slim=False):
    index, op = args
    try:
        r = simulate(geometry, material, op, mesh=mesh)
    except SolverFailure as exc:
        raise SolverFailure(f"sample {index}: {exc}", residual=exc.residual) from exc
    if slim:  # worker processes send back plain data, not the mesh
        return r.field.node_temperatures, r.heat_coefficient, r.max_temperature, r.total_heat
    return r


def generate_snapshots(geometry: HeatsinkGeometry, material: MaterialProps,
                       velocity_range, flux_range, n: int, seed: int,
                       ambient_temperature: float = 300.0,
                       resolution: float = DEFAULT_RESOLUTION, jobs: int = 1) -> list[SimResult]:
    """Latin-hypercube sweep over (velocity, flux); results in sample order."""
    if n < 1:
        raise InvalidInputError("need at least one sample")
    for lo, hi in (velocity_range, flux_range):
        if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
            raise InvalidInputError(f"degenerate sampling range ({lo}, {hi})")
    points = latin_hypercube([velocity_range, flux_range], n, seed)
    ops = [OperatingPoint(float(v), float(q), ambient_temperature) for v, q in points]
    mesh = build_mesh(geometry, resolution)
    work = partial(_simulate_point, geometry=geometry, material=material, mesh=mesh)
    if jobs <= 1:
        return [work(item) for item in enumerate(ops)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(partial(work, slim=True), enumerate(ops),
                                chunksize=max(1, n // (4 * jobs))))
    return [SimResult(field=ThermalField(temps, mesh), heat_coefficient=h, max_temperature=t,
                      total_heat=q, operating_point=op)
            for (temps, h, t, q), op in zip(results, ops)]
