import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from heatsink_twin.errors import InvalidInputError
from heatsink_twin import thermal_sim
from heatsink_twin.thermal_sim import (H_FLOOR, HeatsinkGeometry, MaterialProps, OperatingPoint,
                                       build_mesh, convective_coefficient, extract_qois,
                                       generate_snapshots, latin_hypercube, simulate,
                                       solve_steady)
from oracles import block_temperature, rod_temperature

AIR = MaterialProps()


def slab(width=0.02, height=0.01):
    # single full-width "fin" on a base: a plain rectangle
    return HeatsinkGeometry(base_width=width, base_thickness=0.4 * height,
                            fin_height=0.6 * height, fin_count=1, fin_thickness=width)


def test_rod_matches_linear_profile():
    g = slab()
    mat = MaterialProps(conductivity=0.5)
    op = OperatingPoint(0.3, 800.0, 295.0)
    field = solve_steady(g, mat, op, resolution=2000, insulate_sides=True)
    h = convective_coefficient(0.3, g.base_length, mat)
    y = field.mesh.coords[:, 1]
    exact = rod_temperature(y, g.total_height, 800.0, h, 0.5, 295.0)
    rel = np.abs(field.node_temperatures - exact) / np.abs(exact - 295.0)
    assert rel.max() < 1e-6


def test_zero_flux_returns_ambient_exactly():
    op = OperatingPoint(0.4, 0.0, 310.5)
    res = simulate(HeatsinkGeometry(), AIR, op)
    assert np.all(res.field.node_temperatures == 310.5)
    assert res.total_heat == 0.0
    assert res.max_temperature == 310.5


@pytest.mark.parametrize("v,q", [(0.2, 850.0), (0.6, 450.0), (1.5, 3000.0)])
def test_energy_balance(v, q):
    g = HeatsinkGeometry()
    res = simulate(g, AIR, OperatingPoint(v, q))
    heat_in = q * g.base_width * g.base_length
    assert abs(res.total_heat - heat_in) / heat_in < 1e-6


def test_effective_coefficient_equals_applied_h():
    g = HeatsinkGeometry()
    res = simulate(g, AIR, OperatingPoint(0.45, 600.0))
    h = convective_coefficient(0.45, g.base_length, AIR)
    assert res.heat_coefficient == pytest.approx(h, rel=1e-12)


def test_refinement_against_block_series():
    g = slab()
    mat = MaterialProps(conductivity=0.1)
    op = OperatingPoint(0.5, 1000.0)
    h = convective_coefficient(0.5, g.base_length, mat)
    errors = []
    for res in (1000, 2000, 4000):
        f = solve_steady(g, mat, op, resolution=res)
        c = f.mesh.coords
        exact = block_temperature(c[:, 0], c[:, 1], 0.02, 0.01, 1000.0, h, 0.1, 300.0,
                                  n_terms=3000)
        errors.append(np.max(np.abs(f.node_temperatures - exact)) / np.max(exact - 300.0))
    assert errors[0] / errors[1] >= 3.0
    assert errors[1] / errors[2] >= 3.0


def test_h_floor_and_growth():
    assert convective_coefficient(0.0, 0.1, AIR) == H_FLOOR
    assert convective_coefficient(1.0, 0.1, AIR) < convective_coefficient(4.0, 0.1, AIR)
    # laminar closure: h scales with sqrt(v) above the floor
    ratio = convective_coefficient(4.0, 0.1, AIR) / convective_coefficient(1.0, 0.1, AIR)
    assert ratio == pytest.approx(2.0, rel=1e-12)


@given(st.floats(0.2, 3.0), st.floats(10.0, 5000.0), st.floats(1.5, 4.0))
def test_excess_is_linear_in_flux(v, q, factor):
    mesh = build_mesh(slab(), 1000)
    g, mat = slab(), MaterialProps(conductivity=20.0)
    a = solve_steady(g, mat, OperatingPoint(v, q), mesh=mesh).node_temperatures - 300.0
    b = solve_steady(g, mat, OperatingPoint(v, q * factor), mesh=mesh).node_temperatures - 300.0
    np.testing.assert_allclose(b, factor * a, rtol=1e-7)


def test_max_temperature_monotone():
    g = HeatsinkGeometry()
    mesh = build_mesh(g)
    t = [simulate(g, AIR, OperatingPoint(0.4, q), mesh=mesh).max_temperature
         for q in (450.0, 600.0, 850.0)]
    assert t[0] < t[1] < t[2]
    t = [simulate(g, AIR, OperatingPoint(v, 600.0), mesh=mesh).max_temperature
         for v in (0.2, 0.4, 0.6)]
    assert t[0] > t[1] > t[2]


def test_default_ranges_cover_reference_qois():
    g = HeatsinkGeometry()
    mesh = build_mesh(g)
    hot = simulate(g, AIR, OperatingPoint(0.2, 850.0), mesh=mesh)
    cold = simulate(g, AIR, OperatingPoint(0.6, 450.0), mesh=mesh)
    assert 300.46 <= cold.max_temperature < hot.max_temperature <= 306.36
    assert 4.20 <= hot.heat_coefficient < cold.heat_coefficient <= 9.85


def test_geometry_validation():
    with pytest.raises(InvalidInputError):
        HeatsinkGeometry(fin_count=0)
    with pytest.raises(InvalidInputError):
        HeatsinkGeometry(fin_count=40, fin_thickness=0.002)
    with pytest.raises(InvalidInputError):
        HeatsinkGeometry(base_width=-1.0)
    with pytest.raises(InvalidInputError):
        OperatingPoint(math.nan, 100.0)
    with pytest.raises(InvalidInputError):
        build_mesh(HeatsinkGeometry(), resolution=50)


def test_fin_spacing():
    g = HeatsinkGeometry()
    assert g.fin_spacing == pytest.approx((0.06 - 8 * 0.002) / 7)
    assert slab().fin_spacing == 0.0


@given(st.integers(2, 60), st.integers(0, 2**32 - 1))
def test_latin_hypercube_one_point_per_stratum(n, seed):
    pts = latin_hypercube([(0.2, 0.6), (450.0, 850.0)], n, seed)
    for d, (lo, hi) in enumerate([(0.2, 0.6), (450.0, 850.0)]):
        strata = np.floor((pts[:, d] - lo) / (hi - lo) * n).astype(int)
        assert sorted(strata) == list(range(n))


def test_snapshots_reproducible_and_ordered():
    g = slab()
    a = generate_snapshots(g, AIR, (0.2, 0.6), (450, 850), 6, seed=3)
    b = generate_snapshots(g, AIR, (0.2, 0.6), (450, 850), 6, seed=3)
    for ra, rb in zip(a, b):
        assert ra.operating_point == rb.operating_point
        assert np.array_equal(ra.field.node_temperatures, rb.field.node_temperatures)


def test_snapshots_parallel_identical():
    g = slab()
    serial = generate_snapshots(g, AIR, (0.2, 0.6), (450, 850), 8, seed=9)
    parallel = generate_snapshots(g, AIR, (0.2, 0.6), (450, 850), 8, seed=9, jobs=2)
    for ra, rb in zip(serial, parallel):
        assert np.array_equal(ra.field.node_temperatures, rb.field.node_temperatures)
        assert ra.total_heat == rb.total_heat


def test_degenerate_sampling_range():
    with pytest.raises(InvalidInputError):
        generate_snapshots(slab(), AIR, (0.5, 0.5), (450, 850), 4, seed=0)


def test_extract_qois_zero_field():
    g = slab()
    op = OperatingPoint(0.3, 0.0)
    field = solve_steady(g, AIR, op, resolution=1000)
    assert extract_qois(field, op, 7.0) == (0.0, 300.0, 0.0)


@pytest.mark.parametrize("q", [5e-324, 1e-300, 1e12])
def test_extreme_flux_scales_linearly(q):
    # the residual check must not underflow or overflow at the flux extremes
    mesh = _default_mesh()
    unit = thermal_sim._solve_excess(mesh, AIR.conductivity, 10.0, 1.0)
    theta = thermal_sim._solve_excess(mesh, AIR.conductivity, 10.0, q)
    np.testing.assert_array_equal(theta, q * unit)
    assert np.all(theta >= 0.0)


@given(st.floats(0.0, 5.0), st.floats(0.0, 5000.0), st.floats(250.0, 350.0))
def test_maximum_principle(v, q, ambient):
    g = HeatsinkGeometry()
    res = simulate(g, AIR, OperatingPoint(v, q, ambient), mesh=_default_mesh())
    assert np.all(res.field.node_temperatures >= ambient)
    assert res.total_heat >= 0.0
    assert res.max_temperature == res.field.node_temperatures.max()


_MESH = {}


def _default_mesh():
    if "m" not in _MESH:
        _MESH["m"] = build_mesh(HeatsinkGeometry())
    return _MESH["m"]
