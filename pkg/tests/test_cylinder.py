import math

import numpy as np
import pytest

from cylflow.cylinder import (
    GraphPatch,
    chi_eval,
    chi_prime,
    chi_second,
    graph_geometry,
    make_cylinder,
    odist,
    transform_graph,
)


def test_make_cylinder_radius():
    assert make_cylinder(2, 1).rho == pytest.approx(1.4142135623, abs=1e-9)
    assert make_cylinder(7, 3).rho == pytest.approx(math.sqrt(8.0), rel=1e-15)


@pytest.mark.parametrize("n,k", [(2, 2), (2, 0), (1, 1), (3, 3), (2, -1)])
def test_make_cylinder_rejects_bad_dimensions(n, k):
    with pytest.raises(ValueError):
        make_cylinder(n, k)


def test_chi_regions():
    assert chi_eval(0.3) == pytest.approx(0.3, abs=1e-15)
    assert chi_eval(2.0) == 1.0
    assert chi_eval(-2.0) == -1.0
    assert chi_eval(math.sqrt(2.0)) == pytest.approx(1.0, abs=1e-12)
    # smooth joins: value and first two derivatives
    for s in (0.5, math.sqrt(2.0)):
        eps = 1e-6
        left = chi_eval(s - eps)
        right = chi_eval(s + eps)
        assert right - left == pytest.approx(2 * eps * chi_prime(s), abs=1e-10)


def test_chi_oddness_bounds_randomized(rng):
    s = rng.uniform(-4.0, 4.0, 1000)
    vals = chi_eval(s)
    assert np.allclose(chi_eval(-s), -vals, atol=1e-15)
    assert np.all(np.abs(vals) <= np.minimum(np.abs(s), 1.0) + 1e-15)


def test_chi_monotone_and_concave_on_positive_axis():
    s = np.linspace(0.0, 2.0, 4001)
    assert np.all(chi_prime(s) >= -1e-13)
    assert np.all(chi_second(s) <= 1e-13)


def test_chi_subadditive_randomized(rng):
    s = rng.uniform(-3.0, 3.0, 1000)
    t = rng.uniform(-3.0, 3.0, 1000)
    lhs = chi_eval(np.abs(s + t))
    rhs = chi_eval(np.abs(s)) + chi_eval(np.abs(t))
    assert np.all(lhs <= rhs + 1e-12)


def test_odist_values(params21):
    rho = params21.rho
    on_cyl = np.array([rho, 0.0, 5.0])
    assert odist(on_cyl, params21) == pytest.approx(0.0, abs=1e-15)
    near = np.array([rho + 0.3, 0.0, -2.0])
    assert odist(near, params21) == pytest.approx(0.3, abs=1e-12)
    far = np.array([rho + 5.0, 0.0, 0.0])
    assert odist(far, params21) == 1.0
    with pytest.raises(ValueError):
        odist(np.array([1.0, 2.0]), params21)


def test_graph_geometry_flat_cylinder(params21):
    grid = np.linspace(-4, 4, 101)
    patch = GraphPatch(params21, "line", grid, np.zeros_like(grid))
    geo = graph_geometry(patch)
    assert np.allclose(geo.area_element, 1.0, atol=1e-14)
    assert np.allclose(geo.nu_theta, 1.0, atol=1e-14)
    assert np.allclose(geo.nu_spine, 0.0, atol=1e-14)


def test_graph_geometry_constant_offset():
    params = make_cylinder(2, 1)  # n-k = 1
    grid = np.linspace(-4, 4, 101)
    c = 0.07
    patch = GraphPatch(params, "line", grid, np.full_like(grid, c))
    geo = graph_geometry(patch)
    assert np.allclose(geo.area_element, 1.0 + c / params.rho, atol=1e-14)


def test_graph_geometry_unit_normal_and_orientation(params21, rng):
    grid = np.linspace(-4, 4, 201)
    u = 0.05 * np.sin(grid)
    patch = GraphPatch(params21, "line", grid, u)
    geo = graph_geometry(patch)
    norms = np.hypot(geo.nu_theta, geo.nu_spine)
    assert np.allclose(norms, 1.0, atol=1e-12)
    assert np.all(geo.nu_theta > 0)


def test_graph_patch_rejects_spine_touch(params21):
    grid = np.linspace(-1, 1, 11)
    with pytest.raises(ValueError):
        GraphPatch(params21, "line", grid, np.full_like(grid, -params21.rho))


def test_embedding_consistency(params21, rng):
    # odist of the embedded graph point equals chi of the height
    grid = np.linspace(-4, 4, 101)
    u = 0.4 * np.sin(1.7 * grid)
    patch = GraphPatch(params21, "line", grid, u)
    geo = graph_geometry(patch)
    for i in range(0, 101, 10):
        point = np.array([geo.radius[i], 0.0, grid[i]])
        assert odist(point, params21) == pytest.approx(chi_eval(u[i]), abs=1e-12)


def test_transform_spine_translation_exact(params21):
    grid = np.linspace(-4, 4, 161)  # h = 0.05
    u = 0.03 * np.exp(-(grid**2) / 2.0)
    patch = GraphPatch(params21, "line", grid, u)
    shift = 0.5  # multiple of h, so interpolation is nodal-exact
    out = transform_graph(patch, lam=1.0, xhat=[0.0, 0.0], yhat=shift)
    interior = np.abs(grid) <= 4.0 - shift
    expected = np.interp(grid + shift, grid, u)
    assert np.allclose(out.u_bar[0][interior], expected[interior], atol=1e-12)
    assert out.residual_max <= 1e-12


def test_transform_pure_dilation(params21):
    grid = np.linspace(-4, 4, 101)
    patch = GraphPatch(params21, "line", grid, np.zeros_like(grid))
    out = transform_graph(patch, lam=1.01, xhat=[0.0, 0.0], yhat=0.0)
    assert np.allclose(out.u_bar, params21.rho * 0.01, atol=1e-12)


def test_transform_translated_cylinder_matches_closed_form(params21):
    # independent oracle: solving |t theta' + xhat| = rho for the translated
    # round cylinder gives t = -c + sqrt(c^2 - |xhat|^2 + rho^2), c = xhat.theta'
    rho = params21.rho
    grid = np.linspace(-4, 4, 101)
    patch = GraphPatch(params21, "line", grid, np.zeros_like(grid))
    residuals = []
    sizes = [0.01, 0.02, 0.04]
    for eps in sizes:
        out = transform_graph(patch, lam=1.0, xhat=[eps, 0.0], yhat=0.0)
        for ci, c in enumerate(out.c_values):
            oracle = -c + math.sqrt(c * c - eps * eps + rho * rho) - rho
            assert np.allclose(out.u_bar[ci], oracle, atol=1e-12)
        residuals.append(out.residual_max)
    # residual of the first-order transformation law scales like |xhat|^2
    order = np.polyfit(np.log(sizes), np.log(residuals), 1)[0]
    assert order == pytest.approx(2.0, abs=0.1)
    assert residuals[-1] <= 2.0 * sizes[-1] ** 2


def test_transform_inverse_composition(params21):
    grid = np.linspace(-6, 6, 241)
    u = 0.02 * np.exp(-(grid**2) / 4.0)  # decays before the zero-extension seam
    patch = GraphPatch(params21, "line", grid, u)
    lam, shift = 1.02, 0.5
    fwd = transform_graph(patch, lam=lam, xhat=[0.0, 0.0], yhat=shift)
    back = transform_graph(
        fwd.patch_at(0), lam=1.0 / lam, xhat=[0.0, 0.0], yhat=-shift / lam
    )
    interior = np.abs(grid) <= 4.0
    assert np.max(np.abs(back.u_bar[0][interior] - u[interior])) <= 1e-6


def test_transform_refuses_out_of_regime(params21):
    grid = np.linspace(-4, 4, 101)
    patch = GraphPatch(params21, "line", grid, np.zeros_like(grid))
    with pytest.raises(ValueError):
        transform_graph(patch, lam=1.2, xhat=[0.0, 0.0], yhat=0.0)
