import math

import numpy as np
import pytest
from scipy.integrate import quad

from cylflow.cylinder import GraphPatch
from cylflow import diagnostics as diag
from cylflow import flow
from cylflow import spectral as sp


def _cylinder_profile(params, L=14.0, n=1400, value=None, kind="line"):
    grid = np.linspace(-L, L, n) if kind == "line" else np.linspace(0.0, L, n)
    v = np.full_like(grid, value if value is not None else params.rho)
    return flow.RadialProfile(params, kind, grid, v, time=0.0, time_kind="tau")


def test_gaussian_area_hyperplane():
    assert diag.gaussian_area(("hyperplane", 3)) == pytest.approx(1.0, abs=1e-12)


def test_gaussian_area_cylinder_quadrature_oracle(params21):
    # high-precision oracle for F[C_{2,1}] = sqrt(2 pi / e)
    rho = params21.rho
    oracle, _ = quad(
        lambda y: (4 * math.pi) ** -1 * 2 * math.pi * rho * math.exp(-(rho**2 + y * y) / 4.0),
        -40,
        40,
    )
    assert oracle == pytest.approx(math.sqrt(2 * math.pi / math.e), rel=1e-10)
    assert oracle == pytest.approx(1.52035, abs=1e-5)
    assert diag.gaussian_area(("cylinder", params21)) == pytest.approx(oracle, rel=1e-10)
    prof = _cylinder_profile(params21)
    assert diag.gaussian_area(prof) == pytest.approx(oracle, abs=1e-4)


def test_gaussian_density_self_similar_invariance(params21):
    # shrinking-cylinder flow: density at the spacetime origin equals F[C] at every scale
    target = diag.gaussian_area(("cylinder", params21))
    nk = params21.sphere_dim
    for t in (-1.0, -0.5, -0.1):
        radius = math.sqrt(-2.0 * nk * t)
        prof = _cylinder_profile(params21, L=20.0, n=2000, value=radius)
        assert diag.gaussian_density(prof, 0.0, -t) == pytest.approx(target, rel=1e-6)


def test_gaussian_area_truncation_warning(params21):
    prof = _cylinder_profile(params21, L=3.0, n=200)
    with pytest.warns(diag.TruncationWarning):
        diag.gaussian_area(prof)


def test_entropy_lower_bound_at_least_gaussian_area(params21):
    prof = _cylinder_profile(params21)
    f_val = diag.gaussian_area(prof, check_tail=False)
    ent = diag.entropy_lower_bound(prof, n_centers=5, n_scales=7, refine_rounds=1)
    assert ent >= f_val - 1e-12


def test_l2_distance_examples(params21):
    prof = _cylinder_profile(params21)
    assert diag.l2_distance(prof) <= 1e-10

    eps = 1e-3
    shifted = _cylinder_profile(params21, value=params21.rho + eps)
    w_area, _ = quad(
        lambda y: 2 * math.pi * params21.rho * math.exp(-(params21.rho**2 + y * y) / 4.0),
        -40,
        40,
    )
    assert diag.l2_distance(shifted) == pytest.approx(eps * math.sqrt(w_area), rel=0.01)

    saturated = _cylinder_profile(params21, value=params21.rho + 5.0)
    w_area_sat, _ = quad(
        lambda y: 2
        * math.pi
        * (params21.rho + 5.0)
        * math.exp(-((params21.rho + 5.0) ** 2 + y * y) / 4.0),
        -40,
        40,
    )
    assert diag.l2_distance(saturated) == pytest.approx(math.sqrt(w_area_sat), rel=1e-3)


def test_l2_distance_restricted(params21):
    prof = _cylinder_profile(params21, value=params21.rho + 0.2)
    full = diag.l2_distance(prof)
    inner = diag.l2_distance(prof, box_radius=4.0)
    assert 0 < inner < full


def test_decay_order_examples(params21):
    taus = np.arange(0.0, 6.0, 0.25)
    gamma = 0.37
    series = diag.DecaySeries(taus, np.exp(-gamma * taus))
    for tau in (0.0, 1.5, 4.25):
        assert diag.decay_order(series, tau) == pytest.approx(gamma, abs=1e-12)

    static = diag.DecaySeries(taus, np.full_like(taus, 0.8))
    assert diag.decay_order(static, 2.0) == pytest.approx(0.0, abs=1e-14)

    with pytest.raises(KeyError):
        diag.decay_order(series, 5.5)  # tau+1 beyond the sampling
    zero = diag.DecaySeries(np.array([0.0, 1.0]), np.array([0.0, 0.0]))
    with pytest.raises(ZeroDivisionError):
        diag.decay_order(zero, 0.0)


def test_nonconcentration_exact_cylinder_and_perturbed(params21, rng):
    grid = np.linspace(-10, 10, 600)
    rho = params21.rho
    profiles = []
    for i, tau in enumerate(np.linspace(0, 3, 13)):
        w = 1e-3 * math.exp(-0.5 * tau) * sp.hermite_eval(2, grid) / 10.0
        profiles.append(
            flow.RadialProfile(params21, "line", grid, rho + w, time=tau, time_kind="tau")
        )
    report = diag.nonconcentration_check(profiles)
    assert math.isfinite(report.fitted_c) and math.isfinite(report.fitted_k)
    assert report.bound_holds

    cyl = [
        flow.RadialProfile(params21, "line", grid, np.full_like(grid, rho), time=t, time_kind="tau")
        for t in (0.0, 1.0)
    ]
    with pytest.raises(ZeroDivisionError):
        diag.nonconcentration_check(cyl)  # d(0) = 0: ratio undefined


def test_h1_domination_examples(params21):
    # the functional only sees u up to positive scaling, so small multiples
    # keep the patches inside the graph regime without changing the values
    grid = np.linspace(-12, 12, 1200)
    eps = 5e-3

    pure = GraphPatch(params21, "line", grid, eps * grid)
    assert diag.h1_domination(pure, 1.0) == pytest.approx(0.0, abs=1e-10)

    affine = GraphPatch(params21, "line", grid, eps * (5.0 * grid + 3.0))
    assert diag.h1_domination(affine, 1.0) == pytest.approx(0.0, abs=1e-10)

    mixed_vals = eps * (grid + 0.1 * sp.hermite_eval(2, grid))
    mixed = GraphPatch(params21, "line", grid, mixed_vals)
    # weighted least-squares oracle: value^2 = E^2 - <u~, e>^2 / ||u~||^2
    w = np.exp(-(grid**2) / 4.0)
    tw = np.full_like(grid, grid[1] - grid[0])
    tw[0] = tw[-1] = tw[1] / 2

    def inner(f, g):
        return float(np.sum(f * g * w * tw))

    e = grid
    one = np.ones_like(grid)
    u = mixed_vals - inner(mixed_vals, one) / inner(one, one)
    expect = math.sqrt(inner(e, e) - inner(u, e) ** 2 / inner(u, u))  # scale drops out
    assert diag.h1_domination(mixed, 1.0) == pytest.approx(expect, rel=1e-9)
    assert expect > 0

    # scale invariance, closed form
    scaled = GraphPatch(params21, "line", grid, 7.3 * mixed_vals)
    assert diag.h1_domination(scaled, 1.0) == pytest.approx(
        diag.h1_domination(mixed, 1.0), abs=1e-12
    )

    # c > 0 constraint: anti-aligned u cannot absorb the linear mode
    anti = GraphPatch(params21, "line", grid, -eps * grid)
    e_norm = math.sqrt(inner(e, e))
    assert diag.h1_domination(anti, 1.0) == pytest.approx(e_norm, rel=1e-12)


def test_mode_fraction_examples(params21):
    basis = sp.SpineBasis(params21, "line", max_degree=8)
    grid = np.linspace(-16, 16, 1600)

    h2 = GraphPatch(params21, "line", grid, 1e-3 * sp.hermite_eval(2, grid))
    assert diag.mode_fraction(h2, 0.0, "=", basis) == pytest.approx(1.0, abs=1e-8)
    assert diag.mode_fraction(h2, -0.5, "=", basis) == pytest.approx(0.0, abs=1e-8)

    n1 = math.sqrt(sp.hermite_norm2_exact(1))
    n3 = math.sqrt(sp.hermite_norm2_exact(3))
    mix_vals = 1e-3 * (sp.hermite_eval(1, grid) / n1 + sp.hermite_eval(3, grid) / n3)
    mix = GraphPatch(params21, "line", grid, mix_vals)
    assert diag.mode_fraction(mix, -0.5, "=", basis) == pytest.approx(1 / math.sqrt(2), abs=1e-8)


def test_monotonicity_sweep_verdicts(params21):
    taus = np.arange(0.0, 5.0 + 1e-9, 0.1)

    pure = diag.DecaySeries(taus, 0.01 * np.exp(0.5 * taus))  # pure gamma = -1/2 mode
    verdicts, summary = diag.monotonicity_sweep(pure, params21, closeness=1e9)
    assert all(v.kind == "locked" and v.gamma == -0.5 for v in verdicts)
    assert summary["violations"] == 0

    # two-mode mixture: drops, then locks onto the lower eigenvalue
    taus = np.arange(0.0, 6.0 + 1e-9, 0.1)
    d2 = np.sqrt((3e-4 * np.exp(1.0 * taus)) ** 2 + (2e-3 * np.exp(0.0 * taus)) ** 2)
    mixed = diag.DecaySeries(taus, d2)
    verdicts, summary = diag.monotonicity_sweep(mixed, params21, closeness=1e9)
    kinds = [v.kind for v in verdicts]
    assert summary["violations"] == 0
    assert kinds[-1] == "locked" and verdicts[-1].gamma == -1.0
    assert summary["min_decay_order"] >= -1.0 - 0.05

    # leaving the closeness regime truncates the window
    big = diag.DecaySeries(taus, 0.05 * np.exp(1.0 * taus))
    _, summary = diag.monotonicity_sweep(big, params21, closeness=0.5)
    assert summary["window_truncated"]


def test_mean_curvature_profiles(params21):
    prof = _cylinder_profile(params21, L=5.0, n=200)
    h_vals = diag.mean_curvature_profile(prof)
    assert np.allclose(h_vals, params21.sphere_dim / params21.rho, atol=1e-10)

    grid = np.linspace(-0.6, 0.6, 400)
    sphere = flow.RadialProfile(
        params21, "line", grid, np.sqrt(1.0 - grid**2), time=0.0, time_kind="t"
    )
    h_sph = diag.mean_curvature_profile(sphere)
    inner = np.abs(grid) < 0.5
    assert np.allclose(h_sph[inner], params21.n, rtol=1e-4)


def test_noncollapse_sphere_alpha(params21):
    mer = diag.meridian_sphere(1.0, params21.n, n_points=500)
    report = diag.noncollapse_alpha(mer)
    assert report.alpha == pytest.approx(params21.n, rel=0.02)

    mer2 = diag.meridian_sphere(2.5, 3, n_points=500)
    assert diag.noncollapse_alpha(mer2).alpha == pytest.approx(3.0, rel=0.02)


def test_noncollapse_cylinder_alpha(params73):
    mer = diag.meridian_cylinder(params73, 12.0, n_points=400)
    report = diag.noncollapse_alpha(mer)
    assert report.alpha == pytest.approx(params73.sphere_dim, rel=0.05)


def test_noncollapse_refinement_stability(params21):
    vals = []
    for n_pts in (200, 400):
        phi = np.linspace(0.0, math.pi, n_pts)
        mer = diag.Meridian(params21, "line", p=1.5 * np.cos(phi), q=np.sin(phi))
        vals.append(diag.noncollapse_alpha(mer).alpha)
    assert vals[0] > 0
    assert abs(vals[1] - vals[0]) <= 0.05 * vals[0]


def test_noncollapse_requires_mean_convexity(params21):
    # a dumbbell meridian has H < 0 in the neck region
    grid = np.linspace(-3, 3, 300)
    v = 0.4 + 0.8 * np.exp(-((np.abs(grid) - 1.8) ** 2))
    prof = flow.RadialProfile(params21, "line", grid, v, time=0.0, time_kind="t")
    with pytest.raises(ValueError):
        diag.noncollapse_alpha(diag.meridian_from_profile(prof))


def test_surgery_euler_delta_values():
    assert diag.surgery_euler_delta(2, 1) == 2
    assert diag.surgery_euler_delta(3, 1) == 0
    assert diag.surgery_euler_delta(3, 2) == 0
    with pytest.raises(ValueError):
        diag.surgery_euler_delta(3, 3)


def test_surgery_euler_delta_against_simplicial_oracle():
    # independent oracle: chi(S^m) from the boundary of the (m+1)-simplex
    def chi_sphere(m):
        return sum((-1) ** i * math.comb(m + 2, i + 1) for i in range(m + 1))

    for n in range(2, 8):
        for k in range(1, n):
            assert diag.surgery_euler_delta(n, k) == chi_sphere(k - 1) - chi_sphere(n - k)


def test_dual_graph_sign_values(params21):
    grid = np.linspace(0.0, 1.0, 50)
    rising = flow.WGraphProfile(params21, grid, 0.1 + grid**2)
    vals = diag.dual_graph_sign_values(rising)
    assert np.all(vals < 0) == rising.is_strictly_monotone()

    dipped = flow.WGraphProfile(params21, grid, 0.1 + np.sin(6.0 * grid))
    vals = diag.dual_graph_sign_values(dipped)
    assert (not np.all(vals < 0)) == (not dipped.is_strictly_monotone())


def test_arrival_time_sphere():
    assert diag.arrival_time_sphere(1.0, 0.0, 2) == pytest.approx(0.25)
    assert diag.arrival_time_sphere(1.0, 0.3, 2) == pytest.approx((1 - 0.09) / 4)
