import math

import numpy as np
import pytest

from cylflow import flow
from cylflow import spectral as sp


def _cylinder_profile(params, L=5.0, n=201, value=None, time_kind="tau", time=25.0):
    grid = np.linspace(-L, L, n)
    v = np.full_like(grid, value if value is not None else params.rho)
    return flow.RadialProfile(params, "line", grid, v, time=time, time_kind=time_kind)


def test_shrinker_fixed_point(params21):
    cfg = flow.StepperConfig(dt=0.01, boundary="pinned")
    prof = _cylinder_profile(params21)
    for _ in range(500):
        nxt = flow.rmcf_step(prof, cfg)
        assert np.max(np.abs(nxt.v - params21.rho)) < 1e-12
        prof = nxt


def test_shrinker_fixed_point_radial(params73):
    grid = np.linspace(0.0, 5.0, 161)
    prof = flow.RadialProfile(
        params73, "radial", grid, np.full_like(grid, params73.rho), time=25.0, time_kind="tau"
    )
    cfg = flow.StepperConfig(dt=0.02, boundary="neumann")
    for _ in range(200):
        prof = flow.rmcf_step(prof, cfg)
    assert np.max(np.abs(prof.v - params73.rho)) < 1e-12


def test_cylinder_radius_law(params21):
    prof = _cylinder_profile(params21, L=3.0, n=500, value=1.0, time_kind="t", time=0.0)
    cfg = flow.StepperConfig(dt=2e-4, boundary="neumann")
    while prof.time < 0.25 - 1e-12:
        prof = flow.mcf_step(prof, cfg)
    exact = math.sqrt(1.0 - 2.0 * params21.sphere_dim * prof.time)
    assert np.max(np.abs(prof.v / exact - 1.0)) < 1e-6


def test_rmcf_eigenmode_tracks_linear_theory(params21):
    rho = params21.rho
    grid = np.linspace(-10, 10, 400)
    eps = 1e-4
    for j, tol in ((1, 1e-3), (2, 1e-3)):
        w = sp.hermite_eval(j, grid) / math.sqrt(sp.hermite_norm2_exact(j))
        prof = flow.RadialProfile(params21, "line", grid, rho + eps * w, time=0.0, time_kind="tau")
        cfg = flow.StepperConfig(dt=0.005, boundary="neumann")
        for _ in range(200):
            prof = flow.rmcf_step(prof, cfg)
        gamma = j / 2.0 - 1.0
        pred = eps * math.exp(-gamma) * w
        wgt = np.exp(-(grid**2) / 4.0)
        err = math.sqrt(
            float(np.sum(((prof.v - rho) - pred) ** 2 * wgt) / np.sum(pred**2 * wgt))
        )
        assert err < tol  # relative deviation is O(eps)


def test_normal_form_family_pde_residual_order(params21):
    # analytic-derivative oracle: residual of the sqrt-profile under the
    # rescaled tube equation decays like tau^-2
    rho = params21.rho

    def residual(tau0):
        x = np.linspace(-2.0, 2.0, 2001)
        q = (x**2 - 2.0) / (2.0 * tau0)
        v = rho * np.sqrt(1.0 + q)
        dv = rho * x / (2.0 * tau0 * np.sqrt(1.0 + q))
        d2v = rho / (2.0 * tau0 * np.sqrt(1.0 + q)) - rho * x**2 / (
            4.0 * tau0**2 * (1.0 + q) ** 1.5
        )
        dtau = -rho * q / (2.0 * tau0 * np.sqrt(1.0 + q))
        rhs = d2v / (1.0 + dv**2) - (x / 2.0) * dv - 1.0 / v + v / 2.0
        return float(np.max(np.abs(dtau - rhs)))

    r100, r400 = residual(100.0), residual(400.0)
    order = math.log(r100 / r400) / math.log(4.0)
    assert order == pytest.approx(2.0, abs=0.3)


def test_jacobi_neutral_and_constant_modes(params21):
    grid = np.linspace(-12, 12, 600)
    wgt = np.exp(-(grid**2) / 4.0)

    h2 = sp.hermite_eval(2, grid)
    f = flow.GridJacobiField(params21, "line", grid, h2.copy(), 0.0)
    for _ in range(100):
        f = flow.jacobi_step(f, 0.01)
    rel = math.sqrt(float(np.sum((f.values - h2) ** 2 * wgt) / np.sum(h2**2 * wgt)))
    assert rel < 1e-8

    ones = np.ones_like(grid)
    f = flow.GridJacobiField(params21, "line", grid, ones.copy(), 0.0)
    for _ in range(100):
        f = flow.jacobi_step(f, 0.01)
    growth = math.sqrt(float(np.sum(f.values**2 * wgt) / np.sum(wgt)))
    assert growth == pytest.approx(math.e, rel=1e-4)


def test_jacobi_grid_matches_semigroup_order(params21, rng):
    # spectral oracle: analytic mode evolution; grid error must shrink at
    # measured order >= 1.8 in h
    coeffs = rng.standard_normal(5)
    tau_end = 0.5
    errors = []
    sizes = [150, 300, 600]
    for n_pts in sizes:
        grid = np.linspace(-12, 12, n_pts)
        wgt = np.exp(-(grid**2) / 4.0)
        v0 = np.zeros_like(grid)
        exact = np.zeros_like(grid)
        for j, c in enumerate(coeffs):
            lam = j / 2.0 - 1.0
            v0 += c * sp.hermite_eval(j, grid)
            exact += c * math.exp(-lam * tau_end) * sp.hermite_eval(j, grid)
        f = flow.GridJacobiField(params21, "line", grid, v0, 0.0)
        steps = 2000  # dt fixed and small so spatial error dominates
        for _ in range(steps):
            f = flow.jacobi_step(f, tau_end / steps)
        errors.append(
            math.sqrt(float(np.sum((f.values - exact) ** 2 * wgt) / np.sum(exact**2 * wgt)))
        )
    order = math.log(errors[0] / errors[2]) / math.log(sizes[2] / sizes[0])
    assert order >= 1.8


def test_linearization_consistency_quadratic(params21):
    rho = params21.rho
    grid = np.linspace(-12, 12, 600)
    w0 = sp.hermite_eval(2, grid)
    wgt = np.exp(-(grid**2) / 4.0)
    dt = 0.01
    resid = []
    eps_list = [1e-3, 1e-4, 1e-5]
    for eps in eps_list:
        prof = flow.RadialProfile(params21, "line", grid, rho + eps * w0, time=25.0, time_kind="tau")
        v1 = flow.rmcf_step(prof, flow.StepperConfig(dt=dt, boundary="pinned")).v
        jf = flow.jacobi_step(flow.GridJacobiField(params21, "line", grid, w0.copy(), 0.0), dt)
        v2 = rho + eps * jf.values
        resid.append(math.sqrt(float(np.sum((v1 - v2) ** 2 * wgt) / np.sum(wgt))))
    slope = np.polyfit(np.log(eps_list), np.log(resid), 1)[0]
    assert slope >= 1.8


def test_stepper_convergence_orders(params21):
    rho = params21.rho

    def run(n_pts, dt, horizon=0.2):
        grid = np.linspace(-6, 6, n_pts)
        v0 = rho + 0.2 * np.exp(-(grid**2) / 2.0)
        prof = flow.RadialProfile(params21, "line", grid, v0, time=25.0, time_kind="tau")
        cfg = flow.StepperConfig(dt=dt, boundary="pinned")
        while prof.time < 25.0 + horizon - 1e-12:
            prof = flow.rmcf_step(prof, cfg)
        return prof

    # spatial order via Richardson: compare N, 2N, 4N at matching nodes
    fine_dt = 2e-3
    p1, p2, p3 = run(151, fine_dt), run(301, fine_dt), run(601, fine_dt)
    e12 = float(np.max(np.abs(p1.v - p2.v[::2])))
    e23 = float(np.max(np.abs(p2.v - p3.v[::2])))
    spatial_order = math.log(e12 / e23) / math.log(2.0)
    assert spatial_order >= 1.8

    # temporal order against a refined self-solution
    base = 0.02
    q1, q2, q3 = run(301, base), run(301, base / 2), run(301, base / 4)
    t12 = float(np.max(np.abs(q1.v - q2.v)))
    t23 = float(np.max(np.abs(q2.v - q3.v)))
    temporal_order = math.log(t12 / t23) / math.log(2.0)
    assert temporal_order >= 0.9


def test_cfl_rejection_carries_suggestion(params21):
    prof = _cylinder_profile(params21, value=1.3)
    cfg = flow.StepperConfig(dt=1.0, boundary="neumann")
    with pytest.raises(flow.StepRejected) as err:
        flow.rmcf_step(prof, cfg)
    assert 0 < err.value.suggested_dt < 1.0
    flow.rmcf_step(prof, cfg, dt=err.value.suggested_dt)  # suggested step works


def test_degenerate_profile_refused(params21):
    prof = _cylinder_profile(params21, value=1e-7 * params21.rho)
    with pytest.raises(flow.DegenerateProfileError):
        flow.rmcf_step(prof, flow.StepperConfig(dt=1e-12, boundary="neumann"))


def test_avoidance_against_shrinking_cylinder(params21, rng):
    # solutions starting below an exact shrinking cylinder stay below it
    nk = params21.sphere_dim
    grid = np.linspace(-4, 4, 301)
    for _ in range(5):
        bumps = 0.3 + 0.5 * rng.random() + 0.15 * np.sin(rng.uniform(1, 3) * grid)
        r0 = float(np.max(bumps)) + 0.05
        prof = flow.RadialProfile(params21, "line", grid, bumps, time=0.0, time_kind="t")
        cfg = flow.StepperConfig(dt=1e-4, boundary="neumann", vmin_stop=5e-3)
        trace = flow.run_flow(prof, cfg, horizon=r0**2 / (2 * nk) * 0.8, sample_dt=5e-3, adaptive=True)
        for s in trace.samples:
            t = s["time"]
            bound = r0**2 - 2.0 * nk * t
            if bound <= 0:
                break
            assert float(np.max(s["profile"].v)) <= math.sqrt(bound) + 1e-6


def test_detect_pinch_exact_cylinder(params21):
    prof = _cylinder_profile(params21, L=3.0, n=300, value=1.0, time_kind="t", time=0.0)
    cfg = flow.StepperConfig(dt=1e-4, boundary="neumann", vmin_stop=5e-3)
    trace = flow.run_flow(prof, cfg, horizon=1.0, sample_dt=0.01, adaptive=True)
    est = flow.detect_pinch(trace)
    assert est is not None
    assert est.time == pytest.approx(0.5, abs=1e-4)  # T = R0^2 / (2(n-k))


def test_detect_pinch_none_for_quiet_trace(params21):
    prof = _cylinder_profile(params21, value=1.0, time_kind="t", time=0.0)
    cfg = flow.StepperConfig(dt=1e-4, boundary="neumann")
    trace = flow.run_flow(prof, cfg, horizon=0.05, sample_dt=0.01)
    assert flow.detect_pinch(trace) is None


def test_cusp_profile_values(params21):
    assert flow.cusp_profile(0.05, params21) == pytest.approx(0.020427, abs=1e-6)
    small = flow.cusp_profile(1e-8, params21)
    assert 0 < small < 1e-8
    ys = np.linspace(1e-3, math.exp(-1.0), 200)
    vals = flow.cusp_profile(ys, params21)
    assert np.all(np.diff(vals) > 0)  # monotone on (0, 1/e)
    ratio = vals * 2.0 * np.sqrt(-np.log(ys)) / (params21.rho * ys)
    assert np.allclose(ratio, 1.0, atol=1e-12)
    with pytest.raises(ValueError):
        flow.cusp_profile(1.5, params21)


def test_invert_cusp_roundtrip(params21):
    ys = np.linspace(1e-4, 0.3, 40)
    s = flow.cusp_profile(ys, params21)
    back = flow.invert_cusp_profile(s, params21)
    assert np.allclose(back, ys, rtol=1e-10, atol=1e-12)


def test_post_singular_hyperplane_stationary(params21):
    # a hyperplane is minimal: stationary (and legitimately not strictly monotone)
    grid = np.linspace(0.0, 1.0, 101)
    wp = flow.WGraphProfile(params21, grid, np.full_like(grid, 0.3))
    out, _ = flow.post_singular_step(wp, 1e-3)
    assert np.max(np.abs(out.w - 0.3)) < 1e-14


def test_post_singular_monotone_run(params21):
    s_max = flow.cusp_profile(0.25, params21)
    wp = flow.initial_post_singular(params21, s_max, n_points=200)
    out, flags, violations = flow.run_post_singular(wp, dt=1e-6, horizon=5e-5)
    assert violations == 0
    assert out.w[0] > 0  # the tip lifts off


def test_bowl_series_oracle_near_zero():
    # series oracle: U - s^2/(2m) = s^4 / (m^3 (4m + 8)) + O(s^6)
    for m in (2, 3, 6):
        bowl = flow.bowl_translator_solve(m, 0.5, n_points=400)
        a4 = 1.0 / (m**3 * (4.0 * m + 8.0))
        gap = bowl.U - bowl.s**2 / (2.0 * m)
        small = (bowl.s > 0.05) & (bowl.s < 0.2)
        assert np.allclose(gap[small] / bowl.s[small] ** 4, a4, rtol=1e-2)


def test_bowl_convex_and_tail():
    bowl = flow.bowl_translator_solve(3, 40.0, n_points=1500)
    assert np.all(bowl.d2U() > 0)
    gap = bowl.asymptotic_gap()
    tail = bowl.s > 10.0
    # converges: increments over geometric checkpoints shrink
    checks = np.interp([10.0, 20.0, 40.0], bowl.s, gap)
    assert abs(checks[2] - checks[1]) < abs(checks[1] - checks[0])
    with pytest.raises(ValueError):
        flow.bowl_translator_solve(1, 10.0)


def test_time_gauge_recenters_constant_mode(params21):
    rho = params21.rho
    grid = np.linspace(0.0, 8.0, 300)
    prof = flow.RadialProfile(
        params21, "radial", grid, np.full_like(grid, rho * 1.01), time=30.0, time_kind="tau"
    )
    out = flow.time_gauge_recenter(prof)
    assert abs(flow.constant_mode_amplitude(out)) < 1e-13
    assert out.time != prof.time  # singular-time relabel applied


def test_trace_time_stamps_increase(params21):
    prof = _cylinder_profile(params21, value=1.0, time_kind="t", time=0.0)
    cfg = flow.StepperConfig(dt=1e-3, boundary="neumann")
    trace = flow.run_flow(prof, cfg, horizon=0.05, sample_dt=0.01)
    times = trace.sample_times()
    assert np.all(np.diff(times) > 0)
