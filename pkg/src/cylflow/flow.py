"""Time steppers for the symmetric-reduced flows and related profiles.

The hypersurface {|x| = v} is reduced to a profile v of one coordinate: the
spine coordinate y (kind "line", k = 1) or the spine radius r (kind "radial").
Rescaled flow:   d_tau v = v''/(1+v'^2) + ((k-1)/r - r/2) v' - (n-k)/v + v/2
Unrescaled flow: d_t   v = v''/(1+v'^2) + ((k-1)/r) v'       - (n-k)/v

Each step solves the frozen-coefficient linear core implicitly (tridiagonal,
Crank-Nicolson) and treats the remaining zeroth-order nonlinearity explicitly
with one corrector refresh.  The linear core at v = rho is exactly the
discrete Jacobi operator used by `jacobi_step`, so v = rho is a fixed point to
round-off and the discrete linearization of the rescaled step matches the
linear step exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_banded

from .cylinder import CylinderParams

__all__ = [
    "RadialProfile",
    "StepperConfig",
    "FlowTrace",
    "StepRejected",
    "PinchSignal",
    "DegenerateProfileError",
    "rmcf_step",
    "mcf_step",
    "GridJacobiField",
    "jacobi_step",
    "nondegenerate_initial",
    "normal_form_profile",
    "constant_mode_amplitude",
    "time_gauge_recenter",
    "SelfSimilarProfile",
    "SelfSimilarStepper",
    "self_similar_family",
    "self_similar_gauge",
    "nondegenerate_self_similar_initial",
    "run_self_similar",
    "run_flow",
    "detect_pinch",
    "PinchEstimate",
    "cusp_profile",
    "invert_cusp_profile",
    "WGraphProfile",
    "post_singular_step",
    "initial_post_singular",
    "run_post_singular",
    "bowl_translator_solve",
    "BowlProfile",
]

DEGENERATE_FRACTION = 1e-6  # min v below this multiple of rho refuses stepping


class StepRejected(RuntimeError):
    """Time step too large for the explicit part; carries a suggested dt."""

    def __init__(self, dt: float, suggested: float):
        super().__init__(f"dt={dt:g} rejected; suggested dt <= {suggested:g}")
        self.suggested_dt = suggested


class PinchSignal(RuntimeError):
    """The profile radius reached zero (or below) during a step."""

    def __init__(self, time: float):
        super().__init__(f"profile pinched at time {time:g}")
        self.time = time


class DegenerateProfileError(ValueError):
    pass


@dataclass
class RadialProfile:
    """Radius samples v(>0) of {|x| = v} on a uniform 1-D grid.

    kind "line": coordinate y in [-L, L] (k = 1).
    kind "radial": coordinate r in [0, R], even symmetry at r = 0.
    time_kind flags whether `time` is flow time t or rescaled time tau.
    """

    params: CylinderParams
    kind: str
    grid: np.ndarray
    v: np.ndarray
    time: float = 0.0
    time_kind: str = "tau"

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.kind not in ("line", "radial"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.kind == "radial" and abs(self.grid[0]) > 1e-14:
            raise ValueError("radial grid must start at r = 0")
        if self.time_kind not in ("t", "tau"):
            raise ValueError("time_kind must be 't' or 'tau'")
        if not np.all(np.isfinite(self.v)):
            raise ValueError("profile radius must be finite")

    @property
    def h(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def u(self) -> np.ndarray:
        """Graph height over the cylinder, v - rho."""
        return self.v - self.params.rho

    def dv(self) -> np.ndarray:
        dv = np.gradient(self.v, self.grid, edge_order=2)
        if self.kind == "radial":
            dv[0] = 0.0
        return dv

    def min_radius(self) -> tuple[float, float]:
        idx = int(np.argmin(self.v))
        return float(self.v[idx]), float(self.grid[idx])

    def with_values(self, v: np.ndarray, time: float) -> "RadialProfile":
        return replace(self, v=v, time=time)


@dataclass
class StepperConfig:
    """Step size, far-field boundary mode, stopping thresholds.

    For unrescaled pinned runs the boundary follows the shrinking-cylinder law
    v_b^2' = -2(n-k) by default; `pin_rate` overrides the rate (a shrinking
    sphere's boundary ring obeys v_b^2' = -2n).
    """

    dt: float = 0.01
    boundary: str = "pinned"  # "pinned" (homothetic schedule) or "neumann"
    vmin_stop: float = 1e-3
    max_steps: int = 10_000_000
    cfl_safety: float = 1.0
    pin_rate: float | None = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.vmin_stop <= 0:
            raise ValueError("vmin_stop must be positive")
        if self.boundary not in ("pinned", "neumann"):
            raise ValueError(f"unknown boundary mode {self.boundary!r}")


# ---------------------------------------------------------------------------
# Tridiagonal Crank-Nicolson core.
# ---------------------------------------------------------------------------


def _operator_rows(a, b, c0, h, n):
    """Tridiagonal rows of A = a D^2 + b D^1 + c0 I (interior stencils)."""
    sub = a / (h * h) - b / (2.0 * h)
    diag = -2.0 * a / (h * h) + c0
    sup = a / (h * h) + b / (2.0 * h)
    return sub, diag, sup


def _apply_tridiag(sub, diag, sup, v):
    out = diag * v
    out[:-1] += sup[:-1] * v[1:]
    out[1:] += sub[1:] * v[:-1]
    return out


def _cn_solve(sub, diag, sup, rhs, beta):
    n = rhs.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = -beta * sup[:-1]
    ab[1, :] = 1.0 - beta * diag
    ab[2, :-1] = -beta * sub[1:]
    return solve_banded((1, 1), ab, rhs)


class _ProfileStepper:
    """One family of IMEX steps on a fixed grid (rescaled or unrescaled)."""

    def __init__(self, profile: RadialProfile, cfg: StepperConfig, rescaled: bool):
        self.params = profile.params
        self.kind = profile.kind
        self.grid = profile.grid
        self.h = profile.h
        self.n = profile.grid.shape[0]
        self.cfg = cfg
        self.rescaled = rescaled
        k = self.params.k
        x = self.grid
        if self.kind == "line":
            self.drift = -x / 2.0 if rescaled else np.zeros_like(x)
            self.extra_lap = 0.0
        else:
            self.drift = np.zeros_like(x)
            self.drift[1:] = (k - 1) / x[1:]
            if rescaled:
                self.drift -= x / 2.0
            self.drift[0] = 0.0
            self.extra_lap = float(k - 1)  # (k-1) v'/r -> (k-1) v''(0) at the axis
        # The rescaled linear core carries +v so it matches the Jacobi operator;
        # the remaining -v/2 - (n-k)/v is the explicit part (quadratically small
        # at v = rho).  The unrescaled flow keeps all zeroth-order terms explicit.
        self.c0 = 1.0 if rescaled else 0.0

    def explicit(self, v):
        nk = self.params.sphere_dim
        if self.rescaled:
            return -nk / v - 0.5 * v
        return -nk / v

    def explicit_lipschitz(self, v):
        nk = self.params.sphere_dim
        lam = nk / float(np.min(v)) ** 2
        if self.rescaled:
            lam += 0.5
        return lam

    def _rows(self, v):
        dv = np.gradient(v, self.grid, edge_order=2)
        if self.kind == "radial":
            dv[0] = 0.0
        a = 1.0 / (1.0 + dv * dv)
        sub, diag, sup = _operator_rows(a, self.drift, self.c0, self.h, self.n)
        # symmetry row at r = 0: ghost v[-1] = v[1], Laplacian multiplier a + extra
        if self.kind == "radial":
            a_eff = a[0] + self.extra_lap
            sub[0] = 0.0
            diag[0] = -2.0 * a_eff / self.h**2 + self.c0
            sup[0] = 2.0 * a_eff / self.h**2
        return sub, diag, sup

    def _boundary_values(self, profile: RadialProfile, t_new: float):
        """Dirichlet values for the pinned mode at the new time."""
        rho = self.params.rho
        nk = self.params.sphere_dim
        ends = [self.n - 1] if self.kind == "radial" else [0, self.n - 1]
        values = {}
        for idx in ends:
            vb = float(profile.v[idx])
            if self.rescaled:
                tau = profile.time
                if tau >= 1.0:
                    q = (vb / rho) ** 2 - 1.0
                    values[idx] = rho * math.sqrt(max(1.0 + q * tau / t_new, 0.0))
                else:
                    values[idx] = vb
            else:
                rate = 2.0 * nk if self.cfg.pin_rate is None else self.cfg.pin_rate
                arg = vb * vb - rate * (t_new - profile.time)
                if arg <= 0.0:
                    raise PinchSignal(t_new)
                values[idx] = math.sqrt(arg)
        return values

    def step(self, profile: RadialProfile, dt: float | None = None) -> RadialProfile:
        cfg = self.cfg
        dt = cfg.dt if dt is None else float(dt)
        v = profile.v
        rho = self.params.rho
        if float(np.min(v)) < DEGENERATE_FRACTION * rho:
            raise DegenerateProfileError(
                "graph regime broken (min v < 1e-6 rho); hand off to detect_pinch"
            )
        lam = self.explicit_lipschitz(v)
        if dt * lam > cfg.cfl_safety:
            raise StepRejected(dt, cfg.cfl_safety / lam)

        sub, diag, sup = self._rows(v)
        beta = dt / 2.0
        t_new = profile.time + dt

        if cfg.boundary == "pinned":
            bvals = self._boundary_values(profile, t_new)
        else:
            bvals = {}
            # reflecting ghosts: v' = 0 at the ends
            a_end = 1.0
            for idx, nbr in ((0, 1), (self.n - 1, self.n - 2)):
                if self.kind == "radial" and idx == 0:
                    continue  # axis row already symmetric
                sub[idx] = 0.0
                sup[idx] = 0.0
                diag[idx] = -2.0 * a_end / self.h**2 + self.c0
                if nbr > idx:
                    sup[idx] = 2.0 * a_end / self.h**2
                else:
                    sub[idx] = 2.0 * a_end / self.h**2

        def solve_with(r_mid):
            rhs = v + beta * _apply_tridiag(sub, diag, sup, v) + dt * r_mid
            s_sub, s_diag, s_sup = sub, diag, sup
            if bvals:
                s_sub, s_diag, s_sup = sub.copy(), diag.copy(), sup.copy()
                # Dirichlet rows: zeroed operator rows make the CN matrix row
                # (1 - beta*0) v_new[idx] = rhs[idx], i.e. v_new[idx] = val.
                for idx, val in bvals.items():
                    s_sub[idx] = 0.0
                    s_sup[idx] = 0.0
                    s_diag[idx] = 0.0
                    rhs[idx] = val
            return _cn_solve(s_sub, s_diag, s_sup, rhs, beta)

        r_old = self.explicit(v)
        v_star = solve_with(r_old)
        if float(np.min(v_star)) <= 0.0:
            raise PinchSignal(t_new)
        r_new = self.explicit(np.maximum(v_star, 1e-300))
        v_next = solve_with(0.5 * (r_old + r_new))
        if float(np.min(v_next)) <= 0.0:
            raise PinchSignal(t_new)
        return profile.with_values(v_next, t_new)


def rmcf_step(profile: RadialProfile, cfg: StepperConfig, dt: float | None = None) -> RadialProfile:
    """One IMEX step of the rescaled flow; v = rho is preserved to round-off."""
    if profile.time_kind != "tau":
        raise ValueError("rescaled step expects a tau-stamped profile")
    return _ProfileStepper(profile, cfg, rescaled=True).step(profile, dt)


def mcf_step(profile: RadialProfile, cfg: StepperConfig, dt: float | None = None) -> RadialProfile:
    """One IMEX step of the unrescaled flow."""
    if profile.time_kind != "t":
        raise ValueError("unrescaled step expects a t-stamped profile")
    return _ProfileStepper(profile, cfg, rescaled=False).step(profile, dt)


# ---------------------------------------------------------------------------
# Linear Jacobi-field evolution on the same grid machinery.
# ---------------------------------------------------------------------------


@dataclass
class GridJacobiField:
    """Grid samples of a Jacobi field u(., tau) in a symmetric reduction."""

    params: CylinderParams
    kind: str
    grid: np.ndarray
    values: np.ndarray
    tau: float = 0.0

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)


def jacobi_step(field: GridJacobiField, dt: float) -> GridJacobiField:
    """Crank-Nicolson step of d_tau u = L u with zero Dirichlet far field.

    Uses exactly the linear core of `rmcf_step`, so rho + eps*jacobi evolution
    matches the rescaled step on rho + eps*u to second order in eps.
    """
    params, kind, grid = field.params, field.kind, field.grid
    n = grid.shape[0]
    h = float(grid[1] - grid[0])
    k = params.k
    if kind == "line":
        drift = -grid / 2.0
        extra = 0.0
    else:
        drift = np.zeros_like(grid)
        drift[1:] = (k - 1) / grid[1:]
        drift -= grid / 2.0
        drift[0] = 0.0
        extra = float(k - 1)
    a = np.ones(n)
    sub, diag, sup = _operator_rows(a, drift, 1.0, h, n)
    if kind == "radial":
        a_eff = 1.0 + extra
        sub[0] = 0.0
        diag[0] = -2.0 * a_eff / h**2 + 1.0
        sup[0] = 2.0 * a_eff / h**2
    ends = [n - 1] if kind == "radial" else [0, n - 1]
    beta = dt / 2.0
    rhs = field.values + beta * _apply_tridiag(sub, diag, sup, field.values)
    for idx in ends:
        sub[idx] = 0.0
        sup[idx] = 0.0
        diag[idx] = 0.0  # identity row under the CN solve
        rhs[idx] = field.values[idx]  # hold the far value (weight-negligible)
    out = _cn_solve(sub, diag, sup, rhs, beta)
    return GridJacobiField(params, kind, grid, out, field.tau + dt)


# ---------------------------------------------------------------------------
# Initial data.
# ---------------------------------------------------------------------------


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def normal_form_profile(params: CylinderParams, tau0: float, x, kind: str = "line") -> np.ndarray:
    """The rescaled profile rho*sqrt(1 + (|y|^2 - 2k)/(2 tau0)), blended to its
    boundary-annulus value outside |y| = sqrt(tau0)."""
    x = np.asarray(x, dtype=float)
    k = params.k
    q = x * x - 2.0 * k
    cap = tau0 - 2.0 * k
    r1 = 0.9 * math.sqrt(tau0)
    r2 = 1.1 * math.sqrt(tau0)
    sigma = _smoothstep((np.abs(x) - r1) / (r2 - r1))
    s = (1.0 - sigma) * q + sigma * cap
    return params.rho * np.sqrt(1.0 + s / (2.0 * tau0))


def nondegenerate_initial(
    params: CylinderParams,
    tau0: float,
    kind: str = "line",
    half_width: float | None = None,
    n_points: int = 512,
) -> RadialProfile:
    """Rescaled initial data of a nondegenerate cylindrical singularity:
    v = rho + rho(|y|^2 - 2k)/(4 tau0), blended to the slightly larger
    homothetic-annulus value outside |y| = sqrt(tau0)."""
    if tau0 < 10.0:
        raise ValueError("tau0 must be >= 10 for the asymptotic regime")
    L = math.sqrt(tau0) if half_width is None else float(half_width)
    if kind == "line":
        grid = np.linspace(-L, L, n_points)
    else:
        grid = np.linspace(0.0, L, n_points)
    k = params.k
    q = grid * grid - 2.0 * k
    cap = tau0 - 2.0 * k
    r1 = 0.9 * math.sqrt(tau0)
    r2 = 1.1 * math.sqrt(tau0)
    sigma = _smoothstep((np.abs(grid) - r1) / (r2 - r1))
    s = (1.0 - sigma) * q + sigma * cap
    v = params.rho + params.rho * s / (4.0 * tau0)
    return RadialProfile(params, kind, grid, v, time=tau0, time_kind="tau")


# ---------------------------------------------------------------------------
# Run loop and pinch detection.
# ---------------------------------------------------------------------------


def constant_mode_amplitude(profile: RadialProfile) -> float:
    """Weighted mean of the graph height u = v - rho over the grid."""
    u = profile.u()
    x = profile.grid
    w = np.exp(-(x**2) / 4.0)
    if profile.kind == "radial":
        w = w * x ** (profile.params.k - 1)
    return float(np.sum(u * w) / np.sum(w))


def time_gauge_recenter(profile: RadialProfile, max_iter: int = 4) -> RadialProfile:
    """Re-base the rescaled flow at its own singular time.

    Applies the exact base-point-change symmetry v(y) -> lam * v(y/lam),
    tau -> tau - 2 log(lam), choosing lam so the constant (eigenvalue -1,
    singular-time) mode of the graph height vanishes.  This is a gauge choice,
    not a modification of the flow: it selects the spacetime center whose
    rescaled flow converges to the cylinder.
    """
    from scipy.interpolate import CubicSpline

    if profile.time_kind != "tau":
        raise ValueError("time gauge applies to rescaled profiles")
    rho = profile.params.rho
    out = profile
    for _ in range(max_iter):
        a = constant_mode_amplitude(out)
        if abs(a) < 1e-14 * rho:
            break
        lam = 1.0 - a / rho
        spline = CubicSpline(out.grid, out.v, bc_type="natural", extrapolate=True)
        v_new = lam * spline(out.grid / lam)
        out = RadialProfile(
            out.params,
            out.kind,
            out.grid,
            v_new,
            time=out.time - 2.0 * math.log(lam),
            time_kind="tau",
        )
    return out


@dataclass
class FlowTrace:
    """Per-step minimum-radius series plus sampled profiles with diagnostics."""

    params: CylinderParams
    time_kind: str
    step_times: list[float] = field(default_factory=list)
    step_min_v: list[float] = field(default_factory=list)
    step_argmin: list[float] = field(default_factory=list)
    samples: list[dict] = field(default_factory=list)
    stopped_by: str = "horizon"

    def record_step(self, profile: RadialProfile):
        mv, loc = profile.min_radius()
        self.step_times.append(profile.time)
        self.step_min_v.append(mv)
        self.step_argmin.append(loc)

    def record_sample(self, profile: RadialProfile, diagnostics: dict | None):
        entry = {"time": profile.time, "profile": profile}
        if diagnostics:
            entry.update(diagnostics)
        self.samples.append(entry)

    def sample_times(self) -> np.ndarray:
        return np.array([s["time"] for s in self.samples])


def run_flow(
    profile: RadialProfile,
    cfg: StepperConfig,
    horizon: float,
    sample_dt: float,
    diagnostics_fn=None,
    adaptive: bool = False,
    adapt_factor: float = 0.02,
    time_gauge: bool = False,
) -> FlowTrace:
    """March a profile to `horizon`, recording min-v each step and sampled
    profiles (with optional diagnostics) every `sample_dt`.

    With `adaptive` the step shrinks like adapt_factor * min(v)^2/(n-k) near a
    pinch (and is capped by cfg.dt).  With `time_gauge` (rescaled runs) the
    flow is re-based at its own singular time at every sample, keeping the
    unstable singular-time mode from swamping a long run.  Stops early on
    pinch, degenerate graph, or when min v crosses cfg.vmin_stop.
    """
    rescaled = profile.time_kind == "tau"
    stepper = _ProfileStepper(profile, cfg, rescaled=rescaled)
    trace = FlowTrace(profile.params, profile.time_kind)
    if time_gauge and not rescaled:
        raise ValueError("time gauge applies to rescaled runs only")
    t_end = profile.time + horizon
    next_sample = profile.time
    nk = profile.params.sphere_dim

    def sample(p):
        diag = diagnostics_fn(p) if diagnostics_fn else None
        trace.record_sample(p, diag)

    if time_gauge:
        profile = time_gauge_recenter(profile)
        t_end = profile.time + horizon
    trace.record_step(profile)
    sample(profile)
    next_sample += sample_dt

    steps = 0
    while profile.time < t_end - 1e-12 and steps < cfg.max_steps:
        dt = cfg.dt
        if adaptive:
            mv = float(np.min(profile.v))
            dt = min(dt, adapt_factor * mv * mv / nk)
        dt = min(dt, t_end - profile.time)
        try:
            profile = stepper.step(profile, dt)
        except PinchSignal:
            trace.stopped_by = "pinch"
            break
        except DegenerateProfileError:
            trace.stopped_by = "degenerate"
            break
        steps += 1
        trace.record_step(profile)
        if float(np.min(profile.v)) <= cfg.vmin_stop:
            sample(profile)
            trace.stopped_by = "vmin_stop"
            break
        if profile.time >= next_sample - 1e-9:
            if time_gauge:
                profile = time_gauge_recenter(profile)
            sample(profile)
            next_sample = profile.time + sample_dt
    else:
        if steps >= cfg.max_steps:
            trace.stopped_by = "max_steps"
    if trace.samples[-1]["time"] < profile.time - 1e-12 and trace.stopped_by == "horizon":
        sample(profile)
    return trace


@dataclass(frozen=True)
class PinchEstimate:
    time: float
    location: float
    fit_residual: float
    n_points: int


def detect_pinch(trace: FlowTrace) -> PinchEstimate | None:
    """Extrapolated singular time from the min-radius series.

    Assumes the sqrt(T - t) tangent-flow scaling, i.e. min(v)^2 is asymptotically
    linear in t; fits the last decade of decrease.  Returns None when the trace
    never approached a pinch.
    """
    t = np.asarray(trace.step_times)
    m = np.asarray(trace.step_min_v)
    if m.shape[0] < 8 or m[-1] >= 0.5 * m[0]:
        return None
    mask = m <= math.sqrt(10.0) * m[-1]
    if int(mask.sum()) < 4:
        mask = np.zeros_like(mask)
        mask[-4:] = True
    tt, mm = t[mask], m[mask] ** 2
    coef = np.polyfit(tt, mm, 1)
    slope, intercept = float(coef[0]), float(coef[1])
    if slope >= 0:
        return None
    T = -intercept / slope
    resid = float(np.max(np.abs(np.polyval(coef, tt) - mm))) / max(mm[0], 1e-300)
    return PinchEstimate(time=T, location=trace.step_argmin[-1], fit_residual=resid, n_points=int(mask.sum()))


# ---------------------------------------------------------------------------
# Self-similar formulation for long rescaled runs.
#
# In xi = y/sqrt(tau) the leading rescaled profile rho*sqrt(1 + |xi|^2/2) is a
# static solution and the sampled region automatically tracks the ball of
# radius sqrt(tau); outward transport keeps far-field boundary errors from
# reaching the Gaussian-weighted interior.  A fixed y-grid cannot do this: its
# truncated pinned far field feeds an O(1/tau) deformation into the interior,
# which swamps the O(1/tau^2) normal-form corrections on long horizons.
# ---------------------------------------------------------------------------


@dataclass
class SelfSimilarProfile:
    """Radius profile V(xi) in the similarity coordinate xi = |y|/sqrt(tau)."""

    params: CylinderParams
    xi: np.ndarray
    V: np.ndarray
    tau: float

    def __post_init__(self):
        self.xi = np.asarray(self.xi, dtype=float)
        self.V = np.asarray(self.V, dtype=float)
        if abs(self.xi[0]) > 1e-14:
            raise ValueError("xi-grid must start at 0")

    @property
    def h(self) -> float:
        return float(self.xi[1] - self.xi[0])

    def spline(self):
        from scipy.interpolate import CubicSpline

        return CubicSpline(self.xi, self.V, bc_type=((1, 0.0), "not-a-knot"))

    def to_radial(self, y_grid) -> RadialProfile:
        """Sampled radius over a physical y-grid at the profile's time."""
        y_grid = np.asarray(y_grid, dtype=float)
        vals = self.spline()(y_grid / math.sqrt(self.tau))
        return RadialProfile(self.params, "radial", y_grid, vals, time=self.tau, time_kind="tau")


def self_similar_family(params: CylinderParams, xi, tau: float) -> np.ndarray:
    """The normal-form family rho*sqrt(1 + xi^2/2 - k/tau)."""
    xi = np.asarray(xi, dtype=float)
    return params.rho * np.sqrt(1.0 + xi**2 / 2.0 - params.k / tau)


def nondegenerate_self_similar_initial(
    params: CylinderParams,
    tau0: float,
    xi: np.ndarray,
    log_coefficient: float | None = None,
) -> SelfSimilarProfile:
    """Nondegenerate datum V_inf + W(xi)/tau0 on the slow manifold.

    W solves the first-order balance
        -(xi/2) W' + (1/2 + (n-k)/V_inf^2) W = -[V_inf'' + (k-1)V_inf'/xi
                                                 + (xi/2) V_inf'],
    with W(0) = -rho*k/2 (reproducing the -2k constant of the normal form),
    plus a logarithmic inner component q xi^2 log(xi).  The log seasoning
    matches the known logarithmic corrections of neckpinch asymptotics; with
    the default q = -rho/4 the run settles onto the slow manifold at desk
    scale instead of carrying an O(1/tau) neutral-mode transient through the
    whole horizon.
    """
    from scipy.integrate import solve_ivp

    rho, k = params.rho, params.k
    nk = params.sphere_dim
    q = -rho / 4.0 if log_coefficient is None else float(log_coefficient)

    def v_inf(s):
        return rho * np.sqrt(1.0 + s * s / 2.0)

    def dv_inf(s):
        return rho * s / (2.0 * np.sqrt(1.0 + s * s / 2.0))

    def d2v_inf(s):
        base = 1.0 + s * s / 2.0
        return rho * (1.0 / (2.0 * np.sqrt(base)) - s * s / (4.0 * base**1.5))

    def source(s):
        return d2v_inf(s) + (k - 1) * dv_inf(s) / s + (s / 2.0) * dv_inf(s)

    def rhs(s, w):
        return (2.0 / s) * ((0.5 + nk / v_inf(s) ** 2) * w[0] + source(s))

    s0 = 1e-3
    w_start = -rho * k / 2.0 + q * s0 * s0 * math.log(s0)
    sol = solve_ivp(
        rhs,
        (s0, float(xi[-1])),
        [w_start],
        method="DOP853",
        rtol=1e-10,
        atol=1e-12,
        dense_output=True,
    )
    if not sol.success:
        raise RuntimeError(f"first-order correction ODE failed: {sol.message}")
    w = np.empty_like(xi)
    w[0] = -rho * k / 2.0
    w[1:] = sol.sol(xi[1:])[0]
    v0 = v_inf(xi) + w / tau0
    return SelfSimilarProfile(params, np.asarray(xi, dtype=float), v0, tau0)


class SelfSimilarStepper:
    """IMEX Crank-Nicolson step of the rescaled flow in similarity coordinates:

    dV/dtau = (1/tau) [ V''/(1 + V'^2/tau) + (k-1) V'/xi ]
              - (xi/2)(1 - 1/tau) V' + V/2 - (n-k)/V,

    with even symmetry at xi = 0 and the far value pinned to the normal-form
    family (boundary errors stay in an outward-transported layer).
    """

    def __init__(self, params: CylinderParams, xi: np.ndarray):
        self.params = params
        self.xi = xi
        self.n = xi.shape[0]
        self.h = float(xi[1] - xi[0])

    def _rows(self, V, tau):
        k = self.params.k
        xi, h, n = self.xi, self.h, self.n
        dV = np.gradient(V, xi, edge_order=2)
        dV[0] = 0.0
        a = (1.0 / tau) / (1.0 + dV * dV / tau)
        drift = -(xi / 2.0) * (1.0 - 1.0 / tau)
        if k > 1:
            drift = drift.copy()
            drift[1:] += (k - 1) / (xi[1:] * tau)
        sub, diag, sup = _operator_rows(a, drift, 0.5, h, n)
        a_eff = a[0] * (1.0 + (k - 1))
        sub[0] = 0.0
        diag[0] = -2.0 * a_eff / h**2 + 0.5
        sup[0] = 2.0 * a_eff / h**2
        return sub, diag, sup

    def step(self, prof: SelfSimilarProfile, dt: float) -> SelfSimilarProfile:
        nk = self.params.sphere_dim
        tau_mid = prof.tau + dt / 2.0
        tau_new = prof.tau + dt
        V = prof.V
        sub, diag, sup = self._rows(V, tau_mid)
        beta = dt / 2.0
        pin = float(self_similar_family(self.params, self.xi[-1], tau_new))

        def solve_with(r_mid):
            rhs = V + beta * _apply_tridiag(sub, diag, sup, V) + dt * r_mid
            s_sub, s_diag, s_sup = sub.copy(), diag.copy(), sup.copy()
            s_sub[-1] = 0.0
            s_sup[-1] = 0.0
            s_diag[-1] = 0.0
            rhs[-1] = pin
            return _cn_solve(s_sub, s_diag, s_sup, rhs, beta)

        r_old = -nk / V
        v_star = solve_with(r_old)
        v_next = solve_with(0.5 * (r_old - nk / np.maximum(v_star, 1e-300)))
        return SelfSimilarProfile(self.params, self.xi, v_next, tau_new)


def self_similar_gauge(prof: SelfSimilarProfile, max_iter: int = 4) -> SelfSimilarProfile:
    """Kill the singular-time (constant) mode by the exact base-point change.

    In physical variables the symmetry is v(y) -> lam v(y/lam) with
    tau -> tau - 2 log(lam); in similarity coordinates the argument also
    carries the sqrt(tau'/tau) relabeling.  The constant-mode amplitude is
    measured against the Gaussian weight in physical coordinates.
    """
    params = prof.params
    rho = params.rho
    k = params.k
    y = np.linspace(0.0, 16.0, 2001)
    w = np.exp(-(y**2) / 4.0) * y ** (k - 1)
    out = prof
    for _ in range(max_iter):
        spline = out.spline()
        u = spline(y / math.sqrt(out.tau)) - rho
        a = float(np.sum(u * w) / np.sum(w))
        if abs(a) < 1e-14 * rho:
            break
        lam = 1.0 - a / rho
        tau_new = out.tau - 2.0 * math.log(lam)
        scale = math.sqrt(tau_new / out.tau) / lam
        v_new = lam * spline(np.minimum(out.xi * scale, out.xi[-1]))
        out = SelfSimilarProfile(params, out.xi, v_new, tau_new)
    return out


def run_self_similar(
    params: CylinderParams,
    tau0: float,
    horizon: float,
    dt: float = 0.01,
    n_points: int = 480,
    xi_max: float = 3.2,
    sample_dt: float = 0.5,
    gauge: bool = True,
    initial: SelfSimilarProfile | None = None,
) -> list[SelfSimilarProfile]:
    """Long rescaled run from nondegenerate data in similarity coordinates;
    returns sampled profiles (re-based at each sample when `gauge` is set)."""
    if initial is None:
        xi = np.linspace(0.0, xi_max, n_points)
        prof = nondegenerate_self_similar_initial(params, tau0, xi)
    else:
        prof = initial
        xi = prof.xi
    stepper = SelfSimilarStepper(params, xi)
    samples = [prof]
    t_end = prof.tau + horizon
    next_sample = prof.tau + sample_dt
    while prof.tau < t_end - 1e-9:
        prof = stepper.step(prof, min(dt, t_end - prof.tau))
        if prof.tau >= next_sample - 1e-9:
            if gauge:
                prof = self_similar_gauge(prof)
            samples.append(prof)
            next_sample = prof.tau + sample_dt
    return samples


# ---------------------------------------------------------------------------
# Singular-time cusp profile and the post-singular dual-graph flow.
# ---------------------------------------------------------------------------


def cusp_profile(y, params: CylinderParams):
    """Leading radius of the t = 0 slice: rho |y| / (2 sqrt(-log |y|)).

    Monotone increasing in |y| on (0, 1/e); requires 0 < |y| < 1.
    """
    y = np.asarray(y, dtype=float)
    mag = np.abs(y)
    if np.any(mag >= 1.0) or np.any(mag <= 0.0):
        raise ValueError("cusp profile needs 0 < |y| < 1")
    out = params.rho * mag / (2.0 * np.sqrt(-np.log(mag)))
    return out if out.ndim else float(out)


def invert_cusp_profile(s, params: CylinderParams, y_max: float = math.exp(-1.0)):
    """Monotone bisection inverse of the cusp profile on (0, y_max]."""
    s = np.asarray(s, dtype=float)
    s_max = cusp_profile(y_max, params)
    if np.any(s < 0.0) or np.any(s > s_max * (1 + 1e-12)):
        raise ValueError("height outside the invertible cusp range")
    lo = np.full(s.shape, 1e-300)
    hi = np.full(s.shape, y_max)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        vals = np.where(mid > 0, cusp_profile(np.maximum(mid, 1e-300), params), 0.0)
        below = vals < s
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    out = 0.5 * (lo + hi)
    out = np.where(s == 0.0, 0.0, out)
    return out if out.ndim else float(out)


@dataclass
class WGraphProfile:
    """Post-singular slice as a graph y = w(s) over the x-hyperplane, s = |x|."""

    params: CylinderParams
    grid: np.ndarray  # s >= 0, uniform, including 0
    w: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.w = np.asarray(self.w, dtype=float)
        if abs(self.grid[0]) > 1e-14:
            raise ValueError("w-graph grid must start at s = 0")
        if self.w[0] < 0:
            raise ValueError("need w(0) >= 0")

    @property
    def h(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def is_strictly_monotone(self) -> bool:
        return bool(np.all(np.diff(self.w) > 0.0))


def post_singular_step(wp: WGraphProfile, dt: float) -> tuple[WGraphProfile, bool]:
    """One implicit step of the radial graph flow
    d_t w = w''/(1+w'^2) + (n-k) w'/s, with even symmetry at s = 0 and the far
    value held fixed.  Returns the stepped profile and a monotonicity flag
    (False signals a violation of the expected sign condition; the run may
    continue).

    Backward Euler rather than trapezoidal: the restart datum has an
    unresolved vertical tip, and an undamped scheme rings at the axis while
    the cusp regularizes.
    """
    params = wp.params
    m = params.sphere_dim  # coefficient (n-k) of the radial first-order term
    grid, w = wp.grid, wp.w
    n = grid.shape[0]
    h = wp.h
    dw = np.gradient(w, grid, edge_order=2)
    dw[0] = 0.0
    a = 1.0 / (1.0 + dw * dw)
    drift = np.zeros_like(grid)
    drift[1:] = m / grid[1:]
    sub, diag, sup = _operator_rows(a, drift, 0.0, h, n)
    a_eff = a[0] + m
    sub[0] = 0.0
    diag[0] = -2.0 * a_eff / h**2
    sup[0] = 2.0 * a_eff / h**2
    rhs = w.copy()
    sub[-1] = 0.0
    sup[-1] = 0.0
    diag[-1] = 0.0
    rhs[-1] = w[-1]
    w_new = _cn_solve(sub, diag, sup, rhs, dt)  # (I - dt A) w_new = w_old
    out = WGraphProfile(params, grid, w_new, wp.time + dt)
    return out, out.is_strictly_monotone()


def initial_post_singular(
    params: CylinderParams,
    s_max: float,
    n_points: int = 300,
) -> WGraphProfile:
    """Restart datum: numerical inverse of the cusp profile on [0, s_max]."""
    grid = np.linspace(0.0, s_max, n_points)
    w = invert_cusp_profile(grid, params)
    return WGraphProfile(params, grid, w, time=0.0)


def run_post_singular(
    wp: WGraphProfile,
    dt: float,
    horizon: float,
) -> tuple[WGraphProfile, list[bool], int]:
    """March the post-singular graph, tracking the monotonicity flag per step.

    Returns the final profile, the per-step flags, and the violation count.
    """
    flags = []
    steps = int(round(horizon / dt))
    for _ in range(steps):
        wp, ok = post_singular_step(wp, dt)
        flags.append(ok)
    violations = sum(1 for ok in flags if not ok)
    return wp, flags, violations


# ---------------------------------------------------------------------------
# Bowl translator ODE.
# ---------------------------------------------------------------------------


@dataclass
class BowlProfile:
    """Convex rotationally symmetric translator graph U(s) in R^{m+1}."""

    m: int
    s: np.ndarray
    U: np.ndarray
    dU: np.ndarray

    def d2U(self) -> np.ndarray:
        """U'' recovered from the translator ODE."""
        out = np.empty_like(self.s)
        out[0] = 1.0 / self.m
        ss = self.s[1:]
        out[1:] = (1.0 + self.dU[1:] ** 2) * (1.0 - (self.m - 1) * self.dU[1:] / ss)
        return out

    def asymptotic_gap(self) -> np.ndarray:
        """U(s) - (s^2/(2(m-1)) - log s), which converges as s grows."""
        if self.m < 2:
            raise ValueError("asymptotic form needs m >= 2")
        return self.U - (self.s**2 / (2.0 * (self.m - 1)) - np.log(self.s))


def bowl_translator_solve(m: int, s_max: float, n_points: int = 800) -> BowlProfile:
    """Rotationally symmetric translator profile: U''/(1+U'^2) + (m-1)U'/s = 1.

    Integrated from a quartic series start at s ~ 0 (U = s^2/(2m) + s^4/(m^3(4m+8)))
    with a high-order adaptive integrator; U is convex with
    U(s) = s^2/(2(m-1)) - log s + O(1/s) as s grows.
    """
    if m < 2:
        raise ValueError("need m >= 2")
    from scipy.integrate import solve_ivp

    a4 = 1.0 / (m**3 * (4.0 * m + 8.0))
    s0 = 1e-4

    def rhs(s, state):
        U, V = state
        return [V, (1.0 + V * V) * (1.0 - (m - 1) * V / s)]

    y0 = [s0**2 / (2.0 * m) + a4 * s0**4, s0 / m + 4.0 * a4 * s0**3]
    grid = np.linspace(s0, s_max, n_points)
    sol = solve_ivp(
        rhs,
        (s0, s_max),
        y0,
        method="DOP853",
        t_eval=grid,
        rtol=1e-11,
        atol=1e-12,
    )
    if not sol.success:
        raise RuntimeError(f"translator ODE integration failed: {sol.message}")
    return BowlProfile(m=m, s=sol.t, U=sol.y[0], dU=sol.y[1])
