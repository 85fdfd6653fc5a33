"""Measurement layer: Gaussian area/density/entropy, weighted L^2 distance to
the cylinder, decay order (full and restricted), non-concentration fits,
linear-mode domination, spectrum-locking verdicts, noncollapsing via pairwise
ball touching, and surgery Euler-characteristic bookkeeping.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .cylinder import CylinderParams, GraphPatch, chi_eval
from .flow import RadialProfile, WGraphProfile
from .spectral import SpineBasis, _sphere_area, spectrum_values

__all__ = [
    "TruncationWarning",
    "gaussian_area",
    "gaussian_density",
    "entropy_lower_bound",
    "l2_distance",
    "DecaySeries",
    "decay_order",
    "NonconcentrationReport",
    "nonconcentration_check",
    "h1_domination",
    "mode_fraction",
    "SweepVerdict",
    "monotonicity_sweep",
    "mean_curvature_profile",
    "Meridian",
    "meridian_from_profile",
    "meridian_sphere",
    "meridian_cylinder",
    "NoncollapseReport",
    "noncollapse_alpha",
    "surgery_euler_delta",
    "arrival_time_sphere",
    "dual_graph_sign_values",
]


class TruncationWarning(UserWarning):
    """Weighted integral carries non-negligible mass beyond the sampled domain."""


def arrival_time_sphere(r0: float, x_norm: float, n: int) -> float:
    """Arrival time of a shrinking round sphere: (r0^2 - |x|^2) / (2n)."""
    return (r0 * r0 - x_norm * x_norm) / (2.0 * n)


# ---------------------------------------------------------------------------
# Weighted integrals over a radial profile.
# ---------------------------------------------------------------------------


def _surface_measure(profile: RadialProfile) -> np.ndarray:
    """Trapezoid weights of the surface measure (no Gaussian factor).

    The sphere factor integrates to omega_{n-k} v^{n-k}; the radial reduction
    carries the spine-sphere factor omega_{k-1} r^{k-1} as well.
    """
    params = profile.params
    v = profile.v
    dv = profile.dv()
    x = profile.grid
    density = _sphere_area(params.sphere_dim) * v**params.sphere_dim * np.hypot(1.0, dv)
    if profile.kind == "radial":
        density = density * _sphere_area(params.k - 1) * x ** (params.k - 1)
    w = np.empty_like(x)
    h = profile.h
    w[:] = h
    w[0] = w[-1] = h / 2.0
    return density * w


def _check_tail(profile: RadialProfile, integrand: np.ndarray, total: float):
    if total <= 0:
        return
    edge = abs(float(profile.grid[-1]))
    density_end = float(integrand[-1]) * 2.0 / profile.h
    tail = density_end * 2.0 / max(edge, 1.0)
    if profile.kind == "line":
        density_start = float(integrand[0]) * 2.0 / profile.h
        tail += density_start * 2.0 / max(edge, 1.0)
    if tail > 1e-8 * total:
        warnings.warn(
            f"weighted tail beyond the sampled domain ~{tail:.2e} "
            f"exceeds 1e-8 of the total {total:.2e}",
            TruncationWarning,
            stacklevel=3,
        )


def gaussian_area(
    profile,
    center: float | None = None,
    scale: float = 1.0,
    check_tail: bool = True,
) -> float:
    """Gaussian area F = int (4 pi)^{-n/2} exp(-|X|^2/4) of the (re-centered,
    rescaled) surface: with `center` (a spine shift) and `scale` this is
    F[scale^{-1}(M - center)].

    `profile` is a RadialProfile, or an analytic descriptor tuple:
    ("hyperplane", n), ("sphere", radius, n) or ("cylinder", params).
    """
    if isinstance(profile, tuple):
        return _gaussian_area_analytic(profile)
    params = profile.params
    if center not in (None, 0.0) and profile.kind != "line":
        raise ValueError("spine re-centering needs a 'line' profile")
    y0 = 0.0 if center is None else float(center)
    lam = float(scale)
    if lam <= 0:
        raise ValueError("scale must be positive")
    v = profile.v / lam
    x = (profile.grid - y0) / lam
    measure = _surface_measure(profile) / lam**params.n
    integrand = measure * np.exp(-(v**2 + x**2) / 4.0)
    total = float(np.sum(integrand)) * (4.0 * math.pi) ** (-params.n / 2.0)
    if check_tail:
        _check_tail(profile, integrand * (4.0 * math.pi) ** (-params.n / 2.0), total)
    return total


def _gaussian_area_analytic(descriptor: tuple) -> float:
    kind = descriptor[0]
    if kind == "hyperplane":
        return 1.0
    if kind == "sphere":
        _, radius, n = descriptor
        return (
            (4.0 * math.pi) ** (-n / 2.0)
            * _sphere_area(n)
            * radius**n
            * math.exp(-(radius**2) / 4.0)
        )
    if kind == "cylinder":
        _, params = descriptor
        m = params.sphere_dim
        return (
            (4.0 * math.pi) ** (-m / 2.0)
            * _sphere_area(m)
            * params.rho**m
            * math.exp(-(params.rho**2) / 4.0)
        )
    raise ValueError(f"unknown analytic surface {kind!r}")


def gaussian_density(profile: RadialProfile, center: float | None, tau: float) -> float:
    """Gaussian density ratio at backward time tau: F[tau^{-1/2}(M - center)]."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    return gaussian_area(profile, center=center, scale=math.sqrt(tau))


def entropy_lower_bound(
    profile: RadialProfile,
    n_centers: int = 11,
    n_scales: int = 11,
    refine_rounds: int = 2,
) -> float:
    """Lower bound for the entropy: max Gaussian area over a coarse grid of
    spine centers and scales, locally refined around the best cell.

    The true entropy is a supremum; this reports the best value found and is
    a certified lower bound only.
    """
    if profile.kind == "line":
        c_lo, c_hi = float(profile.grid[0]) / 2, float(profile.grid[-1]) / 2
    else:
        c_lo = c_hi = 0.0
    s_lo, s_hi = math.log(0.25), math.log(4.0)
    best = -np.inf
    best_c, best_s = 0.0, 0.0
    for _ in range(refine_rounds + 1):
        centers = np.linspace(c_lo, c_hi, n_centers) if c_hi > c_lo else np.array([0.0])
        scales = np.exp(np.linspace(s_lo, s_hi, n_scales))
        for c in centers:
            for lam in scales:
                val = gaussian_area(profile, center=c, scale=lam, check_tail=False)
                if val > best:
                    best, best_c, best_s = val, c, math.log(lam)
        dc = (c_hi - c_lo) / max(n_centers - 1, 1)
        ds = (s_hi - s_lo) / max(n_scales - 1, 1)
        c_lo, c_hi = best_c - dc, best_c + dc
        s_lo, s_hi = best_s - ds, best_s + ds
    return float(best)


def l2_distance(
    profile: RadialProfile,
    box_radius: float | None = None,
    check_tail: bool = False,
) -> float:
    """Weighted L^2 distance to the cylinder:
    d^2 = int chi(|x| - rho)^2 exp(-|X|^2/4) over the surface.

    With `box_radius` R, the integral is restricted to Q_R (both blocks within
    radius R).  Zero exactly when the profile sits on the cylinder inside the
    weight's support.
    """
    params = profile.params
    v = profile.v
    x = profile.grid
    measure = _surface_measure(profile)
    integrand = measure * chi_eval(v - params.rho) ** 2 * np.exp(-(v**2 + x**2) / 4.0)
    if box_radius is not None:
        mask = (np.abs(x) <= box_radius) & (v <= box_radius)
        integrand = integrand * mask
    total = float(np.sum(integrand))
    if check_tail and box_radius is None:
        _check_tail(profile, integrand, total)
    return math.sqrt(max(total, 0.0))


# ---------------------------------------------------------------------------
# Decay order series.
# ---------------------------------------------------------------------------


@dataclass
class DecaySeries:
    """Sampled (tau, d) series, optionally with a Q_R-restricted companion."""

    taus: np.ndarray
    d: np.ndarray
    box_radius: float | None = None
    d_restricted: np.ndarray | None = None

    def __post_init__(self):
        self.taus = np.asarray(self.taus, dtype=float)
        self.d = np.asarray(self.d, dtype=float)
        if self.d_restricted is not None:
            self.d_restricted = np.asarray(self.d_restricted, dtype=float)
        if np.any(np.diff(self.taus) <= 0):
            raise ValueError("time stamps must be strictly increasing")

    def _values(self, restricted: bool) -> np.ndarray:
        if restricted:
            if self.d_restricted is None:
                raise ValueError("series has no restricted companion")
            return self.d_restricted
        return self.d

    def value_at(self, tau: float, restricted: bool = False) -> float:
        """d at time tau; log-linear interpolation between adjacent samples
        (sample clocks may carry tiny re-basing offsets)."""
        vals = self._values(restricted)
        if tau < self.taus[0] - 1e-9 or tau > self.taus[-1] + 1e-9:
            raise KeyError(f"tau={tau} outside the sampled range")
        idx = int(np.argmin(np.abs(self.taus - tau)))
        if abs(self.taus[idx] - tau) <= 1e-9:
            return float(vals[idx])
        if np.any(vals <= 0):
            raise KeyError(f"tau={tau} not sampled and series not interpolable")
        return float(np.exp(np.interp(tau, self.taus, np.log(vals))))

    def decay_orders(self, restricted: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """All N(tau) = log(d(tau)/d(tau+1)) computable from the sampling."""
        vals = self._values(restricted)
        taus_out, n_out = [], []
        for i, tau in enumerate(self.taus):
            if tau + 1.0 > self.taus[-1] + 1e-9 or vals[i] <= 0:
                continue
            try:
                d_next = self.value_at(tau + 1.0, restricted)
            except KeyError:
                continue
            if d_next > 0:
                taus_out.append(tau)
                n_out.append(math.log(vals[i] / d_next))
        return np.array(taus_out), np.array(n_out)


def decay_order(series: DecaySeries, tau: float, restricted: bool = False) -> float:
    """Decay order N(tau) = log(d(tau)/d(tau+1)) from a sampled series."""
    d0 = series.value_at(tau, restricted)
    d1 = series.value_at(tau + 1.0, restricted)
    if d0 <= 0.0 or d1 <= 0.0:
        raise ZeroDivisionError("decay order undefined: vanishing distance")
    return math.log(d0 / d1)


def decay_series_from_profiles(
    profiles: list[RadialProfile],
    box_radius: float | None = None,
) -> DecaySeries:
    taus = np.array([p.time for p in profiles])
    d = np.array([l2_distance(p) for p in profiles])
    d_R = None
    if box_radius is not None:
        d_R = np.array([l2_distance(p, box_radius=box_radius) for p in profiles])
    return DecaySeries(taus, d, box_radius, d_R)


# ---------------------------------------------------------------------------
# Non-concentration near infinity.
# ---------------------------------------------------------------------------


@dataclass
class NonconcentrationReport:
    taus: np.ndarray
    lhs: np.ndarray
    ratios: np.ndarray  # lhs / d(0)^2
    fitted_c: float
    fitted_k: float
    bound_holds: bool


def nonconcentration_check(profiles: list[RadialProfile]) -> NonconcentrationReport:
    """Weighted integral with the (1 + tau |X|^2) factor along a rescaled run,
    and least-squares constants (C, K) with lhs(tau) <= C e^{K tau} d(0)^2
    holding at every sample.  tau is elapsed time from the first profile.
    """
    t0 = profiles[0].time
    d0 = l2_distance(profiles[0])
    if d0 <= 0:
        raise ZeroDivisionError("non-concentration ratio undefined: d(0) = 0")
    taus, lhs = [], []
    for p in profiles:
        tau = p.time - t0
        measure = _surface_measure(p)
        x2 = p.v**2 + p.grid**2
        vals = (
            measure
            * chi_eval(p.v - p.params.rho) ** 2
            * (1.0 + tau * x2)
            * np.exp(-x2 / 4.0)
        )
        taus.append(tau)
        lhs.append(float(np.sum(vals)))
    taus = np.array(taus)
    lhs = np.array(lhs)
    ratios = lhs / d0**2
    pos = ratios > 0
    if int(pos.sum()) >= 2:
        slope, intercept = np.polyfit(taus[pos], np.log(ratios[pos]), 1)
        k_fit = float(max(slope, 0.0))
    else:
        k_fit = 0.0
    c_fit = float(np.max(ratios * np.exp(-k_fit * taus))) if len(ratios) else 0.0
    c_fit = max(c_fit, 1e-300)
    holds = bool(np.all(ratios <= c_fit * np.exp(k_fit * taus) * (1 + 1e-12)))
    return NonconcentrationReport(taus, lhs, ratios, c_fit, k_fit, holds)


# ---------------------------------------------------------------------------
# Linear-mode domination and mode fractions.
# ---------------------------------------------------------------------------


def _patch_inner(patch: GraphPatch, f: np.ndarray, g: np.ndarray) -> float:
    x = patch.grid
    w = np.exp(-(x**2) / 4.0)
    if patch.kind == "radial":
        w = w * x ** (patch.params.k - 1)
    h = patch.h
    tw = np.full_like(x, h)
    tw[0] = tw[-1] = h / 2.0
    return float(np.sum(f * g * w * tw))


def h1_domination(patch: GraphPatch, yhat: float = 1.0) -> float:
    """inf over c > 0 and constants c' of || u/c - c' - y.yhat ||_{L^2(weight)}.

    Computed in closed form from the weighted inner products of u against 1 and
    the linear mode.  Scale-invariant in u; the c > 0 constraint makes the
    infimum ||y.yhat|| when u has nonpositive linear component.
    """
    u = patch.u
    x = patch.grid
    norm_u2 = _patch_inner(patch, u, u)
    if norm_u2 <= 0:
        raise ZeroDivisionError("h1 domination undefined for u = 0")
    e = float(yhat) * x
    one = np.ones_like(x)
    c1 = _patch_inner(patch, one, one)
    mu_u = _patch_inner(patch, u, one) / c1
    mu_e = _patch_inner(patch, e, one) / c1
    ut = u - mu_u
    et = e - mu_e
    ut2 = _patch_inner(patch, ut, ut)
    e2 = _patch_inner(patch, et, et)
    p = _patch_inner(patch, ut, et)
    if p <= 0 or ut2 <= 0:
        return math.sqrt(e2)
    return math.sqrt(max(e2 - p * p / ut2, 0.0))


def mode_fraction(
    patch: GraphPatch,
    gamma: float,
    relation: str = "=",
    basis: SpineBasis | None = None,
) -> float:
    """|| Pi_{~gamma} u || / || u || through the weighted eigenmode expansion."""
    basis = basis or SpineBasis(patch.params, kind=patch.kind)
    samples = patch.interpolator()(basis.quad.nodes)
    expansion = basis.expand(samples)
    total2 = basis.quad.norm2(samples)
    if total2 <= 0:
        raise ZeroDivisionError("mode fraction undefined for u = 0")
    part2 = expansion.filtered(gamma, relation).norm2()
    return math.sqrt(max(part2, 0.0) / total2)


# ---------------------------------------------------------------------------
# Discrete almost-monotonicity verdicts.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepVerdict:
    tau: float
    kind: str  # "drop" | "locked" | "violation"
    gamma: float | None = None
    delta: float | None = None


def monotonicity_sweep(
    series: DecaySeries,
    params: CylinderParams,
    eps: float = 0.05,
    closeness: float = 0.1,
    min_drop: float = 1e-3,
    spectrum_cutoff: float = 3.0,
) -> tuple[list[SweepVerdict], dict]:
    """Per-unit-step verdicts for the decay order of a rescaled run.

    Each unit step is either a strict drop (with the floor N >= -1 - eps) or
    spectrum-locked: sup over the window of |N - gamma| <= eps for some
    eigenvalue gamma of -L.  The closeness bound on d truncates the window
    where the run leaves the near-cylinder regime.
    """
    sigma = spectrum_values(params, spectrum_cutoff)
    inside = series.d <= closeness
    if not np.all(inside):
        cut = int(np.argmax(~inside))
        end_tau = series.taus[max(cut - 1, 0)]
        truncated = True
    else:
        end_tau = series.taus[-1]
        truncated = False
    n_taus, n_vals = series.decay_orders()
    usable = n_taus[n_taus + 1.0 <= end_tau + 1e-9]
    verdicts: list[SweepVerdict] = []
    t0 = series.taus[0]
    step_starts = np.arange(t0, end_tau - 1.0 + 1e-9, 1.0)
    for ts in step_starts:
        window = (n_taus >= ts - 1e-9) & (n_taus <= ts + 1.0 + 1e-9)
        if not np.any(window) or (ts + 1.0) > (usable[-1] + 1e-9 if len(usable) else -np.inf):
            continue
        w_vals = n_vals[window]
        n_start = w_vals[0]
        n_end = w_vals[-1]
        locked_gamma = None
        for gamma in sigma:
            if np.max(np.abs(w_vals - gamma)) <= eps:
                locked_gamma = gamma
                break
        if locked_gamma is not None:
            verdicts.append(SweepVerdict(float(ts), "locked", gamma=locked_gamma))
        elif n_end <= n_start - min_drop and n_end >= -1.0 - eps:
            verdicts.append(SweepVerdict(float(ts), "drop", delta=float(n_start - n_end)))
        else:
            verdicts.append(SweepVerdict(float(ts), "violation"))
    summary = {
        "steps": len(verdicts),
        "drops": sum(1 for v in verdicts if v.kind == "drop"),
        "locked": sum(1 for v in verdicts if v.kind == "locked"),
        "violations": sum(1 for v in verdicts if v.kind == "violation"),
        "window_truncated": truncated,
        "min_decay_order": float(np.min(n_vals)) if len(n_vals) else math.nan,
    }
    return verdicts, summary


# ---------------------------------------------------------------------------
# Mean curvature and noncollapsing.
# ---------------------------------------------------------------------------


def mean_curvature_profile(profile: RadialProfile) -> np.ndarray:
    """Scalar mean curvature of the tube {|x| = v}, positive when the surface
    moves inward (shrinking cylinder: H = (n-k)/rho > 0)."""
    params = profile.params
    v = profile.v
    x = profile.grid
    dv = profile.dv()
    d2v = np.gradient(dv, x, edge_order=2)
    slope2 = 1.0 + dv * dv
    h_val = -d2v / slope2**1.5 + params.sphere_dim / (v * np.sqrt(slope2))
    if profile.kind == "radial" and params.k > 1:
        term = np.zeros_like(x)
        term[1:] = (params.k - 1) * dv[1:] / (x[1:] * np.sqrt(slope2[1:]))
        term[0] = (params.k - 1) * d2v[0]
        h_val = h_val - term
    return h_val


@dataclass
class Meridian:
    """Discrete meridian (p = spine coordinate, q = sphere radius) of a
    hypersurface symmetric under the sphere-block (and, for the radial kind,
    spine-block) rotations; oriented so the rotated tangent (t_q, -t_p) is the
    outward normal."""

    params: CylinderParams
    kind: str  # "line" (spine coordinate may be negative) or "radial"
    p: np.ndarray
    q: np.ndarray

    def geometry(self):
        p, q = self.p, self.q
        dp = np.gradient(p)
        dq = np.gradient(q)
        d2p = np.gradient(dp)
        d2q = np.gradient(dq)
        speed = np.hypot(dp, dq)
        kappa = (dp * d2q - dq * d2p) / speed**3
        n_p = dq / speed
        n_q = -dp / speed
        return kappa, n_p, n_q


def meridian_from_profile(profile: RadialProfile) -> Meridian:
    """Tube profile as a meridian; traversal reversed so the normal points
    away from the spine."""
    return Meridian(
        profile.params,
        profile.kind,
        p=profile.grid[::-1].copy(),
        q=profile.v[::-1].copy(),
    )


def meridian_sphere(radius: float, n: int, n_points: int = 400) -> Meridian:
    phi = np.linspace(0.0, math.pi, n_points)
    params_like = CylinderParams(n=n, k=1, rho=math.sqrt(2.0 * (n - 1)))
    return Meridian(params_like, "line", p=radius * np.cos(phi), q=radius * np.sin(phi))


def meridian_cylinder(params: CylinderParams, half_width: float, n_points: int = 400) -> Meridian:
    if params.k == 1:
        grid = np.linspace(-half_width, half_width, n_points)
    else:
        grid = np.linspace(0.0, half_width, n_points)
    prof = RadialProfile(params, "line" if params.k == 1 else "radial", grid, np.full_like(grid, params.rho))
    return meridian_from_profile(prof)


@dataclass
class NoncollapseReport:
    h_values: np.ndarray
    z_sup: np.ndarray
    z_inf: np.ndarray
    alpha: float
    binding_index: int


def noncollapse_alpha(meridian: Meridian, skip_ends: int = 2) -> NoncollapseReport:
    """Andrews-constant estimate from the pairwise quantity
    Z(x, y) = 2 <x - y, n(x)> / |x - y|^2.

    For rotationally invariant pairs Z is a Moebius function of each angle
    cosine, so the sup/inf over the full hypersurface is attained at the
    corner angles; this reduces the scan to O(N^2) meridian pairs.  Requires
    strict mean convexity; alpha = inf H / max(Z^*, -Z_*).
    """
    params = meridian.params
    kappa, n_p, n_q = meridian.geometry()
    p, q = meridian.p, meridian.q
    m = params.sphere_dim
    with np.errstate(divide="ignore", invalid="ignore"):
        h_val = kappa + m * np.where(q > 1e-12, n_q / q, kappa)
        if meridian.kind == "radial" and params.k > 1:
            h_val = h_val + (params.k - 1) * np.where(
                np.abs(p) > 1e-12, n_p / p, kappa
            )
    n_pts = p.shape[0]
    idx = np.arange(n_pts)
    core = idx[(idx >= skip_ends) & (idx < n_pts - skip_ends) & (q > 1e-9)]
    if np.any(h_val[core] <= 0):
        raise ValueError("not strictly mean convex: H <= 0 at some point")
    cos_omega = (-1.0, 1.0)
    cos_sigma = (-1.0, 1.0) if (meridian.kind == "radial" and params.k > 1) else (1.0,)
    z_sup = np.full(n_pts, -np.inf)
    z_inf = np.full(n_pts, np.inf)
    for a in core:
        best_hi, best_lo = -np.inf, np.inf
        for cw in cos_omega:
            for cs in cos_sigma:
                if meridian.kind == "radial" and params.k > 1:
                    spine2 = p[a] ** 2 + p**2 - 2.0 * p[a] * p * cs
                    spine_dot = n_p[a] * (p[a] - p * cs)
                else:
                    spine2 = (p[a] - p) ** 2
                    spine_dot = n_p[a] * (p[a] - p)
                dist2 = q[a] ** 2 + q**2 - 2.0 * q[a] * q * cw + spine2
                dot = n_q[a] * (q[a] - q * cw) + spine_dot
                valid = dist2 > 1e-18
                z = np.where(valid, 2.0 * dot / np.maximum(dist2, 1e-300), np.nan)
                z = z[valid]
                if z.size:
                    best_hi = max(best_hi, float(np.max(z)))
                    best_lo = min(best_lo, float(np.min(z)))
        z_sup[a] = best_hi
        z_inf[a] = best_lo
    denom = np.maximum(z_sup[core], -z_inf[core])
    denom = np.maximum(denom, 1e-300)
    ratios = h_val[core] / denom
    pos = int(np.argmin(ratios))
    return NoncollapseReport(
        h_values=h_val,
        z_sup=z_sup,
        z_inf=z_inf,
        alpha=float(ratios[pos]),
        binding_index=int(core[pos]),
    )


def surgery_euler_delta(n: int, k: int) -> int:
    """Euler-characteristic change of the standard surgery: remove
    S^{n-k} x B^k, glue B^{n-k+1} x S^{k-1}."""
    if not (1 <= k <= n - 1):
        raise ValueError(f"need 1 <= k <= n-1, got (n, k) = ({n}, {k})")
    chi_glued = 1 + (-1) ** (k - 1)  # chi(B^{n-k+1}) * chi(S^{k-1})
    chi_removed = 1 + (-1) ** (n - k)  # chi(S^{n-k}) * chi(B^k)
    return chi_glued - chi_removed


def dual_graph_sign_values(wp: WGraphProfile) -> np.ndarray:
    """nu . (0, yhat) along a post-singular graph y = w(s): equals
    -sign(w') / sqrt(1 + w'^2), so strict monotonicity of w is exactly the
    strict sign condition (the s = 0 tip contributes -1)."""
    dw = np.gradient(wp.w, wp.grid, edge_order=2)
    dw[0] = 0.0
    vals = np.empty_like(dw)
    vals[0] = -1.0
    vals[1:] = -np.sign(dw[1:]) / np.hypot(1.0, dw[1:])
    zero = np.abs(dw[1:]) < 1e-300
    if np.any(zero):
        vals[1:][zero] = 0.0
    return vals
