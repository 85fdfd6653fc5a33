"""Round-cylinder geometry: parameters, regularized distance, graphs over the cylinder.

The model hypersurface is S^{n-k}(rho) x R^k inside R^{n+1} = R^{n-k+1} x R^k,
with rho = sqrt(2(n-k)) so that the homothetically shrinking family is a mean
curvature flow.  Everything here is restricted to the two symmetric reductions
used by the solvers: functions of a single spine coordinate y (kind "line",
the k = 1 picture) or of the spine radius r = |y| (kind "radial").
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CylinderParams",
    "make_cylinder",
    "chi_eval",
    "chi_prime",
    "chi_second",
    "odist",
    "GraphPatch",
    "GraphGeometry",
    "graph_geometry",
    "TransformedGraph",
    "transform_graph",
    "GRAPH_REGIME_LIMIT",
]

# Smallness threshold for the graph-transformation regime; only the existence
# of a small dimensional constant matters, and 0.1 keeps every formula valid.
GRAPH_REGIME_LIMIT = 0.1


@dataclass(frozen=True)
class CylinderParams:
    """Dimensions (n, k) of the model cylinder and its radius rho = sqrt(2(n-k))."""

    n: int
    k: int
    rho: float

    @property
    def sphere_dim(self) -> int:
        return self.n - self.k

    @property
    def ambient_dim(self) -> int:
        return self.n + 1


def make_cylinder(n: int, k: int) -> CylinderParams:
    """Validated cylinder parameters with rho = sqrt(2(n-k))."""
    if int(n) != n or int(k) != k:
        raise ValueError("n and k must be integers")
    n, k = int(n), int(k)
    if n < 2:
        raise ValueError(f"need n >= 2, got n={n}")
    if not (1 <= k <= n - 1):
        raise ValueError(f"need 1 <= k <= n-1, got k={k} for n={n}")
    return CylinderParams(n=n, k=k, rho=math.sqrt(2.0 * (n - k)))


# ---------------------------------------------------------------------------
# chi: fixed smooth odd cutoff. Identity on [-1/2, 1/2], saturates at +-1 for
# |s| >= sqrt(2), concave on [0, oo). The blend on [1/2, sqrt(2)] is the unique
# quintic matching value/first/second derivative at both ends; its slope stays
# positive and its second derivative nonpositive on the blend interval.
# ---------------------------------------------------------------------------

_CHI_A = 0.5
_CHI_B = math.sqrt(2.0)


def _chi_blend_coeffs() -> np.ndarray:
    a, b = _CHI_A, _CHI_B
    rows = []
    rhs = []
    for s, vals in ((a, (a, 1.0, 0.0)), (b, (1.0, 0.0, 0.0))):
        rows.append([s**i for i in range(6)])
        rhs.append(vals[0])
        rows.append([i * s ** (i - 1) if i >= 1 else 0.0 for i in range(6)])
        rhs.append(vals[1])
        rows.append([i * (i - 1) * s ** (i - 2) if i >= 2 else 0.0 for i in range(6)])
        rhs.append(vals[2])
    return np.linalg.solve(np.array(rows), np.array(rhs))


_CHI_C = _chi_blend_coeffs()
_CHI_D1 = np.polynomial.polynomial.polyder(_CHI_C)
_CHI_D2 = np.polynomial.polynomial.polyder(_CHI_C, 2)


def _chi_piecewise(s: np.ndarray, coeffs, linear_val, flat_val) -> np.ndarray:
    t = np.abs(s)
    out = np.where(t <= _CHI_A, linear_val(t), np.nan)
    blend = (t > _CHI_A) & (t < _CHI_B)
    if np.any(blend):
        out = np.where(blend, np.polynomial.polynomial.polyval(t, coeffs), out)
    out = np.where(t >= _CHI_B, flat_val(t), out)
    return out


def chi_eval(s):
    """The cutoff chi(s): odd, chi(s)=s for |s|<=1/2, sign(s) for |s|>=sqrt(2)."""
    s = np.asarray(s, dtype=float)
    mag = _chi_piecewise(s, _CHI_C, lambda t: t, lambda t: np.ones_like(t))
    out = np.sign(s) * mag
    return out if out.ndim else float(out)


def chi_prime(s):
    """First derivative of chi (even function)."""
    s = np.asarray(s, dtype=float)
    out = _chi_piecewise(s, _CHI_D1, lambda t: np.ones_like(t), lambda t: np.zeros_like(t))
    return out if out.ndim else float(out)


def chi_second(s):
    """Second derivative of chi (odd function, <= 0 on [0, oo))."""
    s = np.asarray(s, dtype=float)
    mag = _chi_piecewise(s, _CHI_D2, lambda t: np.zeros_like(t), lambda t: np.zeros_like(t))
    out = np.sign(s) * mag
    return out if out.ndim else float(out)


def odist(point, params: CylinderParams):
    """Regularized signed distance to the cylinder: chi(|x| - rho).

    `point` has shape (..., n+1); the first n-k+1 components are the sphere
    block x, the rest the spine block y (which odist ignores).
    """
    point = np.asarray(point, dtype=float)
    if point.shape[-1] != params.ambient_dim:
        raise ValueError(
            f"point has {point.shape[-1]} components, expected {params.ambient_dim}"
        )
    xnorm = np.linalg.norm(point[..., : params.sphere_dim + 1], axis=-1)
    return chi_eval(xnorm - params.rho)


def odist_from_radius(radius, params: CylinderParams):
    """odist for a point with sphere-block norm `radius` (vectorized)."""
    return chi_eval(np.asarray(radius, dtype=float) - params.rho)


# ---------------------------------------------------------------------------
# Graphs over the cylinder, reduced to one coordinate.
# ---------------------------------------------------------------------------


@dataclass
class GraphPatch:
    """Sampled graph height u over the cylinder in a symmetric reduction.

    kind "line": u = u(y), y on a uniform grid (the k = 1 reduction).
    kind "radial": u = u(r), r = |y| >= 0 on a uniform grid including r = 0.
    Outside its grid the graph function is understood as extended by zero.
    """

    params: CylinderParams
    kind: str
    grid: np.ndarray
    u: np.ndarray
    du: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        if self.kind not in ("line", "radial"):
            raise ValueError(f"unknown patch kind {self.kind!r}")
        if self.grid.shape != self.u.shape or self.grid.ndim != 1:
            raise ValueError("grid and u must be matching 1-D arrays")
        if not np.all(np.isfinite(self.u)):
            raise ValueError("graph height must be finite")
        if np.min(self.u) <= -self.params.rho:
            raise ValueError("graph touches the spine: need inf u > -rho")
        if self.du is None:
            self.du = _central_gradient(self.grid, self.u, even_at_zero=(self.kind == "radial"))
        else:
            self.du = np.asarray(self.du, dtype=float)

    @property
    def h(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def c1_norm(self) -> float:
        return float(np.max(np.abs(self.u)) + np.max(np.abs(self.du)))

    def interpolator(self):
        """Cubic interpolant of u, zero outside the sampled domain."""
        from scipy.interpolate import CubicSpline

        spline = CubicSpline(self.grid, self.u, bc_type="natural")
        lo, hi = self.grid[0], self.grid[-1]

        def evaluate(pts):
            pts = np.asarray(pts, dtype=float)
            inside = (pts >= lo) & (pts <= hi)
            vals = np.where(inside, spline(np.clip(pts, lo, hi)), 0.0)
            return vals

        return evaluate


def _central_gradient(grid: np.ndarray, u: np.ndarray, even_at_zero: bool) -> np.ndarray:
    du = np.gradient(u, grid, edge_order=2)
    if even_at_zero and abs(grid[0]) < 1e-14:
        # ghost point from even symmetry: u(-h) = u(h)
        du[0] = 0.0
    return du


@dataclass(frozen=True)
class GraphGeometry:
    """Pointwise geometry of the embedded graph: normal, area element, point."""

    nu_theta: np.ndarray  # component of the unit normal along the sphere direction
    nu_spine: np.ndarray  # component along the (signed) spine gradient direction
    area_element: np.ndarray
    radius: np.ndarray  # |x| of the embedded point, rho + u


def graph_geometry(patch: GraphPatch, index=None) -> GraphGeometry:
    """Unit normal (pointing away from the spine), area element and embedded point.

    In the symmetric reduction the gradient has no sphere component, so the
    normal is (theta_hat - grad_y u)/sqrt(1+|grad u|^2) and the area element is
    (1 + u/rho)^(n-k) * sqrt(1 + |grad u|^2).
    """
    rho = patch.params.rho
    sel = slice(None) if index is None else index
    u = patch.u[sel]
    du = patch.du[sel]
    if np.any(u <= -rho):
        raise ValueError("degenerate graph: u <= -rho at requested location")
    slope = np.hypot(1.0, du)
    area = (1.0 + u / rho) ** patch.params.sphere_dim * slope
    return GraphGeometry(
        nu_theta=1.0 / slope,
        nu_spine=-du / slope,
        area_element=area,
        radius=rho + u,
    )


@dataclass(frozen=True)
class TransformedGraph:
    """Graph data of lambda*Sigma - (xhat, yhat) over the cylinder.

    For a reduction-symmetric source patch the transformed height depends on
    the sphere direction only through c = xhat . theta_hat', sampled in
    `c_values`; `u_bar[i, j]` is the height at (c_values[i], grid[j]).
    `prediction` is the first-order transformation law
        -c + rho(lambda-1) + lambda * u(lambda^{-1}(y'+yhat))
    and `bound_scale` the quantity (sup|grad_theta u| + |xhat|) * |xhat| that
    controls the residual.
    """

    params: CylinderParams
    grid: np.ndarray
    c_values: np.ndarray
    u_bar: np.ndarray
    prediction: np.ndarray
    residual_max: float
    bound_scale: float

    def patch_at(self, c_index: int) -> GraphPatch:
        return GraphPatch(
            params=self.params,
            kind="line",
            grid=self.grid,
            u=self.u_bar[c_index],
        )


def transform_graph(
    patch: GraphPatch,
    lam: float,
    xhat,
    yhat: float = 0.0,
    n_directions: int = 9,
) -> TransformedGraph:
    """Exact transformed graph of a symmetric patch under dilation + translation.

    The image of {((rho+u(y)) theta_hat, y)} under X -> lam*X - (xhat, yhat) is,
    within each sphere slab, a sphere of radius lam*(rho+u) centered at -xhat;
    solving |t theta_hat' + xhat| = lam*(rho+u) gives the transformed height in
    closed form.  Requires the smallness precondition of the transformation law.
    """
    if patch.kind != "line":
        raise ValueError("transform_graph expects a 'line' patch")
    xhat = np.atleast_1d(np.asarray(xhat, dtype=float))
    xnorm = float(np.linalg.norm(xhat))
    lam = float(lam)
    if lam <= 0:
        raise ValueError("lambda must be positive")
    budget = patch.c1_norm() + xnorm + abs(lam - 1.0)
    if budget > GRAPH_REGIME_LIMIT:
        raise ValueError(
            f"out of graph-transformation regime: C1+|xhat|+|lam-1| = {budget:.4g} "
            f"> {GRAPH_REGIME_LIMIT}"
        )
    rho = patch.params.rho
    interp = patch.interpolator()
    y_src = (patch.grid + yhat) / lam
    u_src = interp(y_src)

    if xnorm == 0.0:
        c_values = np.array([0.0])
    else:
        c_values = np.linspace(-xnorm, xnorm, n_directions)

    radius = lam * (rho + u_src)[None, :]
    c = c_values[:, None]
    disc = c**2 - xnorm**2 + radius**2
    u_bar = -c + np.sqrt(disc) - rho
    prediction = -c + rho * (lam - 1.0) + lam * u_src[None, :]
    residual = float(np.max(np.abs(u_bar - prediction)))
    bound_scale = xnorm * xnorm  # grad_theta u = 0 in the symmetric reduction
    return TransformedGraph(
        params=patch.params,
        grid=patch.grid.copy(),
        c_values=c_values,
        u_bar=u_bar,
        prediction=prediction,
        residual_max=residual,
        bound_scale=bound_scale,
    )
