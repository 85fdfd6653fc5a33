"""Spectral toolkit for the drift-Laplacian Jacobi operator on the cylinder.

The operator is L u = Delta u - (1/2)<y, grad_y u> + u, self-adjoint in
L^2(exp(-|X|^2/4)).  Eigenvalues of -L are mu_i + j/2 - 1 with
mu_i = i(i-1+n-k)/(2(n-k)) from the sphere factor and j the Hermite degree on
the spine.  This module provides the eigenbasis in the symmetric reductions,
Gaussian-weighted quadrature, projections, the analytic heat semigroup, the
linear decay order, and a finite-difference cross-check of the spectrum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import eval_genlaguerre

from .cylinder import CylinderParams

__all__ = [
    "SpectralMode",
    "sphere_mode_eigenvalue",
    "sphere_mode_multiplicity",
    "hermite_eval",
    "hermite_norm2_exact",
    "mode_eigenvalue",
    "enumerate_spectrum",
    "spectrum_values",
    "CylinderQuadrature",
    "SpineBasis",
    "EigenExpansion",
    "weighted_project",
    "heat_semigroup_evolve",
    "linear_decay_order",
    "DiscreteJacobiOperator",
    "discretize_jacobi_operator",
]


@dataclass(frozen=True, order=True)
class SpectralMode:
    """One (sphere level i, Hermite degree j) eigenmode of -L."""

    eigenvalue: float
    i: int
    j: int


def sphere_mode_eigenvalue(i: int, params: CylinderParams) -> float:
    """Eigenvalue mu_i = i(i-1+n-k)/(2(n-k)) of -Delta on S^{n-k}(rho)."""
    if i < 0:
        raise ValueError("spherical level must be >= 0")
    m = params.sphere_dim
    return i * (i - 1 + m) / (2.0 * m)


def sphere_mode_multiplicity(i: int, params: CylinderParams) -> int:
    """Dimension of the level-i spherical-harmonic space on S^{n-k}."""
    m = params.sphere_dim
    if i < 2:
        return 1 if i == 0 else m + 1
    return comb(m + i, i) - comb(m + i - 2, i - 2)


def hermite_eval(j: int, y):
    """Hermite polynomial h_j for the weight exp(-y^2/4).

    Normalization fixed by h_0 = 1, h_1 = y and the recurrence
    h_{j+1}(y) = y h_j(y) - 2 j h_{j-1}(y), so h_2 = y^2 - 2.
    """
    if j < 0:
        raise ValueError("Hermite degree must be >= 0")
    y = np.asarray(y, dtype=float)
    prev = np.ones_like(y)
    if j == 0:
        return prev if prev.ndim else float(prev)
    cur = y.copy()
    for deg in range(1, j):
        prev, cur = cur, y * cur - 2.0 * deg * prev
    return cur if cur.ndim else float(cur)


def hermite_norm2_exact(j: int) -> float:
    """Closed-form squared norm of h_j in L^2(exp(-y^2/4), R)."""
    return math.factorial(j) * 2.0**j * 2.0 * math.sqrt(math.pi)


def radial_hermite_eval(p: int, r, k: int):
    """Radial eigenfunction of degree 2p on R^k (monic in r^{2p}).

    These are scaled generalized Laguerre polynomials in r^2/4; for k = 1 they
    coincide with the even Hermite polynomials h_{2p}.
    """
    r = np.asarray(r, dtype=float)
    vals = (-4.0) ** p * math.factorial(p) * eval_genlaguerre(p, k / 2.0 - 1.0, r**2 / 4.0)
    return vals if vals.ndim else float(vals)


def mode_eigenvalue(i: int, j: int, params: CylinderParams) -> float:
    """Eigenvalue of -L for the (i, j) mode: mu_i + j/2 - 1."""
    return sphere_mode_eigenvalue(i, params) + j / 2.0 - 1.0


def _hermite_count(j: int, k: int, symmetry: str) -> int:
    if symmetry == "full":
        return comb(j + k - 1, k - 1)
    if symmetry == "line":
        return 1
    if symmetry == "radial":
        return 1 if j % 2 == 0 else 0
    if symmetry == "linear":
        return 1 if j == 1 else 0
    raise ValueError(f"unknown symmetry class {symmetry!r}")


def enumerate_spectrum(
    params: CylinderParams,
    cutoff: float,
    symmetry: str = "full",
) -> list[tuple[SpectralMode, int]]:
    """All modes of -L with eigenvalue <= cutoff, sorted, with multiplicities.

    Multiplicity of an (i, j) pair is (spherical multiplicity) x (number of
    degree-j Hermite basis elements in the symmetry class); classes other than
    "full" are theta-invariant, so only i = 0 contributes there.
    """
    if cutoff < -1.0:
        raise ValueError("cutoff below the bottom of the spectrum (-1)")
    modes: list[tuple[SpectralMode, int]] = []
    i = 0
    while True:
        base = sphere_mode_eigenvalue(i, params) - 1.0
        if base > cutoff:
            break
        if symmetry != "full" and i > 0:
            break
        j_max = int(math.floor(2.0 * (cutoff - base) + 1e-12))
        for j in range(0, j_max + 1):
            mult = sphere_mode_multiplicity(i, params) * _hermite_count(j, params.k, symmetry)
            if mult > 0:
                modes.append((SpectralMode(mode_eigenvalue(i, j, params), i, j), mult))
        i += 1
    modes.sort(key=lambda pair: (pair[0].eigenvalue, pair[0].i, pair[0].j))
    return modes


def spectrum_values(params: CylinderParams, cutoff: float) -> list[float]:
    """Distinct eigenvalues of -L up to cutoff."""
    vals = sorted({m.eigenvalue for m, _ in enumerate_spectrum(params, cutoff)})
    return vals


# ---------------------------------------------------------------------------
# Gaussian-weighted quadrature on the reduced coordinate.
# ---------------------------------------------------------------------------


class CylinderQuadrature:
    """Composite Gauss-Legendre quadrature for the weighted L^2 on the cylinder.

    Integrals are taken against the explicit weight exp(-|X|^2/4) restricted to
    the symmetric reduction; the constant sphere factor
    omega_{n-k} rho^{n-k} exp(-rho^2/4) is included so norms agree with the
    ambient weighted L^2 on the cylinder.  The truncation half-width L is
    chosen so the tail of the highest represented polynomial mode is below
    1e-12 relative.
    """

    def __init__(
        self,
        params: CylinderParams,
        kind: str = "line",
        half_width: float = 16.0,
        points_per_panel: int = 16,
        panels_per_unit: int = 1,
    ):
        if kind not in ("line", "radial"):
            raise ValueError(f"unknown quadrature kind {kind!r}")
        self.params = params
        self.kind = kind
        self.half_width = float(half_width)
        lo = -self.half_width if kind == "line" else 0.0
        hi = self.half_width
        n_panels = max(1, int(round((hi - lo) * panels_per_unit)))
        gl_x, gl_w = np.polynomial.legendre.leggauss(points_per_panel)
        edges = np.linspace(lo, hi, n_panels + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * (edges[1:] - edges[:-1])
        self.nodes = (mid[:, None] + half[:, None] * gl_x[None, :]).ravel()
        base_w = (half[:, None] * gl_w[None, :]).ravel()
        m = params.sphere_dim
        sphere_factor = _sphere_area(m) * params.rho**m * math.exp(-params.rho**2 / 4.0)
        weight = np.exp(-self.nodes**2 / 4.0)
        if kind == "radial":
            weight = weight * _sphere_area(params.k - 1) * self.nodes ** (params.k - 1)
        self.weights = base_w * weight * sphere_factor

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, np.asarray(values, dtype=float)))

    def inner(self, f_values, g_values) -> float:
        return self.integrate(np.asarray(f_values) * np.asarray(g_values))

    def norm2(self, f_values) -> float:
        return self.inner(f_values, f_values)


def _sphere_area(m: int) -> float:
    """Area of the unit m-sphere; S^0 is two points."""
    if m < 0:
        raise ValueError("sphere dimension must be >= 0")
    return 2.0 * math.pi ** ((m + 1) / 2.0) / math.gamma((m + 1) / 2.0)


class SpineBasis:
    """Eigenbasis of -L in a theta-invariant reduction, with computed norms."""

    def __init__(
        self,
        params: CylinderParams,
        kind: str = "line",
        max_degree: int = 12,
        quadrature: CylinderQuadrature | None = None,
    ):
        self.params = params
        self.kind = kind
        self.max_degree = int(max_degree)
        self.quad = quadrature or CylinderQuadrature(params, kind=kind)
        degrees = range(0, self.max_degree + 1)
        if kind == "radial":
            degrees = range(0, self.max_degree + 1, 2)
        self.modes = [SpectralMode(mode_eigenvalue(0, j, params), 0, j) for j in degrees]
        self._table = np.array([self._eval_degree(m.j, self.quad.nodes) for m in self.modes])
        self.norm2 = np.array([self.quad.norm2(row) for row in self._table])

    def _eval_degree(self, j: int, pts):
        if self.kind == "line":
            return hermite_eval(j, pts)
        return radial_hermite_eval(j // 2, pts, self.params.k)

    def eval_mode(self, mode: SpectralMode, pts):
        return self._eval_degree(mode.j, pts)

    def mode_norm2(self, mode: SpectralMode) -> float:
        return float(self.norm2[self._index(mode)])

    def _index(self, mode: SpectralMode) -> int:
        for idx, m in enumerate(self.modes):
            if m.j == mode.j and m.i == mode.i:
                return idx
        raise KeyError(f"mode {mode} not in basis")

    def expand(self, values_on_nodes) -> "EigenExpansion":
        """Coefficients of a function sampled on the quadrature nodes."""
        values = np.asarray(values_on_nodes, dtype=float)
        coeffs = self._table @ (self.quad.weights * values) / self.norm2
        terms = {
            mode: (float(c), float(n2))
            for mode, c, n2 in zip(self.modes, coeffs, self.norm2)
        }
        recon = coeffs @ self._table
        res2 = self.quad.norm2(values - recon)
        tot2 = self.quad.norm2(values)
        residual = math.sqrt(max(res2, 0.0) / tot2) if tot2 > 0 else 0.0
        return EigenExpansion(params=self.params, terms=terms, truncation_residual=residual)

    def sample(self, expansion: "EigenExpansion", pts):
        pts = np.asarray(pts, dtype=float)
        out = np.zeros_like(pts)
        for mode, (c, _) in expansion.terms.items():
            if c != 0.0:
                out = out + c * self.eval_mode(mode, pts)
        return out


@dataclass
class EigenExpansion:
    """Finite eigenmode expansion: mode -> (coefficient, weighted mode norm^2).

    Coefficients are against the polynomial (monic-like) basis; Plancherel then
    reads ||v||^2 = sum c^2 * norm2.  Modes with i > 0 may be carried purely
    analytically (their grid samples are never needed for norms or evolution).
    """

    params: CylinderParams
    terms: dict[SpectralMode, tuple[float, float]]
    truncation_residual: float = 0.0

    def norm2(self) -> float:
        return sum(c * c * n2 for c, n2 in self.terms.values())

    def norm(self) -> float:
        return math.sqrt(max(self.norm2(), 0.0))

    def weighted_mean_is_zero(self, rel_tol: float = 1e-12) -> bool:
        """True when the constant-mode (eigenvalue -1) coefficient vanishes."""
        total = self.norm2()
        for mode, (c, n2) in self.terms.items():
            if mode.i == 0 and mode.j == 0:
                return c * c * n2 <= rel_tol * total
        return True

    def filtered(self, gamma: float, relation: str, tol: float = 1e-9) -> "EigenExpansion":
        keep = {
            "=": lambda lam: abs(lam - gamma) <= tol,
            "<=": lambda lam: lam <= gamma + tol,
            ">=": lambda lam: lam >= gamma - tol,
            "<": lambda lam: lam < gamma - tol,
            ">": lambda lam: lam > gamma + tol,
        }
        if relation not in keep:
            raise ValueError(f"unknown relation {relation!r}")
        pred = keep[relation]
        terms = {m: cn for m, cn in self.terms.items() if pred(m.eigenvalue)}
        return EigenExpansion(self.params, terms, self.truncation_residual)

    def evolve(self, tau: float) -> "EigenExpansion":
        terms = {
            m: (c * math.exp(-m.eigenvalue * tau), n2) for m, (c, n2) in self.terms.items()
        }
        return EigenExpansion(self.params, terms, self.truncation_residual)

    def support_eigenvalues(self, rel_tol: float = 1e-12) -> list[float]:
        total = self.norm2()
        vals = sorted(
            {
                m.eigenvalue
                for m, (c, n2) in self.terms.items()
                if c * c * n2 > rel_tol * total
            }
        )
        return vals


@dataclass(frozen=True)
class ProjectionResult:
    component: EigenExpansion
    truncation_residual: float
    truncation_ok: bool


def weighted_project(
    values_on_nodes,
    gamma: float,
    relation: str,
    basis: SpineBasis,
    residual_threshold: float = 1e-6,
) -> ProjectionResult:
    """Orthogonal projection of a grid function onto eigenspaces with
    eigenvalue ~ gamma, via Gaussian-weighted inner products.

    Projections onto "<= gamma" with gamma < -1 are identically zero.  A
    truncation residual above the threshold flags that the basis degree is too
    small to represent the input.
    """
    expansion = basis.expand(values_on_nodes)
    if relation in ("<=", "<") and gamma < -1.0:
        empty = EigenExpansion(basis.params, {}, expansion.truncation_residual)
        return ProjectionResult(empty, expansion.truncation_residual, True)
    component = expansion.filtered(gamma, relation)
    ok = expansion.truncation_residual <= residual_threshold
    return ProjectionResult(component, expansion.truncation_residual, ok)


def heat_semigroup_evolve(expansion: EigenExpansion, tau: float) -> EigenExpansion:
    """Analytic solution of d_tau v = L v: each mode scaled by exp(-lambda tau)."""
    if tau < 0:
        raise ValueError("tau must be >= 0")
    return expansion.evolve(tau)


def linear_decay_order(expansion: EigenExpansion, tau: float) -> float:
    """Linear decay order N(tau) = log(||v(tau)|| / ||v(tau+1)||).

    The expansion is the tau = 0 data of the Jacobi-field evolution.
    """
    num = expansion.evolve(tau).norm2()
    den = expansion.evolve(tau + 1.0).norm2()
    if num <= 0.0 or den <= 0.0:
        raise ZeroDivisionError("decay order undefined: zero norm")
    return 0.5 * math.log(num / den)


# ---------------------------------------------------------------------------
# Finite-difference cross-check of the spectrum.
# ---------------------------------------------------------------------------


class DiscreteJacobiOperator:
    """Finite-difference -L on a theta-invariant reduction, in symmetric form.

    Conservative discretization of -(1/w)(w u')' - u with w the Gaussian weight
    (times r^{k-1} in the radial class), symmetrized by the diag(sqrt(w))
    similarity so eigenvalues come from a real symmetric tridiagonal matrix.
    Eigenvalues via Sturm-sequence bisection, eigenvectors via inverse
    iteration.
    """

    def __init__(
        self,
        params: CylinderParams,
        kind: str = "line",
        n_points: int = 2000,
        half_width: float = 10.0,
    ):
        if n_points < 16:
            raise ValueError("grid too coarse: need at least 16 points")
        if kind not in ("line", "radial"):
            raise ValueError(f"unknown kind {kind!r}")
        self.params = params
        self.kind = kind
        self.n = int(n_points)
        self.half_width = float(half_width)
        # cell-centered grid; zero-flux at r = 0 is automatic for the radial kind
        lo = -self.half_width if kind == "line" else 0.0
        h = (self.half_width - lo) / self.n
        self.h = h
        self.grid = lo + (np.arange(self.n) + 0.5) * h
        edges = lo + np.arange(self.n + 1) * h

        def w(pts):
            pts = np.asarray(pts, dtype=float)
            out = np.exp(-(pts**2) / 4.0)
            if kind == "radial":
                out = out * np.abs(pts) ** (params.k - 1)
            return out

        w_c = w(self.grid)
        w_e = w(edges)
        if kind == "radial":
            w_e[0] = 0.0  # zero flux through r = 0
        # Dirichlet outside the truncated domain
        self.diag = (w_e[1:] + w_e[:-1]) / (h * h * w_c) - 1.0
        self.off = -w_e[1:-1] / (h * h * np.sqrt(w_c[:-1] * w_c[1:]))
        self._w_c = w_c

    def apply(self, u_values) -> np.ndarray:
        """-L applied to samples of u on the grid (original variables)."""
        u = np.asarray(u_values, dtype=float)
        s = np.sqrt(self._w_c)
        psi = s * u
        out = self.diag * psi
        out[:-1] += self.off * psi[1:]
        out[1:] += self.off * psi[:-1]
        return out / s

    def eigenvalues(self, count: int = 6) -> np.ndarray:
        return sturm_bisection_eigenvalues(self.diag, self.off, count)

    def eigenvector(self, eigenvalue: float, iters: int = 6) -> np.ndarray:
        """Inverse-iteration eigenvector, returned in symmetrized variables.

        The weighted inner product of two functions u, v equals the plain dot
        product of their symmetrized vectors (times h), so correlations against
        analytic modes should be computed via `symmetrize`.
        """
        n = self.n
        shift = eigenvalue + 1e-10 * max(1.0, abs(eigenvalue))
        ab = np.zeros((3, n))
        ab[0, 1:] = self.off
        ab[1, :] = self.diag - shift
        ab[2, :-1] = self.off
        rng = np.random.default_rng(12345)
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        for _ in range(iters):
            v = solve_banded((1, 1), ab, v)
            v /= np.linalg.norm(v)
        return v

    def symmetrize(self, u_values) -> np.ndarray:
        """Map function samples to the symmetric-matrix variables sqrt(w) u."""
        return np.sqrt(self._w_c) * np.asarray(u_values, dtype=float)


def discretize_jacobi_operator(
    params: CylinderParams,
    kind: str = "line",
    n_points: int = 2000,
    half_width: float = 10.0,
) -> DiscreteJacobiOperator:
    return DiscreteJacobiOperator(params, kind=kind, n_points=n_points, half_width=half_width)


def _sturm_count(diag: np.ndarray, off2: np.ndarray, sigma: float) -> int:
    """Number of eigenvalues strictly below sigma (LDL^T sign count)."""
    t = diag[0] - sigma
    count = 1 if t < 0 else 0
    tiny = 1e-300
    for i in range(1, diag.shape[0]):
        if abs(t) < tiny:
            t = -tiny
        t = diag[i] - sigma - off2[i - 1] / t
        if t < 0:
            count += 1
    return count


def sturm_bisection_eigenvalues(diag, off, count: int, tol: float = 0.0) -> np.ndarray:
    """Lowest `count` eigenvalues of a symmetric tridiagonal matrix.

    Bisection on the Sturm-sequence eigenvalue count; robust for the handful of
    bottom eigenvalues the spectrum check needs, with no external solver.
    """
    diag = np.asarray(diag, dtype=float)
    off = np.asarray(off, dtype=float)
    off2 = off * off
    n = diag.shape[0]
    if count > n:
        raise ValueError("asked for more eigenvalues than matrix dimension")
    radius = np.zeros(n)
    radius[:-1] += np.abs(off)
    radius[1:] += np.abs(off)
    lo = float(np.min(diag - radius))
    hi = float(np.max(diag + radius))
    if tol <= 0.0:
        tol = 1e-13 * max(abs(lo), abs(hi), 1.0)
    out = np.empty(count)
    for m in range(count):
        a, b = lo, hi
        while b - a > tol:
            mid = 0.5 * (a + b)
            if _sturm_count(diag, off2, mid) >= m + 1:
                b = mid
            else:
                a = mid
        out[m] = 0.5 * (a + b)
    return out
