"""A-paths and the flows along them.

Integration is classical fixed-step RK4 on the coupled base/fiber system

    dx_i/dt  = sum_j  mu_j b^{ji}(x)
    dmu_j/dt = - sum_{s,u} mu_s mu_u Gamma_{su}^j(x)

with dense cubic-Hermite output (node states plus node derivatives).  The
quadratic right side is contracted against the symmetrized coefficients,
so charts whose Gamma is antisymmetric in the lower pair (bi-invariant
Lie algebras) keep the fiber coordinates constant to the bit.

Grids are deterministic: a requested span and step always produce the same
nodes, which the transport / Jacobi / variation machinery reuses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charts import AVector
from .metric import christoffel, curvature, fiber_inner

__all__ = [
    "APath",
    "FiberCurve",
    "DomainExitError",
    "NonGeodesicError",
    "geodesic_rhs",
    "geodesic_integrate",
    "exp_map",
    "parallel_transport",
    "transport_frame",
    "derivative_along",
    "geodesic_residual",
    "jacobi_solve",
    "dexp",
    "energy_along",
]

TOL_APATH_GENERATED = 1e-9
TOL_APATH_SUPPLIED = 1e-6


class DomainExitError(RuntimeError):
    """Trajectory left the chart box; carries the exit time and the partial path."""

    def __init__(self, time, path):
        super().__init__(f"trajectory left the chart domain at t={time:.6g}")
        self.time = time
        self.path = path


class NonGeodesicError(ValueError):
    """An operation requiring a geodesic was fed a non-geodesic path."""


# ---------------------------------------------------------------------------
# Dense grids with cubic Hermite interpolation
# ---------------------------------------------------------------------------


def _hermite(ts, ys, ds, t):
    """Evaluate the Hermite interpolant (and its derivative) at times t."""
    t = np.asarray(t, dtype=float)
    idx = np.clip(np.searchsorted(ts, t, side="right") - 1, 0, len(ts) - 2)
    t0 = ts[idx]
    h = ts[idx + 1] - t0
    s = ((t - t0) / h)[..., None]
    s2 = s * s
    s3 = s2 * s
    y0, y1 = ys[idx], ys[idx + 1]
    d0, d1 = ds[idx], ds[idx + 1]
    hcol = h[..., None]
    value = (
        (2 * s3 - 3 * s2 + 1) * y0
        + hcol * (s3 - 2 * s2 + s) * d0
        + (-2 * s3 + 3 * s2) * y1
        + hcol * (s3 - s2) * d1
    )
    deriv = (
        (6 * s2 - 6 * s) / hcol * y0
        + (3 * s2 - 4 * s + 1) * d0
        + (6 * s - 6 * s2) / hcol * y1
        + (3 * s2 - 2 * s) * d1
    )
    return value, deriv


@dataclass(eq=False)
class APath:
    """Time-discretized A-path with dense interpolation.

    `ts` is strictly increasing; `xs`/`mus` hold node states and
    `dxs`/`dmus` the node time-derivatives produced by the integrator.
    """

    ts: np.ndarray
    xs: np.ndarray
    mus: np.ndarray
    dxs: np.ndarray
    dmus: np.ndarray

    @property
    def n(self):
        return self.xs.shape[1]

    @property
    def r(self):
        return self.mus.shape[1]

    @property
    def t0(self):
        return float(self.ts[0])

    @property
    def t1(self):
        return float(self.ts[-1])

    def eval(self, t):
        """(x, mu) at time(s) t via per-component cubic Hermite."""
        x, _ = _hermite(self.ts, self.xs, self.dxs, t)
        mu, _ = _hermite(self.ts, self.mus, self.dmus, t)
        return x, mu

    def base_velocity(self, t):
        """d/dt of the interpolated base path at time(s) t."""
        _, v = _hermite(self.ts, self.xs, self.dxs, t)
        return v

    def end_state(self) -> AVector:
        return AVector(self.xs[-1], self.mus[-1])

    def reversed(self) -> "APath":
        """The reverse A-path t -> -alpha(t1 + t0 - t) on the same grid."""
        ts = self.ts[0] + self.ts[-1] - self.ts[::-1]
        return APath(
            ts=ts,
            xs=self.xs[::-1].copy(),
            mus=-self.mus[::-1],
            dxs=-self.dxs[::-1],
            dmus=self.dmus[::-1].copy(),
        )

    def constraint_residual(self, chart):
        """max |#(alpha) - d/dt base| over interval midpoints (Def of A-path)."""
        tm = 0.5 * (self.ts[:-1] + self.ts[1:])
        x, mu = self.eval(tm)
        vel = self.base_velocity(tm)
        B, _ = chart.eval_anchor(x)
        return float(np.max(np.abs(np.einsum("ts,tsi->ti", mu, B) - vel)))


@dataclass(eq=False)
class FiberCurve:
    """Fiber coordinates over the base path of a host APath (same grid)."""

    ts: np.ndarray
    values: np.ndarray  # (N, r)
    dvalues: np.ndarray | None = None

    def eval(self, t):
        if self.dvalues is None:
            raise ValueError("curve has no stored derivatives to interpolate with")
        v, _ = _hermite(self.ts, self.values, self.dvalues, t)
        return v


# ---------------------------------------------------------------------------
# RK4 core
# ---------------------------------------------------------------------------


def _grid(t_span, step):
    t0, t1 = map(float, t_span)
    span = t1 - t0
    if span == 0.0:
        raise ValueError("empty integration span")
    nsteps = max(1, int(round(abs(span) / step)))
    return np.linspace(t0, t1, nsteps + 1)


def _rk4(f, ts, y0, on_node=None):
    """Classical RK4 over the given nodes; returns states and derivatives.

    `on_node(k, y)` may raise to abort; states up to node k are kept by the
    caller via the exception payload it builds.
    """
    ys = np.empty((len(ts),) + np.shape(y0))
    ds = np.empty_like(ys)
    ys[0] = y0
    ds[0] = f(ts[0], ys[0])
    if on_node is not None:
        on_node(0, ys[0], ys, ds)
    for k in range(len(ts) - 1):
        t, h = ts[k], ts[k + 1] - ts[k]
        y = ys[k]
        k1 = ds[k]
        k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = f(t + h, y + h * k3)
        ys[k + 1] = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        ds[k + 1] = f(ts[k + 1], ys[k + 1])
        if on_node is not None:
            on_node(k + 1, ys[k + 1], ys, ds)
    return ys, ds


# ---------------------------------------------------------------------------
# Geodesics
# ---------------------------------------------------------------------------


def geodesic_rhs(chart, metric, x, mu):
    """Right side of the geodesic system at (x, mu); batch friendly."""
    B, _ = chart.eval_anchor(x)
    gamma = christoffel(chart, metric, x, with_derivative=False).gamma
    gsym = 0.5 * (gamma + np.swapaxes(gamma, -3, -2))
    dx = np.einsum("...s,...si->...i", mu, B)
    dmu = -np.einsum("...s,...u,...suj->...j", mu, mu, gsym)
    return dx, dmu


def geodesic_integrate(chart, metric, start: AVector, t_span=(0.0, 1.0), step=1e-3):
    """Integrate the geodesic through `start` over `t_span` with fixed step.

    Raises DomainExitError (with the partial path attached) as soon as a
    node leaves the chart box.
    """
    n, r = chart.n, chart.r
    ts = _grid(t_span, step)

    def f(t, y):
        dx, dmu = geodesic_rhs(chart, metric, y[:n], y[n:])
        return np.concatenate([dx, dmu])

    def guard(k, y, ys, ds):
        if not chart.contains(y[:n]):
            partial = APath(
                ts=ts[:k].copy(),
                xs=ys[:k, :n].copy(),
                mus=ys[:k, n:].copy(),
                dxs=ds[:k, :n].copy(),
                dmus=ds[:k, n:].copy(),
            )
            raise DomainExitError(float(ts[k]), partial)

    y0 = np.concatenate([np.asarray(start.x, float), np.asarray(start.mu, float)])
    ys, ds = _rk4(f, ts, y0, on_node=guard)
    return APath(ts=ts, xs=ys[:, :n], mus=ys[:, n:], dxs=ds[:, :n], dmus=ds[:, n:])


def exp_map(chart, metric, m, a, step=1e-3):
    """Base point of the time-1 geodesic from (m, a)."""
    path = geodesic_integrate(chart, metric, AVector(m, a), (0.0, 1.0), step)
    return path.xs[-1].copy()


def energy_along(chart, metric, path: APath):
    """E(t) = 1/2 <alpha, alpha> at the path nodes."""
    return 0.5 * fiber_inner(metric, path.xs, path.mus, path.mus)


# ---------------------------------------------------------------------------
# Parallel transport
# ---------------------------------------------------------------------------


def parallel_transport(chart, metric, alpha: APath, s0):
    """Solve ds^u/dt + sum alpha^i s^j Gamma_{ij}^u = 0 along alpha."""

    def f(t, s):
        x, mu = alpha.eval(t)
        gamma = christoffel(chart, metric, x, with_derivative=False).gamma
        return -np.einsum("i,j,iju->u", mu, s, gamma)

    ys, ds = _rk4(f, alpha.ts, np.asarray(s0, dtype=float))
    return FiberCurve(ts=alpha.ts, values=ys, dvalues=ds)


def transport_frame(chart, metric, alpha: APath):
    """Transport the full coordinate frame; returns S with S[k] mapping
    fiber coordinates at t0 to coordinates at ts[k] (columns are the
    transported basis vectors)."""

    def f(t, S):
        x, mu = alpha.eval(t)
        gamma = christoffel(chart, metric, x, with_derivative=False).gamma
        return -np.einsum("i,iju,jk->uk", mu, gamma, S)

    ys, _ = _rk4(f, alpha.ts, np.eye(alpha.r))
    return ys


# ---------------------------------------------------------------------------
# Derivatives along a path
# ---------------------------------------------------------------------------


def _grid_derivative(values, ts):
    """Time derivative of node values; centered stencils on the dense grid.

    Fourth-order five-point stencils (one-sided at the ends), falling back
    to np.gradient for very short grids.  Assumes uniform spacing, which
    every generated grid has.
    """
    N = len(ts)
    if N < 5:
        return np.gradient(values, ts, axis=0)
    h = ts[1] - ts[0]
    out = np.empty_like(values)
    out[2:-2] = (
        values[:-4] - 8.0 * values[1:-3] + 8.0 * values[3:-1] - values[4:]
    ) / (12.0 * h)
    out[0] = (
        -25.0 * values[0] + 48.0 * values[1] - 36.0 * values[2]
        + 16.0 * values[3] - 3.0 * values[4]
    ) / (12.0 * h)
    out[1] = (
        -3.0 * values[0] - 10.0 * values[1] + 18.0 * values[2]
        - 6.0 * values[3] + values[4]
    ) / (12.0 * h)
    out[-2] = -(
        -3.0 * values[-1] - 10.0 * values[-2] + 18.0 * values[-3]
        - 6.0 * values[-4] + values[-5]
    ) / (12.0 * h)
    out[-1] = -(
        -25.0 * values[-1] + 48.0 * values[-2] - 36.0 * values[-3]
        + 16.0 * values[-4] - 3.0 * values[-5]
    ) / (12.0 * h)
    return out


def derivative_along(chart, metric, alpha: APath, s: FiberCurve):
    """(nabla^alpha s)^u = ds^u/dt + sum alpha^i s^j Gamma_{ij}^u on the grid."""
    if len(s.ts) != len(alpha.ts) or not np.allclose(s.ts, alpha.ts):
        raise ValueError("fiber curve grid does not match the path grid")
    sdot = _grid_derivative(s.values, alpha.ts)
    gamma = christoffel(chart, metric, alpha.xs, with_derivative=False).gamma
    corr = np.einsum("ti,tj,tiju->tu", alpha.mus, s.values, gamma)
    return FiberCurve(ts=alpha.ts, values=sdot + corr)


def geodesic_residual(chart, metric, alpha: APath):
    """max |nabla^alpha alpha| over the grid; zero for geodesics."""
    mu_curve = FiberCurve(ts=alpha.ts, values=alpha.mus)
    return float(np.max(np.abs(derivative_along(chart, metric, alpha, mu_curve).values)))


# ---------------------------------------------------------------------------
# Jacobi sections and the differential of the exponential
# ---------------------------------------------------------------------------


def jacobi_solve(chart, metric, alpha: APath, beta0, dbeta0, geodesic_tol=1e-6):
    """Solve the Jacobi equation beta'' - R(alpha, beta) alpha = 0 along a
    geodesic, with beta'' the iterated nabla^alpha derivative.

    The state is (beta, w = nabla^alpha beta), reduced to first order:
    beta' = w - Gamma(alpha, beta), w' = R(alpha,beta)alpha - Gamma(alpha,w).
    """
    res = geodesic_residual(chart, metric, alpha)
    if res > geodesic_tol:
        raise NonGeodesicError(
            f"path is not a geodesic (derivative-along residual {res:.3e})"
        )
    r = alpha.r

    def f(t, y):
        x, mu = alpha.eval(t)
        gamma = christoffel(chart, metric, x, with_derivative=False).gamma
        R = curvature(chart, metric, x)
        beta, w = y[:r], y[r:]
        dbeta = w - np.einsum("i,j,iju->u", mu, beta, gamma)
        dw = np.einsum("ijkl,i,j,k->l", R, mu, beta, mu) - np.einsum(
            "i,j,iju->u", mu, w, gamma
        )
        return np.concatenate([dbeta, dw])

    y0 = np.concatenate([np.asarray(beta0, float), np.asarray(dbeta0, float)])
    ys, ds = _rk4(f, alpha.ts, y0)
    return FiberCurve(ts=alpha.ts, values=ys[:, :r], dvalues=ds[:, :r])


def dexp(chart, metric, m, a, u, step=1e-3):
    """d_a exp_m(u) = #(beta(1)) for the Jacobi section with beta(0) = 0,
    beta'(0) = u along the geodesic from (m, a)."""
    path = geodesic_integrate(chart, metric, AVector(m, a), (0.0, 1.0), step)
    beta = jacobi_solve(chart, metric, path, np.zeros(chart.r), u)
    B, _ = chart.eval_anchor(path.xs[-1])
    return np.einsum("j,ji->i", beta.values[-1], B)
