"""Two-parameter families of A-paths and their defect calculus.

A variation is a rectangular (eps, t) mesh of fiber states whose t-rows
are A-paths over a common leaf; a transverse family beta matched to it
pushes the base in the eps direction.  The defect

    Delta = D_t beta - D_eps alpha

is anchored in the kernel for any transverse family and vanishes exactly
for the distinguished one, which this module constructs two ways: by
integrating the linear Delta = 0 equation along t (given initial rows),
and by flowing a whole A-path in eps to produce fixed-endpoint families
around a given path.

All mesh derivatives are second-order centered differences (one-sided at
the boundary), matching what discrete user-supplied grids can support;
the integrators themselves remain RK4.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .charts import AVector
from .metric import christoffel, curvature, fiber_inner
from .paths import APath, FiberCurve, geodesic_integrate, jacobi_solve

__all__ = [
    "VariationGrid",
    "grid_to_csv",
    "grid_from_csv",
    "delta",
    "anchor_of_grid",
    "solve_transverse",
    "is_fixed_endpoint_homotopy",
    "curvature_commutation_residual",
    "first_variation_residual",
    "row_energies",
    "make_geodesic_pencil",
    "make_fixed_endpoint_homotopy",
    "jacobi_from_geodesic_pencil",
    "PencilReport",
]

TRANSVERSALITY_TOL = 1e-6
TRANSVERSALITY_POSTERIOR_TOL = 1e-4
HOMOTOPY_TOL = 1e-5

_trapz = getattr(np, "trapezoid", None) or np.trapz


@dataclass(eq=False)
class VariationGrid:
    """A variation alpha(eps, t) on a rectangular mesh, optionally with a
    transverse family beta(eps, t).

    `x` has shape (E, N, n), `mu` and `beta` (E, N, r).
    """

    eps: np.ndarray
    ts: np.ndarray
    x: np.ndarray
    mu: np.ndarray
    beta: np.ndarray | None = None

    @property
    def shape(self):
        return (len(self.eps), len(self.ts))

    def row_path(self, i) -> APath:
        """The i-th eps-row as an APath (derivatives by mesh differences)."""
        dxs = np.gradient(self.x[i], self.ts, axis=0, edge_order=2)
        dmus = np.gradient(self.mu[i], self.ts, axis=0, edge_order=2)
        return APath(ts=self.ts, xs=self.x[i], mus=self.mu[i], dxs=dxs, dmus=dmus)

    def apath_residual(self, chart):
        """max |#(alpha) - d(base)/dt| over the mesh (A-path rows check)."""
        B, _ = chart.eval_anchor(self.x)
        push = np.einsum("ets,etsi->eti", self.mu, B)
        dxdt = np.gradient(self.x, self.ts, axis=1, edge_order=2)
        return float(np.max(np.abs(push - dxdt)))

    def transversality_residual(self, chart):
        """max |#(beta) - d(base)/deps| at interior eps-rows."""
        if self.beta is None:
            raise ValueError("grid carries no transverse family")
        B, _ = chart.eval_anchor(self.x)
        push = np.einsum("ets,etsi->eti", self.beta, B)
        dxde = np.gradient(self.x, self.eps, axis=0, edge_order=2)
        return float(np.max(np.abs(push - dxde)[1:-1]))


def grid_to_csv(grid: VariationGrid, path):
    """Store a grid as rows (eps, t, x*, mu* [, beta*]), row-major in eps."""
    E, N = grid.shape
    n = grid.x.shape[2]
    r = grid.mu.shape[2]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        head = ["eps", "t"]
        head += [f"x{i + 1}" for i in range(n)]
        head += [f"mu{i + 1}" for i in range(r)]
        if grid.beta is not None:
            head += [f"beta{i + 1}" for i in range(r)]
        fh.write(",".join(head) + "\n")
        for i in range(E):
            for k in range(N):
                cells = [grid.eps[i], grid.ts[k], *grid.x[i, k], *grid.mu[i, k]]
                if grid.beta is not None:
                    cells += list(grid.beta[i, k])
                fh.write(",".join(f"{v:.17g}" for v in cells) + "\n")


def grid_from_csv(path, n, r) -> VariationGrid:
    """Load a grid stored by `grid_to_csv`; the mesh must be rectangular."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    names = data.dtype.names
    has_beta = f"beta{r}" in names
    eps_col = data["eps"]
    ts_col = data["t"]
    eps = np.unique(eps_col)
    ts = np.unique(ts_col)
    E, N = len(eps), len(ts)
    if E * N != len(eps_col):
        raise ValueError("grid file is not a rectangular (eps, t) mesh")
    order = np.lexsort((ts_col, eps_col))

    def gather(stem, count):
        cols = [data[f"{stem}{i + 1}"][order] for i in range(count)]
        return np.stack(cols, axis=-1).reshape(E, N, count)

    return VariationGrid(
        eps=eps,
        ts=ts,
        x=gather("x", n),
        mu=gather("mu", r),
        beta=gather("beta", r) if has_beta else None,
    )


def _check_mesh(grid):
    if len(grid.eps) < 3 or len(grid.ts) < 3:
        raise ValueError("mesh too coarse: need at least 3 nodes per direction")


def _gamma_on_mesh(chart, metric, grid):
    return christoffel(chart, metric, grid.x, with_derivative=False).gamma


def delta(chart, metric, grid: VariationGrid):
    """Delta = D_t beta - D_eps alpha on the mesh, shape (E, N, r).

    The torsion term of the general defect vanishes for the Levi-Civita
    connection.  Partial derivatives are centered mesh differences, so
    boundary rows/columns are one order less accurate.
    """
    _check_mesh(grid)
    if grid.beta is None:
        raise ValueError("delta needs a transverse family on the grid")
    gamma = _gamma_on_mesh(chart, metric, grid)
    dbeta_dt = np.gradient(grid.beta, grid.ts, axis=1, edge_order=2)
    dalpha_de = np.gradient(grid.mu, grid.eps, axis=0, edge_order=2)
    quad = np.einsum("eti,etj,etiju->etu", grid.mu, grid.beta, gamma) - np.einsum(
        "eti,etj,etiju->etu", grid.beta, grid.mu, gamma
    )
    return dbeta_dt - dalpha_de + quad


def anchor_of_grid(chart, grid, values):
    """#(values) over the mesh for fiber arrays of shape (E, N, r)."""
    B, _ = chart.eval_anchor(grid.x)
    return np.einsum("ets,etsi->eti", values, B)


def solve_transverse(chart, metric, grid: VariationGrid, beta0) -> VariationGrid:
    """Integrate the unique transverse family with Delta = 0 and given
    initial rows beta(eps, t0) = beta0(eps).

    beta0 must anchor onto the eps-velocity of the base at t0 (checked).
    The result grid carries beta; its a-posteriori transversality residual
    is re-verified and a warning is issued when the mesh is too coarse.
    """
    _check_mesh(grid)
    beta0 = np.asarray(beta0, dtype=float)
    E, N = grid.shape
    if beta0.shape != (E, _rank(grid)):
        raise ValueError(f"beta0 must have shape (E, r) = ({E}, {_rank(grid)})")

    # precondition: #(beta0) matches the eps-derivative of the base at t0
    B0, _ = chart.eval_anchor(grid.x[:, 0])
    push = np.einsum("es,esi->ei", beta0, B0)
    dxde0 = np.gradient(grid.x[:, 0], grid.eps, axis=0, edge_order=2)
    pre = float(np.max(np.abs(push - dxde0)[1:-1]))
    if pre > TRANSVERSALITY_TOL:
        raise ValueError(
            f"initial rows are not transverse (residual {pre:.3e} > "
            f"{TRANSVERSALITY_TOL:g})"
        )

    dalpha_de = np.gradient(grid.mu, grid.eps, axis=0, edge_order=2)
    beta = np.empty_like(grid.mu)
    for i in range(E):
        beta[i] = _integrate_row(
            chart, metric, grid.ts, grid.x[i], grid.mu[i], dalpha_de[i], beta0[i]
        )
    out = replace(grid, beta=beta)
    post = out.transversality_residual(chart)
    if post > TRANSVERSALITY_POSTERIOR_TOL:
        warnings.warn(
            f"transverse solve: a-posteriori transversality residual {post:.3e}; "
            "the mesh is probably too coarse",
            stacklevel=2,
        )
    return out


def _rank(grid):
    return grid.mu.shape[2]


def _midpoint_interp(values):
    """Values at interval midpoints of a uniform grid, 4-point cubic
    interpolation (3-point parabola at the end intervals)."""
    v = values
    mids = np.empty((len(v) - 1,) + v.shape[1:])
    if len(v) >= 4:
        mids[1:-1] = (-v[:-3] + 9.0 * v[1:-2] + 9.0 * v[2:-1] - v[3:]) / 16.0
        mids[0] = (3.0 * v[0] + 6.0 * v[1] - v[2]) / 8.0
        mids[-1] = (3.0 * v[-1] + 6.0 * v[-2] - v[-3]) / 8.0
    else:
        mids[:] = 0.5 * (v[:-1] + v[1:])
    return mids


def _integrate_row(chart, metric, ts, xs, mus, dmu_de, b0):
    """RK4 for d beta/dt = d alpha/d eps + (beta, alpha)-commutator term,
    sampling the row coefficients at interval midpoints by interpolation."""
    xm = _midpoint_interp(xs)
    mum = _midpoint_interp(mus)
    dm = _midpoint_interp(dmu_de)
    gam_nodes = christoffel(chart, metric, xs, with_derivative=False).gamma
    gam_mids = christoffel(chart, metric, xm, with_derivative=False).gamma

    def rhs(mu, gam, dmu, b):
        comm = np.einsum("i,j,iju->u", b, mu, gam) - np.einsum(
            "i,j,iju->u", mu, b, gam
        )
        return dmu + comm

    beta = np.empty_like(mus)
    beta[0] = b0
    for k in range(len(ts) - 1):
        h = ts[k + 1] - ts[k]
        b = beta[k]
        k1 = rhs(mus[k], gam_nodes[k], dmu_de[k], b)
        k2 = rhs(mum[k], gam_mids[k], dm[k], b + 0.5 * h * k1)
        k3 = rhs(mum[k], gam_mids[k], dm[k], b + 0.5 * h * k2)
        k4 = rhs(mus[k + 1], gam_nodes[k + 1], dmu_de[k + 1], b + h * k3)
        beta[k + 1] = b + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return beta


def is_fixed_endpoint_homotopy(chart, metric, grid: VariationGrid, tol=HOMOTOPY_TOL):
    """Solve the transverse family with zero initial rows and test whether
    it also vanishes at the far end (the homotopy criterion).

    Returns (bool, max |beta(eps, t1)|)."""
    E = len(grid.eps)
    solved = solve_transverse(chart, metric, grid, np.zeros((E, _rank(grid))))
    end = float(np.max(np.abs(solved.beta[:, -1, :])))
    return end < tol, end


def curvature_commutation_residual(chart, metric, grid: VariationGrid, s):
    """Residual of the mixed-derivative commutation identity

        nabla_t nabla_eps s - nabla_eps nabla_t s
            = R(alpha, beta) s + nabla_{Delta(alpha,beta)} s

    for a fiber mesh s, everything by centered differences; max norm over
    the doubly-interior nodes.
    """
    _check_mesh(grid)
    if grid.beta is None:
        raise ValueError("commutation check needs a transverse family")
    s = np.asarray(s, dtype=float)
    gamma = _gamma_on_mesh(chart, metric, grid)

    def nabla_t(f):
        return np.gradient(f, grid.ts, axis=1, edge_order=2) + np.einsum(
            "eti,etj,etiju->etu", grid.mu, f, gamma
        )

    def nabla_e(f):
        return np.gradient(f, grid.eps, axis=0, edge_order=2) + np.einsum(
            "eti,etj,etiju->etu", grid.beta, f, gamma
        )

    lhs = nabla_t(nabla_e(s)) - nabla_e(nabla_t(s))
    R = curvature(chart, metric, grid.x)
    d = delta(chart, metric, grid)
    rhs = np.einsum("etijkl,eti,etj,etk->etl", R, grid.mu, grid.beta, s) + np.einsum(
        "eti,etj,etiju->etu", d, s, gamma
    )
    core = (lhs - rhs)[2:-2, 2:-2]
    return float(np.max(np.abs(core)))


def row_energies(chart, metric, grid: VariationGrid):
    """E(eps) = 1/2 int <alpha, alpha> dt by the trapezoid rule, per row."""
    inner = fiber_inner(metric, grid.x, grid.mu, grid.mu)
    return 0.5 * _trapz(inner, grid.ts, axis=1)


def first_variation_residual(chart, metric, grid: VariationGrid):
    """|dE/deps - first-variation right side| at the middle eps-row.

    The left side is the centered difference of the row energies; the
    right side is boundary pairing minus the two trapezoid integrals.
    """
    _check_mesh(grid)
    if grid.beta is None:
        raise ValueError("first variation needs a transverse family")
    energies = row_energies(chart, metric, grid)
    dE = np.gradient(energies, grid.eps, edge_order=2)
    mid = len(grid.eps) // 2

    gamma = _gamma_on_mesh(chart, metric, grid)
    Dt_alpha = np.gradient(grid.mu, grid.ts, axis=1, edge_order=2) + np.einsum(
        "eti,etj,etiju->etu", grid.mu, grid.mu, gamma
    )
    G, _, _ = _metric_on_mesh(chart, metric, grid)
    pair_beta_alpha = np.einsum("etu,etuv,etv->et", grid.beta, G, grid.mu)
    pair_beta_Dt = np.einsum("etu,etuv,etv->et", grid.beta, G, Dt_alpha)
    d = delta(chart, metric, grid)
    pair_delta_alpha = np.einsum("etu,etuv,etv->et", d, G, grid.mu)

    boundary = pair_beta_alpha[mid, -1] - pair_beta_alpha[mid, 0]
    rhs = (
        boundary
        - _trapz(pair_beta_Dt[mid], grid.ts)
        - _trapz(pair_delta_alpha[mid], grid.ts)
    )
    return float(abs(dE[mid] - rhs))


def _metric_on_mesh(chart, metric, grid):
    return metric.eval(grid.x)


# ---------------------------------------------------------------------------
# Constructors for standard families
# ---------------------------------------------------------------------------


def make_geodesic_pencil(chart, metric, a: AVector, u, eps_values, t_span=(0.0, 1.0), step=1e-3):
    """The family of geodesics from (x, a + eps*u), sharing one time grid."""
    eps_values = np.asarray(eps_values, dtype=float)
    paths = [
        geodesic_integrate(chart, metric, AVector(a.x, a.mu + e * np.asarray(u)), t_span, step)
        for e in eps_values
    ]
    ts = paths[0].ts
    x = np.stack([p.xs for p in paths])
    mu = np.stack([p.mus for p in paths])
    return VariationGrid(eps=eps_values, ts=ts, x=x, mu=mu)


@dataclass(eq=False)
class PencilReport:
    ts: np.ndarray
    pencil_beta: np.ndarray
    ode_beta: np.ndarray

    @property
    def deviation(self):
        return float(np.max(np.abs(self.pencil_beta - self.ode_beta)))


def jacobi_from_geodesic_pencil(
    chart, metric, a: AVector, u, t_span=(0.0, 1.0), step=1e-3, eps_step=1e-3
):
    """Compare the transverse family of a geodesic pencil against the
    Jacobi equation solved as an ODE.

    The pencil alpha(eps, t) flows a + eps*u; the transverse family with
    zero initial rows restricted to eps = 0 is a Jacobi section with
    beta(0) = 0 and first derivative u, matched against `jacobi_solve`.
    """
    u = np.asarray(u, dtype=float)
    eps_values = eps_step * np.arange(-2, 3)
    grid = make_geodesic_pencil(chart, metric, a, u, eps_values, t_span, step)
    E = len(eps_values)
    solved = solve_transverse(chart, metric, grid, np.zeros((E, chart.r)))
    mid = E // 2
    mid_path = grid.row_path(mid)
    ode = jacobi_solve(chart, metric, mid_path, np.zeros(chart.r), u)
    return PencilReport(
        ts=grid.ts, pencil_beta=solved.beta[mid], ode_beta=ode.values
    )


def make_fixed_endpoint_homotopy(
    chart,
    metric,
    alpha0: APath,
    direction,
    amplitude=0.05,
    eps_values=(-2e-2, -1e-2, 0.0, 1e-2, 2e-2),
    substeps=4,
):
    """Flow a given A-path into a fixed-endpoint family.

    The transverse family is prescribed analytically as
    beta(eps, t) = amplitude * sin(pi * s(t)) * direction (s the normalized
    time), which vanishes at both ends, and the family itself is obtained
    by integrating the zero-defect flow in eps; every row then satisfies
    the A-path constraint and the family is a fixed-endpoint homotopy.
    Returns a VariationGrid with beta filled in.
    """
    direction = np.asarray(direction, dtype=float)
    eps_values = np.asarray(eps_values, dtype=float)
    ts = alpha0.ts
    snorm = (ts - ts[0]) / (ts[-1] - ts[0])
    profile = np.sin(np.pi * snorm)  # (N,)
    dprofile = (np.pi / (ts[-1] - ts[0])) * np.cos(np.pi * snorm)

    beta_row = amplitude * profile[:, None] * direction[None, :]
    dbeta_dt = amplitude * dprofile[:, None] * direction[None, :]

    def flow_rhs(X, M):
        """d/deps of (base row, fiber row); pointwise in t."""
        B, _ = chart.eval_anchor(X)
        gamma = christoffel(chart, metric, X, with_derivative=False).gamma
        beta = beta_row
        dX = np.einsum("ts,tsi->ti", beta, B)
        comm = np.einsum("ti,tj,tiju->tu", M, beta, gamma) - np.einsum(
            "ti,tj,tiju->tu", beta, M, gamma
        )
        dM = dbeta_dt + comm
        return dX, dM

    def flow(X0, M0, e_from, e_to):
        nsub = max(1, substeps)
        h = (e_to - e_from) / nsub
        X, M = X0.copy(), M0.copy()
        for _ in range(nsub):
            k1x, k1m = flow_rhs(X, M)
            k2x, k2m = flow_rhs(X + 0.5 * h * k1x, M + 0.5 * h * k1m)
            k3x, k3m = flow_rhs(X + 0.5 * h * k2x, M + 0.5 * h * k2m)
            k4x, k4m = flow_rhs(X + h * k3x, M + h * k3m)
            X = X + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
            M = M + (h / 6.0) * (k1m + 2 * k2m + 2 * k3m + k4m)
        return X, M

    order = np.argsort(eps_values)
    rows_x = {}
    rows_mu = {}
    # integrate outward from eps = 0 in both directions
    zero_idx = int(np.argmin(np.abs(eps_values)))
    rows_x[zero_idx] = alpha0.xs.copy()
    rows_mu[zero_idx] = alpha0.mus.copy()
    pos = [i for i in order if eps_values[i] > eps_values[zero_idx]]
    neg = [i for i in order[::-1] if eps_values[i] < eps_values[zero_idx]]
    X, M, e_cur = alpha0.xs, alpha0.mus, eps_values[zero_idx]
    for i in pos:
        X, M = flow(X, M, e_cur, eps_values[i])
        e_cur = eps_values[i]
        rows_x[i], rows_mu[i] = X, M
    X, M, e_cur = alpha0.xs, alpha0.mus, eps_values[zero_idx]
    for i in neg:
        X, M = flow(X, M, e_cur, eps_values[i])
        e_cur = eps_values[i]
        rows_x[i], rows_mu[i] = X, M

    E = len(eps_values)
    xarr = np.stack([rows_x[i] for i in range(E)])
    muarr = np.stack([rows_mu[i] for i in range(E)])
    beta = np.broadcast_to(beta_row, (E,) + alpha0.mus.shape).copy()
    return VariationGrid(eps=eps_values, ts=ts, x=xarr, mu=muarr, beta=beta)
