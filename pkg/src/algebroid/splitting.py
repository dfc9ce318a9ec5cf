"""Vertical/horizontal splitting and the submersion-type tensors.

At a point x the fiber splits as ker(#_x) + its g-orthogonal complement.
The kernel is computed from an SVD of the anchor matrix with a relative
rank threshold; both factors are then g-orthonormalized.  The two
fundamental tensors are evaluated pointwise from constant-coefficient
extensions of frame vectors,

    T_a b = (D_{a^v} b^v)^h + (D_{a^v} b^h)^v,
    H_a b = (D_{a^h} b^v)^h + (D_{a^h} b^h)^v,

which is well defined because both expressions are tensorial in a and b.
On top of the splitting sit the connector of the horizontal-lift
distribution, the Sasaki metric, the induced leaf metric, the divergence
of the geodesic field (trace of the vertical adjoint plus the mean
curvature pairing) and the three submersion curvature identities.

The Sasaki metric and the curvature identities are restricted to
transitive charts (anchor rank equals the base dimension) and to
Lie-algebra charts (zero anchor); mixed-rank charts would need leaf
coordinates the chart does not carry.  The divergence formula itself is
pointwise and has no such restriction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charts import AVector
from .metric import christoffel, curvature, sectional_curvature

__all__ = [
    "SplitFrame",
    "OneillTensors",
    "split",
    "oneill_tensors",
    "oneill_T_apply",
    "oneill_H_apply",
    "divergence_terms",
    "divergence_XE",
    "divergence_fd_lie_algebra",
    "horizontal_lift",
    "connector",
    "sasaki_metric",
    "leaf_metric",
    "leaf_metric_matrix",
    "oneill_curvature_check",
    "oneill_identity_residuals",
]

RANK_RTOL = 1e-10
KERNEL_TOL = 1e-9


class SplitError(ValueError):
    """Raised when a requested operation is not defined for the chart/point."""


@dataclass(eq=False)
class SplitFrame:
    """g-orthonormal bases of ker(#_x) and of its g-orthogonal complement.

    `vertical` has shape (r - q, r), `horizontal` (q, r); rows are fiber
    vectors.  `warning` flags a singular value within a factor 10 of the
    rank threshold (the rank may be unstable there).
    """

    x: np.ndarray
    vertical: np.ndarray
    horizontal: np.ndarray
    G: np.ndarray
    warning: bool = False

    @property
    def q(self):
        return self.horizontal.shape[0]

    @property
    def vertical_dim(self):
        return self.vertical.shape[0]

    def project_vertical(self, mu):
        if self.vertical_dim == 0:
            return np.zeros_like(mu)
        coef = self.vertical @ (self.G @ mu)
        return coef @ self.vertical

    def project_horizontal(self, mu):
        if self.q == 0:
            return np.zeros_like(mu)
        coef = self.horizontal @ (self.G @ mu)
        return coef @ self.horizontal

    def inner(self, u, v):
        return float(u @ self.G @ v)


def _g_orthonormalize(rows, G):
    """Gram-Schmidt with respect to G; rows must be linearly independent."""
    out = []
    for v in rows:
        w = v.copy()
        for u in out:
            w = w - (u @ G @ w) * u
        norm = np.sqrt(w @ G @ w)
        out.append(w / norm)
    return np.array(out) if out else np.zeros((0, len(G)))


def split(chart, metric, x) -> SplitFrame:
    """Pointwise orthogonal decomposition of the fiber at x."""
    x = np.asarray(x, dtype=float)
    B, _ = chart.eval_anchor(x)
    G, _, _ = metric.eval(x)
    A = B.T  # (n, r): mu -> A mu are the tangent components of #(mu)
    U, sigma, Vt = np.linalg.svd(A)
    smax = sigma[0] if len(sigma) else 0.0
    warning = False
    if smax == 0.0:
        q = 0
    else:
        thresh = RANK_RTOL * smax
        q = int(np.sum(sigma > thresh))
        near = (sigma > thresh / 10.0) & (sigma < thresh * 10.0)
        warning = bool(np.any(near))
    vertical_raw = Vt[q:]  # rows span ker(A)
    row_raw = Vt[:q]
    vertical = _g_orthonormalize(vertical_raw, G)
    # complement: remove the vertical g-components, then orthonormalize
    horiz = []
    for v in row_raw:
        w = v.copy()
        for u in vertical:
            w = w - (u @ G @ w) * u
        horiz.append(w)
    horizontal = _g_orthonormalize(horiz, G) if horiz else np.zeros((0, chart.r))
    return SplitFrame(x=x, vertical=vertical, horizontal=horizontal, G=G, warning=warning)


# ---------------------------------------------------------------------------
# O'Neill tensors
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class OneillTensors:
    """Component arrays of T and H on the split frame.

    Frame order is vertical rows first, then horizontal rows; `T[i, j, k]`
    is the k-th frame component of T applied to frame vectors (i, j).
    """

    frame: SplitFrame
    T: np.ndarray
    H: np.ndarray


def _pointwise_D(gamma, a, b):
    """Covariant derivative of constant extensions: (D_a b)^u = a^s b^t G_st^u."""
    return np.einsum("...s,...t,...stu->...u", a, b, gamma)


def oneill_T_apply(chart, metric, x, a, b, frame=None, gamma=None):
    """T_a b for coordinate fiber vectors a, b at x."""
    frame = frame or split(chart, metric, x)
    if gamma is None:
        gamma = christoffel(chart, metric, x, with_derivative=False).gamma
    av = frame.project_vertical(np.asarray(a, float))
    bv = frame.project_vertical(np.asarray(b, float))
    bh = frame.project_horizontal(np.asarray(b, float))
    return frame.project_horizontal(_pointwise_D(gamma, av, bv)) + frame.project_vertical(
        _pointwise_D(gamma, av, bh)
    )


def oneill_H_apply(chart, metric, x, a, b, frame=None, gamma=None):
    """H_a b for coordinate fiber vectors a, b at x."""
    frame = frame or split(chart, metric, x)
    if gamma is None:
        gamma = christoffel(chart, metric, x, with_derivative=False).gamma
    ah = frame.project_horizontal(np.asarray(a, float))
    bv = frame.project_vertical(np.asarray(b, float))
    bh = frame.project_horizontal(np.asarray(b, float))
    return frame.project_horizontal(_pointwise_D(gamma, ah, bv)) + frame.project_vertical(
        _pointwise_D(gamma, ah, bh)
    )


def oneill_tensors(chart, metric, x) -> OneillTensors:
    """T and H as component arrays on the split frame at x."""
    frame = split(chart, metric, x)
    gamma = christoffel(chart, metric, x, with_derivative=False).gamma
    basis = np.vstack([frame.vertical, frame.horizontal])
    r = chart.r
    T = np.zeros((r, r, r))
    H = np.zeros((r, r, r))
    for i in range(r):
        for j in range(r):
            Tv = oneill_T_apply(chart, metric, x, basis[i], basis[j], frame, gamma)
            Hv = oneill_H_apply(chart, metric, x, basis[i], basis[j], frame, gamma)
            T[i, j] = basis @ (frame.G @ Tv)
            H[i, j] = basis @ (frame.G @ Hv)
    return OneillTensors(frame=frame, T=T, H=H)


def oneill_identity_residuals(chart, metric, x):
    """Residuals of the algebraic identities of T and H at x.

    Checked on the frame basis (extended bilinearly this covers all
    vectors).  Returns a dict name -> residual.
    """
    frame = split(chart, metric, x)
    gamma = christoffel(chart, metric, x, with_derivative=False).gamma
    C, _ = chart.eval_bracket(x)
    G = frame.G
    V, Hb = frame.vertical, frame.horizontal

    def T(a, b):
        return oneill_T_apply(chart, metric, x, a, b, frame, gamma)

    def Hten(a, b):
        return oneill_H_apply(chart, metric, x, a, b, frame, gamma)

    res = {k: 0.0 for k in (
        "T_horizontal_slot", "H_vertical_slot", "T_vertical_symmetry",
        "H_horizontal_antisymmetry", "T_skew_adjoint", "H_skew_adjoint",
        "H_half_bracket", "T_vertical_D_part",
    )}

    basis = np.vstack([V, Hb])
    for h in Hb:
        for b in basis:
            res["T_horizontal_slot"] = max(res["T_horizontal_slot"], float(np.max(np.abs(T(h, b)))))
    for v in V:
        for b in basis:
            res["H_vertical_slot"] = max(res["H_vertical_slot"], float(np.max(np.abs(Hten(v, b)))))
    for u in V:
        for v in V:
            res["T_vertical_symmetry"] = max(
                res["T_vertical_symmetry"], float(np.max(np.abs(T(u, v) - T(v, u))))
            )
            res["T_vertical_D_part"] = max(
                res["T_vertical_D_part"],
                float(np.max(np.abs(frame.project_horizontal(_pointwise_D(gamma, u, v)) - T(u, v)))),
            )
    for h1 in Hb:
        for h2 in Hb:
            res["H_horizontal_antisymmetry"] = max(
                res["H_horizontal_antisymmetry"],
                float(np.max(np.abs(Hten(h1, h2) + Hten(h2, h1)))),
            )
            half_bracket = 0.5 * frame.project_vertical(
                np.einsum("s,t,stu->u", h1, h2, C)
            )
            res["H_half_bracket"] = max(
                res["H_half_bracket"], float(np.max(np.abs(Hten(h1, h2) - half_bracket)))
            )
    for u in V:
        for v in V:
            for h in Hb:
                res["T_skew_adjoint"] = max(
                    res["T_skew_adjoint"],
                    abs(float(T(u, v) @ G @ h) + float(T(u, h) @ G @ v)),
                )
    for h1 in Hb:
        for h2 in Hb:
            for v in V:
                res["H_skew_adjoint"] = max(
                    res["H_skew_adjoint"],
                    abs(float(Hten(h1, h2) @ G @ v) + float(Hten(h1, v) @ G @ h2)),
                )
    return res


# ---------------------------------------------------------------------------
# Divergence of the geodesic field
# ---------------------------------------------------------------------------


def divergence_terms(chart, metric, v: AVector):
    """(trace term, mean-curvature term) of div X_E at v.

    The trace term is Tr of u -> [a^v, u] on the vertical space; the
    second is <a^h, N> with N the sum of T over an orthonormal vertical
    frame.  Constant extensions of kernel vectors have their bracket in
    the kernel again; this is asserted.
    """
    x = np.asarray(v.x, float)
    mu = np.asarray(v.mu, float)
    frame = split(chart, metric, x)
    gamma = christoffel(chart, metric, x, with_derivative=False).gamma
    C, _ = chart.eval_bracket(x)
    B, _ = chart.eval_anchor(x)
    av = frame.project_vertical(mu)
    ah = frame.project_horizontal(mu)

    trace = 0.0
    for vk in frame.vertical:
        w = np.einsum("s,t,stu->u", av, vk, C)
        push = np.einsum("u,ui->i", w, B)
        if np.max(np.abs(push)) > KERNEL_TOL:
            raise SplitError(
                "bracket of kernel vectors left the kernel "
                f"(anchor norm {float(np.max(np.abs(push))):.3e}); "
                "chart data violates the algebroid axioms here"
            )
        trace += float(w @ frame.G @ vk)

    N = np.zeros(chart.r)
    for vk in frame.vertical:
        N = N + oneill_T_apply(chart, metric, x, vk, vk, frame, gamma)
    mean_curv = float(ah @ frame.G @ N)
    return trace, mean_curv


def divergence_XE(chart, metric, v: AVector):
    """div X_E(v) with respect to the Sasaki metric (trace + pairing)."""
    tr, mc = divergence_terms(chart, metric, v)
    return tr + mc


def divergence_fd_lie_algebra(chart, metric, v: AVector, step=1e-5):
    """Euclidean divergence of the fiber field of X_E by central differences.

    Valid for zero-anchor charts, where the Sasaki metric is the flat
    fiber metric and the base does not move.
    """
    if not chart.has_zero_anchor:
        raise SplitError("finite-difference divergence oracle needs a zero anchor")
    from .paths import geodesic_rhs  # local import to keep modules acyclic

    x = np.asarray(v.x, float)
    mu = np.asarray(v.mu, float)
    total = 0.0
    for j in range(chart.r):
        e = np.zeros(chart.r)
        e[j] = step
        _, plus = geodesic_rhs(chart, metric, x, mu + e)
        _, minus = geodesic_rhs(chart, metric, x, mu - e)
        total += (plus[j] - minus[j]) / (2.0 * step)
    return float(total)


# ---------------------------------------------------------------------------
# Connector, Sasaki metric, leaf metric
# ---------------------------------------------------------------------------


def horizontal_lift(chart, metric, x, u, tol=KERNEL_TOL, frame=None):
    """The horizontal fiber vector alpha with #(alpha) = u; errors if u is
    not tangent to the leaf at x."""
    frame = frame or split(chart, metric, x)
    u = np.asarray(u, dtype=float)
    B, _ = chart.eval_anchor(x)
    A = B.T  # (n, r)
    if frame.q == 0:
        if np.max(np.abs(u), initial=0.0) > tol:
            raise SplitError("nonzero base vector over a zero-anchor chart")
        return np.zeros(chart.r)
    M = A @ frame.horizontal.T  # (n, q)
    coef, *_ = np.linalg.lstsq(M, u, rcond=None)
    residual = float(np.max(np.abs(M @ coef - u), initial=0.0))
    if residual > tol:
        raise SplitError(
            f"base vector not in the anchor image (residual {residual:.3e})"
        )
    return coef @ frame.horizontal


def connector(chart, metric, a: AVector, Z, frame=None):
    """K(Z) for a tangent vector Z = (dx, dmu) at the fiber point a.

    K(Z)^l = Z^l + sum_{i,j} alpha_i mu_j Gamma_{ij}^l with alpha the
    horizontal lift of the base component of Z.
    """
    dx, dmu = Z
    x = np.asarray(a.x, float)
    alpha = horizontal_lift(chart, metric, x, dx, frame=frame)
    gamma = christoffel(chart, metric, x, with_derivative=False).gamma
    return np.asarray(dmu, float) + np.einsum("i,j,ijl->l", alpha, a.mu, gamma)


def _require_sasaki_support(chart, metric, x):
    frame = split(chart, metric, x)
    if frame.q not in (0, chart.n):
        raise SplitError(
            "Sasaki-metric operations support transitive charts and "
            f"zero-anchor charts only (anchor rank {frame.q} of base dim {chart.n})"
        )
    return frame


def sasaki_metric(chart, metric, a: AVector, Z1, Z2):
    """g_Sasaki(Z1, Z2) = <dp Z1, dp Z2>_leaf + <K(Z1), K(Z2)>."""
    x = np.asarray(a.x, float)
    frame = _require_sasaki_support(chart, metric, x)
    K1 = connector(chart, metric, a, Z1, frame=frame)
    K2 = connector(chart, metric, a, Z2, frame=frame)
    fiber_part = float(K1 @ frame.G @ K2)
    if frame.q == 0:
        return fiber_part
    base_part = leaf_metric(chart, metric, x, Z1[0], Z2[0], frame=frame)
    return base_part + fiber_part


def leaf_metric(chart, metric, x, u, v, frame=None):
    """<u, v>_leaf: pull base vectors back through the restricted anchor."""
    frame = frame or split(chart, metric, x)
    lu = horizontal_lift(chart, metric, x, u, frame=frame)
    lv = horizontal_lift(chart, metric, x, v, frame=frame)
    return float(lu @ frame.G @ lv)


def leaf_metric_matrix(chart, metric, x, frame=None):
    """Matrix of the induced leaf metric on a transitive chart."""
    frame = frame or split(chart, metric, x)
    if frame.q != chart.n:
        raise SplitError("leaf metric matrix needs a transitive chart")
    lifts = np.column_stack(
        [horizontal_lift(chart, metric, x, e, frame=frame) for e in np.eye(chart.n)]
    )  # (r, n)
    return lifts.T @ frame.G @ lifts


# ---------------------------------------------------------------------------
# Submersion curvature identities
# ---------------------------------------------------------------------------


def _vertical_algebra_curvature(chart, metric, frame):
    """Sectional curvature of the kernel Lie algebra in its orthonormal frame.

    Constant Koszul product 2<Duv,w> = <[u,v],w> + <[w,u],v> + <[w,v],u>,
    then the algebraic curvature of that product.  Returns Khat[i, j].
    """
    V = frame.vertical
    p = V.shape[0]
    C, _ = chart.eval_bracket(frame.x)
    c = np.einsum("is,jt,stu,ku->ijk", V, V, C, V @ frame.G.T)
    # c[i,j,k] = <[v_i, v_j], v_k>; the frame is g-orthonormal
    gh = 0.5 * (c + np.einsum("kij->ijk", c) + np.einsum("kji->ijk", c))
    # gh[i,j,k] = coefficient of v_k in Dhat_{v_i} v_j
    Rhat = (
        np.einsum("jkm,iml->ijkl", gh, gh)
        - np.einsum("ikm,jml->ijkl", gh, gh)
        - np.einsum("ijm,mkl->ijkl", c, gh)
    )
    Khat = np.zeros((p, p))
    for i in range(p):
        for j in range(p):
            if i != j:
                Khat[i, j] = -Rhat[i, j, i, j]
    return Khat


def _classical_leaf_sectional(chart, metric, x, u, v, fd_step=1e-4):
    """Sectional curvature of the induced leaf metric at x, classical route.

    The leaf metric matrix field is differentiated by central differences
    (first and second order); curvature then follows the classical
    coordinate formulas.  Independent of the connection code above.
    """
    n = chart.n
    x = np.asarray(x, float)

    def GL(y):
        return leaf_metric_matrix(chart, metric, y)

    G0 = GL(x)
    dG = np.zeros((n, n, n))  # dG[i,j,m]
    d2G = np.zeros((n, n, n, n))  # d2G[i,j,m1,m2]
    h = fd_step
    for m in range(n):
        em = np.eye(n)[m] * h
        Gp, Gm = GL(x + em), GL(x - em)
        dG[:, :, m] = (Gp - Gm) / (2 * h)
        d2G[:, :, m, m] = (Gp - 2 * G0 + Gm) / (h * h)
    for m1 in range(n):
        for m2 in range(m1 + 1, n):
            e1 = np.eye(n)[m1] * h
            e2 = np.eye(n)[m2] * h
            mixed = (
                GL(x + e1 + e2) - GL(x + e1 - e2) - GL(x - e1 + e2) + GL(x - e1 - e2)
            ) / (4 * h * h)
            d2G[:, :, m1, m2] = mixed
            d2G[:, :, m2, m1] = mixed
    Gi = np.linalg.inv(G0)
    dGi = -np.einsum("la,abm,bk->lkm", Gi, dG, Gi)
    # Gamma[i,j,k] = 1/2 G^{kl} (d_i G_{jl} + d_j G_{il} - d_l G_{ij})
    A = np.einsum("jli->ijl", dG) + np.einsum("ilj->ijl", dG) - dG
    dA = (
        np.einsum("jlim->ijlm", d2G) + np.einsum("iljm->ijlm", d2G) - d2G
    )
    Gam = 0.5 * np.einsum("ijl,lk->ijk", A, Gi)
    dGam = 0.5 * (
        np.einsum("ijlm,lk->ijkm", dA, Gi) + np.einsum("ijl,lkm->ijkm", A, dGi)
    )
    R = (
        np.einsum("jkli->ijkl", dGam)
        - np.einsum("iklj->ijkl", dGam)
        + np.einsum("jkm,iml->ijkl", Gam, Gam)
        - np.einsum("ikm,jml->ijkl", Gam, Gam)
    )
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    uu = u @ G0 @ u
    vv = v @ G0 @ v
    uv = u @ G0 @ v
    gram = uu * vv - uv * uv
    ruvuv = np.einsum("ijkl,i,j,k,lm,m->", R, u, v, u, G0, v)
    return float(-ruvuv / gram)


@dataclass
class CurvatureCheckResult:
    """Residuals of the three submersion curvature identities (None = n/a)."""

    vertical: float | None
    mixed: float | None
    horizontal: float | None

    def max_residual(self):
        vals = [v for v in (self.vertical, self.mixed, self.horizontal) if v is not None]
        return max(vals) if vals else 0.0


def _covariant_T_derivative(chart, metric, x, frame, a, b, c, fd_step=1e-5):
    """((D_a T)_b c at x: derivative of the T field minus connection terms."""
    gamma = christoffel(chart, metric, x, with_derivative=False).gamma
    B, _ = chart.eval_anchor(x)
    base_dir = np.einsum("s,si->i", a, B)

    def Tfield(y):
        return oneill_T_apply(chart, metric, y, b, c)

    n = chart.n
    dF = np.zeros((chart.r, n))
    for m in range(n):
        em = np.eye(n)[m] * fd_step
        dF[:, m] = (Tfield(x + em) - Tfield(x - em)) / (2 * fd_step)
    F0 = oneill_T_apply(chart, metric, x, b, c, frame, gamma)
    DaF = dF @ base_dir + np.einsum("s,t,stu->u", a, F0, gamma)
    Dab = _pointwise_D(gamma, a, b)
    Dac = _pointwise_D(gamma, a, c)
    return (
        DaF
        - oneill_T_apply(chart, metric, x, Dab, c, frame, gamma)
        - oneill_T_apply(chart, metric, x, b, Dac, frame, gamma)
    )


def oneill_curvature_check(chart, metric, x, fd_step=1e-5) -> CurvatureCheckResult:
    """Residuals of the three curvature identities of the splitting at x.

    vertical pairs (needs >= 2 vertical directions):
        K(u,v) = Khat(u,v) + |T_u v|^2 - <T_u u, T_v v>
    mixed pairs (needs both factors):
        K(h,u) = <(D_h T)_u u, h> - |T_u h|^2 + |H_h u|^2
    horizontal pairs (needs a transitive chart with n >= 2):
        K(h1,h2) = Kleaf(#h1,#h2) - 3 |H_{h1} h2|^2
    """
    x = np.asarray(x, dtype=float)
    frame = split(chart, metric, x)
    gamma = christoffel(chart, metric, x, with_derivative=False).gamma
    G = frame.G
    V, Hb = frame.vertical, frame.horizontal
    p, q = V.shape[0], Hb.shape[0]

    vertical_res = None
    if p >= 2:
        Khat = _vertical_algebra_curvature(chart, metric, frame)
        vertical_res = 0.0
        for i in range(p):
            for j in range(i + 1, p):
                K = sectional_curvature(chart, metric, x, V[i], V[j])
                Tij = oneill_T_apply(chart, metric, x, V[i], V[j], frame, gamma)
                Tii = oneill_T_apply(chart, metric, x, V[i], V[i], frame, gamma)
                Tjj = oneill_T_apply(chart, metric, x, V[j], V[j], frame, gamma)
                rhs = Khat[i, j] + Tij @ G @ Tij - Tii @ G @ Tjj
                vertical_res = max(vertical_res, abs(K - rhs))

    mixed_res = None
    if p >= 1 and q >= 1:
        mixed_res = 0.0
        for h in Hb:
            for u in V:
                K = sectional_curvature(chart, metric, x, h, u)
                DT = _covariant_T_derivative(chart, metric, x, frame, h, u, u, fd_step)
                Tuh = oneill_T_apply(chart, metric, x, u, h, frame, gamma)
                Hhu = oneill_H_apply(chart, metric, x, h, u, frame, gamma)
                rhs = float(DT @ G @ h) - Tuh @ G @ Tuh + Hhu @ G @ Hhu
                mixed_res = max(mixed_res, abs(K - rhs))

    horizontal_res = None
    if q == chart.n and q >= 2:
        horizontal_res = 0.0
        B, _ = chart.eval_anchor(x)
        for i in range(q):
            for j in range(i + 1, q):
                h1, h2 = Hb[i], Hb[j]
                K = sectional_curvature(chart, metric, x, h1, h2)
                Kleaf = _classical_leaf_sectional(
                    chart, metric, x, h1 @ B, h2 @ B
                )
                Hij = oneill_H_apply(chart, metric, x, h1, h2, frame, gamma)
                rhs = Kleaf - 3.0 * float(Hij @ G @ Hij)
                horizontal_res = max(horizontal_res, abs(K - rhs))

    return CurvatureCheckResult(vertical_res, mixed_res, horizontal_res)
