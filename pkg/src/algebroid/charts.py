"""Lie algebroid structure data over a single chart.

A chart is the data of a base dimension n, a fiber rank r, an anchor matrix
b^{si}(x) and bracket coefficients C_{st}^u(x), all analytic expressions in
the chart variables.  Array conventions used throughout the package
(leading axes are evaluation-point batches):

==============  =======================  =========================
quantity        shape                    meaning
==============  =======================  =========================
``B``           (..., r, n)              ``B[s, i] = b^{si}``
``dB``          (..., r, n, n)           ``dB[s, i, m] = d b^{si} / d x_m``
``C``           (..., r, r, r)           ``C[s, t, u] = C_{st}^u``
``dC``          (..., r, r, r, n)        ``dC[s, t, u, m] = d C_{st}^u / d x_m``
==============  =======================  =========================

Bracket coefficients are stored for index pairs s < t only and mirrored
with a sign on evaluation, so the antisymmetry C_{st}^u = -C_{ts}^u holds
to the bit.  A Lie algebra is encoded as a chart with n = 1 and zero
anchor; every field is then constant and base paths degenerate to points.

Charts are immutable after construction and all operations here are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .expressions import Expression, parse
from .sampling import sample_box

__all__ = [
    "AlgebroidChart",
    "AVector",
    "SectionField",
    "ValidationCheck",
    "ValidationReport",
    "anchor_apply",
    "bracket_sections",
    "validate",
]


class ChartError(ValueError):
    """Structural problems in chart data."""


def _as_expression(obj, n):
    if isinstance(obj, Expression):
        if obj.n != n:
            raise ChartError(f"expression arity {obj.n} does not match chart n={n}")
        return obj
    return parse(str(obj), n)


@dataclass(frozen=True, eq=False)
class AlgebroidChart:
    """Structure functions of a Lie algebroid over one chart.

    Parameters
    ----------
    n, r : int
        Base dimension and fiber rank (both >= 1).
    b : sequence of r rows of n expressions
        Anchor matrix; entry (s, i) is b^{si} in #a_s = sum_i b^{si} d/dx_i.
    c_upper : dict
        Bracket coefficients, keyed by 1-based (s, t, u) with s < t; values
        are expressions (or strings).  Omitted entries are zero.
    domain : sequence of n (lo, hi) pairs
        Box used for sampling and for bounds checks during integration.
    """

    n: int
    r: int
    b: tuple
    c_upper: dict
    domain: np.ndarray

    def __init__(self, n, r, b, c_upper=None, domain=None):
        if n < 1 or r < 1:
            raise ChartError("need n >= 1 and r >= 1")
        rows = []
        if len(b) != r:
            raise ChartError(f"anchor matrix must have {r} rows, got {len(b)}")
        for row in b:
            if len(row) != n:
                raise ChartError(f"anchor row must have {n} entries, got {len(row)}")
            rows.append(tuple(_as_expression(e, n) for e in row))
        entries = {}
        for key, value in (c_upper or {}).items():
            s, t, u = key
            if not (1 <= s <= r and 1 <= t <= r and 1 <= u <= r):
                raise ChartError(f"bracket index {key} out of range for rank {r}")
            if s >= t:
                raise ChartError(
                    f"bracket entry {key}: only s < t entries are accepted "
                    "(the rest is filled by antisymmetry)"
                )
            entries[(s - 1, t - 1, u - 1)] = _as_expression(value, n)
        if domain is None:
            domain = [(-1.0, 1.0)] * n
        dom = np.asarray(domain, dtype=float)
        if dom.shape != (n, 2) or np.any(dom[:, 0] >= dom[:, 1]):
            raise ChartError("domain must be n pairs lo < hi")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "b", tuple(rows))
        object.__setattr__(self, "c_upper", dict(entries))
        object.__setattr__(self, "domain", dom)

    # -- evaluation ---------------------------------------------------------

    def eval_anchor(self, points, order=0):
        """Anchor matrix B (..., r, n) and optionally dB (..., r, n, n)."""
        points = np.asarray(points, dtype=float)
        base = points.shape[:-1]
        B = np.zeros(base + (self.r, self.n))
        dB = np.zeros(base + (self.r, self.n, self.n)) if order >= 1 else None
        for s in range(self.r):
            for i in range(self.n):
                expr = self.b[s][i]
                if expr.is_constant:
                    B[..., s, i] = expr.root.value
                    continue
                t = expr.eval_raw(points, order=min(order, 1))
                B[..., s, i] = t.v
                if order >= 1:
                    dB[..., s, i, :] = t.g
        return B, dB

    def eval_bracket(self, points, order=0):
        """Coefficients C (..., r, r, r) and optionally dC (..., r, r, r, n)."""
        points = np.asarray(points, dtype=float)
        base = points.shape[:-1]
        C = np.zeros(base + (self.r, self.r, self.r))
        dC = np.zeros(base + (self.r, self.r, self.r, self.n)) if order >= 1 else None
        for (s, t, u), expr in self.c_upper.items():
            if expr.is_constant:
                C[..., s, t, u] = expr.root.value
                C[..., t, s, u] = -expr.root.value
                continue
            e = expr.eval_raw(points, order=min(order, 1))
            C[..., s, t, u] = e.v
            C[..., t, s, u] = -e.v
            if order >= 1:
                dC[..., s, t, u, :] = e.g
                dC[..., t, s, u, :] = -e.g
        return C, dC

    # -- convenience --------------------------------------------------------

    @property
    def has_zero_anchor(self):
        return all(
            e.is_constant and e.root.value == 0.0 for row in self.b for e in row
        )

    @property
    def is_constant(self):
        return all(e.is_constant for row in self.b for e in row) and all(
            e.is_constant for e in self.c_upper.values()
        )

    def contains(self, x, margin=0.0):
        x = np.asarray(x, dtype=float)
        return bool(
            np.all(x >= self.domain[:, 0] - margin)
            and np.all(x <= self.domain[:, 1] + margin)
        )

    def center(self):
        return 0.5 * (self.domain[:, 0] + self.domain[:, 1])


@dataclass(frozen=True, eq=False)
class AVector:
    """A fiber vector: base point x with fiber coordinates mu."""

    x: np.ndarray
    mu: np.ndarray

    def __init__(self, x, mu):
        object.__setattr__(self, "x", np.asarray(x, dtype=float))
        object.__setattr__(self, "mu", np.asarray(mu, dtype=float))


@dataclass(frozen=True, eq=False)
class SectionField:
    """A section x -> sum_s f_s(x) a_s given by r component expressions."""

    components: tuple
    n: int

    def __init__(self, components, n):
        comps = tuple(_as_expression(c, n) for c in components)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "n", n)

    @classmethod
    def constant(cls, vec, n):
        return cls([repr(float(v)) for v in vec], n)

    @classmethod
    def basis(cls, k, r, n):
        """The constant basis section a_k (1-based k)."""
        return cls.constant(np.eye(r)[k - 1], n)

    @property
    def r(self):
        return len(self.components)

    def eval_raw(self, points, order=0):
        points = np.asarray(points, dtype=float)
        base = points.shape[:-1]
        vals = np.empty(base + (self.r,))
        grads = np.empty(base + (self.r, self.n)) if order >= 1 else None
        for k, comp in enumerate(self.components):
            t = comp.eval_raw(points, order=min(order, 1))
            vals[..., k] = t.v
            if order >= 1:
                grads[..., k, :] = t.g
        return vals, grads

    def evaluate(self, x):
        return self.eval_raw(np.asarray(x, dtype=float))[0]


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def anchor_apply(chart, v: AVector):
    """Tangent components of #(v): t_i = sum_s mu_s b^{si}(x)."""
    B, _ = chart.eval_anchor(v.x)
    return np.einsum("s,si->i", v.mu, B)


def bracket_sections(chart, f: SectionField, g: SectionField, x):
    """Fiber coordinates of [f, g] at x.

    Expands the Leibniz rule over the basis:
    [f, g]^u = sum_{s,t} f_s g_t C_{st}^u + #(f)(g_u) - #(g)(f_u).
    """
    x = np.asarray(x, dtype=float)
    fv, fg = f.eval_raw(x, order=1)
    gv, gg = g.eval_raw(x, order=1)
    B, _ = chart.eval_anchor(x)
    C, _ = chart.eval_bracket(x)
    quad = np.einsum("s,t,stu->u", fv, gv, C)
    adv = np.einsum("s,si,ui->u", fv, B, gg) - np.einsum("s,si,ui->u", gv, B, fg)
    return quad + adv


# ---------------------------------------------------------------------------
# Axiom validation
# ---------------------------------------------------------------------------


@dataclass
class ValidationCheck:
    name: str
    indices: tuple
    residual: float
    tolerance: float
    point: np.ndarray

    @property
    def passed(self):
        return self.residual < self.tolerance


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def worst(self, name):
        rows = [c for c in self.checks if c.name == name]
        return max(rows, key=lambda c: c.residual) if rows else None

    def rows(self):
        for c in self.checks:
            yield (c.name, c.indices, c.residual, c.tolerance, c.passed, c.point)

    def to_csv(self, path):
        """One row per axiom at its worst sample point."""
        n = max((len(c.point) for c in self.checks), default=0)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            head = ["axiom", "i", "j", "k", "residual", "tolerance", "passed"]
            head += [f"x{i + 1}" for i in range(n)]
            fh.write(",".join(head) + "\n")
            for c in self.checks:
                idx = (list(c.indices) + [0, 0, 0])[:3]
                cells = [c.name, *[str(i) for i in idx]]
                cells += [f"{c.residual:.17g}", f"{c.tolerance:.17g}"]
                cells += ["true" if c.passed else "false"]
                cells += [f"{v:.17g}" for v in c.point]
                fh.write(",".join(cells) + "\n")


def _jacobiator(B, dC, C):
    """J[..., s, t, u, v] of the cyclic bracket identity on basis triples.

    One cyclic slot is [[a_s, a_t], a_u]^v expanded through the Leibniz
    rule: sum_m C_{st}^m C_{mu}^v - #(a_u)(C_{st}^v).
    """
    quad = np.einsum("...stm,...muv->...stuv", C, C)
    adv = np.einsum("...ui,...stvi->...stuv", B, dC)
    t0 = quad - adv
    t1 = np.einsum("...abcv->...cabv", t0)  # slot (t, u, s)
    t2 = np.einsum("...abcv->...bcav", t0)  # slot (u, s, t)
    return t0 + t1 + t2


def validate(chart, samples=200, seed=42, tol=1e-9) -> ValidationReport:
    """Check the algebroid axioms on quasi-random sample points.

    Reports the worst residual over the samples for (a) antisymmetry of C,
    (b) the anchor being a bracket morphism, (c) the Jacobi identity on
    basis triples.  The report passes iff every residual is below `tol`
    (antisymmetry is held to 1e-12; it is exact by construction here).
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    pts = sample_box(chart.domain, samples, seed)
    B, dB = chart.eval_anchor(pts, order=1)
    C, dC = chart.eval_bracket(pts, order=1)

    report = ValidationReport()

    anti = np.abs(C + np.swapaxes(C, -3, -2))
    k = np.unravel_index(np.argmax(anti), anti.shape)
    report.checks.append(
        ValidationCheck(
            "antisymmetry",
            tuple(int(i) + 1 for i in k[1:]),
            float(anti[k]),
            1e-12,
            pts[k[0]],
        )
    )

    # #[a_s,a_t] = [#a_s, #a_t] in coordinates
    push = np.einsum("...stu,...uk->...stk", C, B)
    lie = np.einsum("...sm,...tkm->...stk", B, dB) - np.einsum(
        "...tm,...skm->...stk", B, dB
    )
    am = np.abs(push - lie)
    k = np.unravel_index(np.argmax(am), am.shape)
    report.checks.append(
        ValidationCheck(
            "anchor_morphism",
            tuple(int(i) + 1 for i in k[1:]),
            float(am[k]),
            tol,
            pts[k[0]],
        )
    )

    jac = np.abs(_jacobiator(B, dC, C))
    # only strict triples s < t < u carry information
    mask = np.zeros(jac.shape[1:], dtype=bool)
    r = chart.r
    for s in range(r):
        for t in range(s + 1, r):
            for u in range(t + 1, r):
                mask[s, t, u, :] = True
    if mask.any():
        masked = np.where(mask, jac, 0.0)
        k = np.unravel_index(np.argmax(masked), masked.shape)
        residual = float(masked[k])
        indices = tuple(int(i) + 1 for i in k[1:])
        point = pts[k[0]]
    else:
        residual, indices, point = 0.0, (), pts[0]
    report.checks.append(ValidationCheck("jacobi", indices, residual, tol, point))
    return report
