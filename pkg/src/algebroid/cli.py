"""Command-line front end.

Verbs: validate, geodesic, exp, transport, jacobi, curvature, oneill,
divergence, hamcheck, variation-check, catalog.  Every verb loads a chart
(--chart FILE or --catalog NAME), writes `<verb>.csv` plus a `report.txt`
of key=value lines into --out, and exits 0 iff all its checks pass, 1 on
a check failure (including a domain exit, which keeps the partial CSV),
2 on input errors.

CSV files are byte-deterministic for identical argv + seed: all floats
are printed with 17 significant digits and row order is fixed.  The
wall-time line lives in the report only.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import catalog as _catalog
from .charts import AVector, validate as validate_chart
from .chartfile import ChartFileError, dumps_chart, load_chart_file
from .expressions import ExpressionError
from .hamiltonian import euler_identity_residual, hamiltonian_field
from .metric import (
    MetricError,
    SPD_EIGENVALUE_FLOOR,
    christoffel,
    curvature,
    fiber_inner,
    koszul_rhs,
)
from .paths import (
    DomainExitError,
    TOL_APATH_GENERATED,
    energy_along,
    dexp,
    exp_map,
    geodesic_integrate,
    geodesic_rhs,
    geodesic_residual,
    jacobi_solve,
    parallel_transport,
)
from .sampling import sample_box, sample_fiber
from .splitting import (
    SplitError,
    divergence_fd_lie_algebra,
    divergence_terms,
    oneill_curvature_check,
    oneill_identity_residuals,
    oneill_tensors,
    split,
)
from .variations import (
    anchor_of_grid,
    curvature_commutation_residual,
    delta,
    first_variation_residual,
    jacobi_from_geodesic_pencil,
    make_fixed_endpoint_homotopy,
    make_geodesic_pencil,
    row_energies,
    solve_transverse,
)

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INPUT_ERROR = 0, 1, 2


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


class Run:
    """Collects named checks and emits the key=value report."""

    def __init__(self, verb, args):
        self.verb = verb
        self.args = args
        self.checks = []  # (name, residual, tolerance, passed)
        self.extra = []
        self.t0 = time.perf_counter()

    def check(self, name, residual, tolerance):
        passed = bool(residual < tolerance)
        self.checks.append((name, float(residual), float(tolerance), passed))
        return passed

    def note(self, key, value):
        self.extra.append((key, value))

    @property
    def passed(self):
        return all(p for (_, _, _, p) in self.checks)

    def finish(self, out_dir):
        lines = [
            f"command={self.verb}",
            f"chart={self.args.catalog or self.args.chart}",
            f"seed={self.args.seed}",
        ]
        for key, value in self.extra:
            lines.append(f"{key}={_fmt(value)}")
        for name, residual, tol, passed in self.checks:
            lines.append(f"check.{name}.residual={_fmt(residual)}")
            lines.append(f"check.{name}.tolerance={_fmt(tol)}")
            lines.append(f"check.{name}.pass={_fmt(passed)}")
        lines.append(f"overall_pass={_fmt(self.passed)}")
        lines.append(f"wall_time_s={time.perf_counter() - self.t0:.3f}")
        text = "\n".join(lines) + "\n"
        (Path(out_dir) / "report.txt").write_text(text, encoding="utf-8")
        sys.stdout.write(text)
        return EXIT_OK if self.passed else EXIT_CHECK_FAILED


def _vector(text, length, name):
    try:
        values = np.array([float(p) for p in text.split(",")], dtype=float)
    except ValueError:
        raise SystemExit2(f"cannot parse {name} {text!r} as comma-separated reals")
    if len(values) != length:
        raise SystemExit2(f"{name} needs {length} components, got {len(values)}")
    return values


class SystemExit2(Exception):
    """Input error; translated to exit code 2."""


def _load(args):
    if bool(args.catalog) == bool(args.chart):
        raise SystemExit2("give exactly one of --catalog NAME or --chart FILE")
    if args.catalog:
        try:
            entry = _catalog.get(args.catalog)
        except KeyError as exc:
            raise SystemExit2(str(exc)) from exc
        return entry.chart, entry.metric
    try:
        return load_chart_file(args.chart)
    except FileNotFoundError as exc:
        raise SystemExit2(f"chart file not found: {args.chart}") from exc
    except (ChartFileError, ExpressionError) as exc:
        raise SystemExit2(f"malformed chart file: {exc}") from exc


def _default_state(chart, args, mu_scale=0.5):
    x = sample_box(chart.domain, 1, args.seed, shrink=0.3)[0]
    mu = sample_fiber(chart.r, 1, args.seed, scale=mu_scale)[0]
    return AVector(x, mu)


def _state_from_args(chart, args, mu_scale=0.5):
    state = _default_state(chart, args, mu_scale)
    x = _vector(args.x, chart.n, "--x") if args.x else state.x
    mu = _vector(args.mu, chart.r, "--mu") if args.mu else state.mu
    return AVector(x, mu)


def _xcols(n):
    return [f"x{i + 1}" for i in range(n)]


def _mucols(r, stem="mu"):
    return [f"{stem}{i + 1}" for i in range(r)]


# ---------------------------------------------------------------------------
# Verb implementations
# ---------------------------------------------------------------------------


def _cmd_validate(args, out):
    chart, metric = _load(args)
    run = Run("validate", args)
    run.note("samples", args.samples or 200)
    tol = args.tol or 1e-9
    report = validate_chart(chart, samples=args.samples or 200, seed=args.seed, tol=tol)
    rows = []
    for check in report.checks:
        run.check(check.name, check.residual, check.tolerance)
        idx = (list(check.indices) + [0, 0, 0])[:3]
        rows.append(
            [check.name, *idx, check.residual, check.tolerance, check.passed]
            + list(check.point)
        )
    margin = metric.spd_margin(chart, samples=args.samples or 200, seed=args.seed)
    run.note("metric_spd_margin", margin)
    run.check("metric_spd", max(0.0, SPD_EIGENVALUE_FLOOR - margin), 1e-15)
    rows.append(
        ["metric_spd", 0, 0, 0, max(0.0, SPD_EIGENVALUE_FLOOR - margin), 1e-15,
         margin > SPD_EIGENVALUE_FLOOR] + [0.0] * chart.n
    )
    write_csv(
        out / "validate.csv",
        ["axiom", "i", "j", "k", "residual", "tolerance", "passed"] + _xcols(chart.n),
        rows,
    )
    return run.finish(out)


def _cmd_geodesic(args, out):
    chart, metric = _load(args)
    run = Run("geodesic", args)
    start = _state_from_args(chart, args)
    step = args.step or 1e-3
    t1 = args.t1
    run.note("x0", ",".join(_fmt(v) for v in start.x))
    run.note("mu0", ",".join(_fmt(v) for v in start.mu))
    try:
        path = geodesic_integrate(chart, metric, start, (0.0, t1), step)
    except DomainExitError as exc:
        path = exc.path
        run.note("domain_exit_time", exc.time)
        run.check("stayed_in_domain", 1.0, 0.5)
    else:
        run.check("stayed_in_domain", 0.0, 0.5)
        E = energy_along(chart, metric, path)
        scale = abs(E[0]) if E[0] != 0 else 1.0
        run.check("energy_drift", float(np.max(np.abs(E - E[0])) / scale), args.tol or 1e-8)
        run.check("apath_residual", path.constraint_residual(chart), TOL_APATH_GENERATED)
    rows = [
        [t, *x, *mu] for t, x, mu in zip(path.ts, path.xs, path.mus)
    ]
    write_csv(out / "geodesic.csv", ["t"] + _xcols(chart.n) + _mucols(chart.r), rows)
    return run.finish(out)


def _cmd_exp(args, out):
    chart, metric = _load(args)
    run = Run("exp", args)
    start = _state_from_args(chart, args)
    try:
        image = exp_map(chart, metric, start.x, start.mu, step=args.step or 1e-3)
    except DomainExitError as exc:
        run.note("domain_exit_time", exc.time)
        run.check("stayed_in_domain", 1.0, 0.5)
        write_csv(out / "exp.csv", _xcols(chart.n) + _mucols(chart.r, "a"), [[*start.x, *start.mu]])
        return run.finish(out)
    run.check("stayed_in_domain", 0.0, 0.5)
    write_csv(
        out / "exp.csv",
        _xcols(chart.n) + _mucols(chart.r, "a") + [f"exp{i+1}" for i in range(chart.n)],
        [[*start.x, *start.mu, *image]],
    )
    return run.finish(out)


def _cmd_transport(args, out):
    chart, metric = _load(args)
    run = Run("transport", args)
    start = _state_from_args(chart, args)
    s0 = _vector(args.s0, chart.r, "--s0") if args.s0 else sample_fiber(chart.r, 1, args.seed + 7)[0]
    step = args.step or 1e-3
    try:
        path = geodesic_integrate(chart, metric, start, (0.0, args.t1), step)
    except DomainExitError as exc:
        run.note("domain_exit_time", exc.time)
        run.check("stayed_in_domain", 1.0, 0.5)
        write_csv(out / "transport.csv", ["t"] + _mucols(chart.r, "s"), [])
        return run.finish(out)
    run.check("stayed_in_domain", 0.0, 0.5)
    curve = parallel_transport(chart, metric, path, s0)
    norms = fiber_inner(metric, path.xs, curve.values, curve.values)
    scale = abs(norms[0]) if norms[0] != 0 else 1.0
    run.check("norm_drift", float(np.max(np.abs(norms - norms[0])) / scale), args.tol or 1e-8)
    back = parallel_transport(chart, metric, path.reversed(), curve.values[-1])
    run.check(
        "roundtrip_identity",
        float(np.max(np.abs(back.values[-1] - np.asarray(s0)))),
        args.tol or 1e-8,
    )
    rows = [[t, *s] for t, s in zip(curve.ts, curve.values)]
    write_csv(out / "transport.csv", ["t"] + _mucols(chart.r, "s"), rows)
    return run.finish(out)


def _cmd_jacobi(args, out):
    chart, metric = _load(args)
    run = Run("jacobi", args)
    start = _state_from_args(chart, args)
    step = args.step or 1e-3
    beta0 = _vector(args.beta0, chart.r, "--beta0") if args.beta0 else np.zeros(chart.r)
    dbeta0 = (
        _vector(args.dbeta0, chart.r, "--dbeta0")
        if args.dbeta0
        else sample_fiber(chart.r, 1, args.seed + 13)[0]
    )
    try:
        path = geodesic_integrate(chart, metric, start, (0.0, args.t1), step)
    except DomainExitError as exc:
        run.note("domain_exit_time", exc.time)
        run.check("stayed_in_domain", 1.0, 0.5)
        write_csv(out / "jacobi.csv", ["t"] + _mucols(chart.r, "beta"), [])
        return run.finish(out)
    run.check("stayed_in_domain", 0.0, 0.5)
    run.check("geodesic_residual", geodesic_residual(chart, metric, path), 1e-6)
    curve = jacobi_solve(chart, metric, path, beta0, dbeta0)

    # scaling solution: beta(0) = 0, beta'(0) = alpha(0) gives beta = t alpha
    scaling = jacobi_solve(chart, metric, path, np.zeros(chart.r), start.mu)
    expected = path.ts[:, None] * path.mus
    run.check(
        "scaling_solution", float(np.max(np.abs(scaling.values - expected))), args.tol or 1e-8
    )

    # differential of exp against central differences, transitive charts only
    frame = split(chart, metric, start.x)
    if frame.q == chart.n:
        u = sample_fiber(chart.r, 1, args.seed + 29, scale=0.5)[0]
        try:
            d = dexp(chart, metric, start.x, start.mu, u, step=step)
            eps = 1e-4
            plus = exp_map(chart, metric, start.x, start.mu + eps * u, step=step)
            minus = exp_map(chart, metric, start.x, start.mu - eps * u, step=step)
            fd = (plus - minus) / (2 * eps)
            scale = max(1.0, float(np.max(np.abs(fd))))
            run.check("dexp_vs_fd", float(np.max(np.abs(d - fd))) / scale, 1e-4)
        except DomainExitError:
            run.note("dexp_vs_fd", "skipped: perturbed geodesic left the domain")
    rows = [[t, *b] for t, b in zip(curve.ts, curve.values)]
    write_csv(out / "jacobi.csv", ["t"] + _mucols(chart.r, "beta"), rows)
    return run.finish(out)


def _cmd_curvature(args, out):
    chart, metric = _load(args)
    run = Run("curvature", args)
    x = _vector(args.x, chart.n, "--x") if args.x else chart.center()
    ch = christoffel(chart, metric, x, with_derivative=False)
    R = curvature(chart, metric, x)
    G, _, _ = metric.eval(x)
    low = np.einsum("ijkl,lm->ijkm", R, G)
    run.check("antisymmetry_ab", float(np.max(np.abs(low + np.swapaxes(low, 0, 1)))), 1e-9)
    run.check("antisymmetry_cd", float(np.max(np.abs(low + np.swapaxes(low, 2, 3)))), 1e-9)
    kr = koszul_rhs(chart, metric, x)
    two_low_gamma = 2.0 * np.einsum("ijl,lk->ijk", ch.gamma, G)
    run.check("koszul_consistency", float(np.max(np.abs(two_low_gamma - kr))), 1e-10)
    r = chart.r
    write_csv(
        out / "christoffel.csv",
        ["i", "j", "k", "value"],
        [
            [i + 1, j + 1, k + 1, ch.gamma[i, j, k]]
            for i in range(r)
            for j in range(r)
            for k in range(r)
        ],
    )
    write_csv(
        out / "curvature.csv",
        ["i", "j", "k", "l", "value"],
        [
            [i + 1, j + 1, k + 1, l + 1, R[i, j, k, l]]
            for i in range(r)
            for j in range(r)
            for k in range(r)
            for l in range(r)
        ],
    )
    return run.finish(out)


def _cmd_oneill(args, out):
    chart, metric = _load(args)
    run = Run("oneill", args)
    x = _vector(args.x, chart.n, "--x") if args.x else chart.center()
    tensors = oneill_tensors(chart, metric, x)
    if tensors.frame.warning:
        run.check("rank_stability", 1.0, 0.5)
    run.note("anchor_rank", tensors.frame.q)
    residuals = oneill_identity_residuals(chart, metric, x)
    for name, value in sorted(residuals.items()):
        run.check(name, value, args.tol or 1e-9)
    try:
        chk = oneill_curvature_check(chart, metric, x)
        for label, value in (
            ("curvature_vertical", chk.vertical),
            ("curvature_mixed", chk.mixed),
            ("curvature_horizontal", chk.horizontal),
        ):
            if value is None:
                run.note(label, "not_applicable")
            else:
                run.check(label, value, 1e-8)
    except SplitError as exc:
        run.note("curvature_identities", f"skipped: {exc}")
    r = chart.r
    rows = []
    for name, ten in (("T", tensors.T), ("H", tensors.H)):
        for i in range(r):
            for j in range(r):
                for k in range(r):
                    rows.append([name, i + 1, j + 1, k + 1, ten[i, j, k]])
    write_csv(out / "oneill.csv", ["tensor", "i", "j", "k", "value"], rows)
    return run.finish(out)


def _cmd_divergence(args, out):
    chart, metric = _load(args)
    run = Run("divergence", args)
    count = args.samples or 50
    xs = sample_box(chart.domain, count, args.seed, shrink=0.25)
    mus = sample_fiber(chart.r, count, args.seed)
    if args.x or args.mu:
        pin = _state_from_args(chart, args)
        xs = np.vstack([pin.x[None, :], xs])
        mus = np.vstack([pin.mu[None, :], mus])
    rows = []
    worst_fd = 0.0
    worst_zero = 0.0
    zero_anchor = chart.has_zero_anchor
    no_kernel = split(chart, metric, chart.center()).vertical_dim == 0
    for x, mu in zip(xs, mus):
        v = AVector(x, mu)
        tr, mc = divergence_terms(chart, metric, v)
        total = tr + mc
        rows.append([*x, *mu, tr, mc, total])
        if zero_anchor:
            worst_fd = max(worst_fd, abs(total - divergence_fd_lie_algebra(chart, metric, v)))
        if no_kernel:
            worst_zero = max(worst_zero, abs(total))
    if zero_anchor:
        run.check("fd_divergence_agreement", worst_fd, args.tol or 1e-5)
    if no_kernel:
        run.check("liouville_zero", worst_zero, 1e-9)
    write_csv(
        out / "divergence.csv",
        _xcols(chart.n) + _mucols(chart.r) + ["trace_term", "mean_curvature_term", "total"],
        rows,
    )
    return run.finish(out)


def _cmd_hamcheck(args, out):
    chart, metric = _load(args)
    run = Run("hamcheck", args)
    count = args.samples or 100
    xs = sample_box(chart.domain, count, args.seed, shrink=0.25)
    mus = sample_fiber(chart.r, count, args.seed)
    rows = []
    worst_eq = 0.0
    worst_h = 0.0
    for x, mu in zip(xs, mus):
        v = AVector(x, mu)
        dx_h, dmu_h = hamiltonian_field(chart, metric, v)
        dx_g, dmu_g = geodesic_rhs(chart, metric, x, mu)
        eq = max(float(np.max(np.abs(dx_h - dx_g))), float(np.max(np.abs(dmu_h - dmu_g))))
        hom = euler_identity_residual(chart, metric, v)
        rows.append([*x, *mu, eq, hom])
        worst_eq = max(worst_eq, eq)
        worst_h = max(worst_h, hom)
    run.check("hamiltonian_geodesic_equivalence", worst_eq, args.tol or 1e-8)
    run.check("field_homogeneity", worst_h, 1e-12)
    write_csv(
        out / "hamcheck.csv",
        _xcols(chart.n) + _mucols(chart.r) + ["equivalence_residual", "homogeneity_residual"],
        rows,
    )
    return run.finish(out)


def _cmd_variation_check(args, out):
    chart, metric = _load(args)
    run = Run("variation-check", args)
    start = _state_from_args(chart, args, mu_scale=0.4)
    u = sample_fiber(chart.r, 1, args.seed + 17, scale=0.5)[0]
    step = args.step or 2e-3
    rows = []

    report = jacobi_from_geodesic_pencil(chart, metric, start, u, step=step)
    run.check("pencil_vs_jacobi_ode", report.deviation, args.tol or 1e-4)
    rows.append(["pencil_vs_jacobi_ode", 0, report.deviation])

    eps_values = 1e-2 * np.arange(-2, 3)
    pencil = make_geodesic_pencil(chart, metric, start, u, eps_values, (0.0, 1.0), step)
    solved = solve_transverse(chart, metric, pencil, np.zeros((len(eps_values), chart.r)))
    d = delta(chart, metric, solved)
    anchored = anchor_of_grid(chart, solved, d)
    res_anchor = float(np.max(np.abs(anchored[1:-1, 1:-1])))
    run.check("delta_anchor_kernel", res_anchor, 1e-5)
    rows.append(["delta_anchor_kernel", 0, res_anchor])

    path = pencil.row_path(len(eps_values) // 2)
    homotopy = make_fixed_endpoint_homotopy(chart, metric, path, direction=u, amplitude=0.05)
    fv = first_variation_residual(chart, metric, homotopy)
    energies = row_energies(chart, metric, homotopy)
    dE = float(np.gradient(energies, homotopy.eps, edge_order=2)[len(homotopy.eps) // 2])
    run.check("first_variation_identity", fv, 1e-5)
    run.check("geodesic_energy_criticality", abs(dE), 1e-5)
    rows.append(["first_variation_identity", 0, fv])
    rows.append(["geodesic_energy_criticality", 0, abs(dE)])

    rng = np.random.RandomState(args.seed)
    freq = rng.uniform(0.5, 1.5, size=(chart.r, 3))
    residuals = []
    for level, N in enumerate((21, 41, 81)):
        eps = np.linspace(-0.05, 0.05, N)
        g = make_geodesic_pencil(chart, metric, start, u, eps, (0.0, 1.0), 1.0 / (N - 1))
        sv = solve_transverse(chart, metric, g, np.zeros((N, chart.r)))
        tt, ee = np.meshgrid(g.ts, eps)
        smesh = np.stack(
            [np.sin(f[0] + f[1] * tt + f[2] * ee) for f in freq], axis=-1
        )
        r = curvature_commutation_residual(chart, metric, sv, smesh)
        residuals.append(r)
        rows.append(["commutation_residual", N, r])
    if residuals[-1] < 1e-10:
        run.check("commutation_convergence_order", 0.0, 1.0)  # flat: nothing to converge
    else:
        orders = [
            np.log2(residuals[i] / residuals[i + 1]) for i in range(len(residuals) - 1)
        ]
        run.note("commutation_orders", ",".join(_fmt(o) for o in orders))
        run.check("commutation_convergence_order", 2.0 - min(orders), 0.2)
    write_csv(out / "variation-check.csv", ["check", "level", "value"], rows)
    return run.finish(out)


def _cmd_catalog(args, out):
    run = Run("catalog", args)
    rows = []
    for name in _catalog.names():
        entry = _catalog.get(name)
        rows.append(
            [name, entry.chart.n, entry.chart.r, entry.chart.has_zero_anchor]
        )
    write_csv(out / "catalog.csv", ["name", "n", "r", "zero_anchor"], rows)
    if args.name:
        try:
            entry = _catalog.get(args.name)
        except KeyError as exc:
            raise SystemExit2(str(exc)) from exc
        text = dumps_chart(entry.chart, entry.metric)
        (Path(out) / f"{args.name}.chart").write_text(text, encoding="utf-8")
        run.note("written", f"{args.name}.chart")
    for name in _catalog.names():
        sys.stdout.write(name + "\n")
    return run.finish(out)


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

_VERBS = {
    "validate": _cmd_validate,
    "geodesic": _cmd_geodesic,
    "exp": _cmd_exp,
    "transport": _cmd_transport,
    "jacobi": _cmd_jacobi,
    "curvature": _cmd_curvature,
    "oneill": _cmd_oneill,
    "divergence": _cmd_divergence,
    "hamcheck": _cmd_hamcheck,
    "variation-check": _cmd_variation_check,
    "catalog": _cmd_catalog,
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="algebroid",
        description="Numerical Riemannian geometry on Lie algebroid charts.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in _VERBS:
        p = sub.add_parser(verb)
        p.add_argument("--chart", help="chart file to load")
        p.add_argument("--catalog", help="built-in catalog entry name")
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--out", default="algebroid_out", help="output directory")
        p.add_argument("--samples", type=int, default=None)
        p.add_argument("--step", type=float, default=None)
        p.add_argument("--tol", type=float, default=None, help="override the main check tolerance")
        p.add_argument("--x", help="base point, comma separated")
        p.add_argument("--mu", help="fiber vector, comma separated")
        p.add_argument("--s0", help="transported vector (transport verb)")
        p.add_argument("--beta0", help="initial Jacobi value (jacobi verb)")
        p.add_argument("--dbeta0", help="initial Jacobi derivative (jacobi verb)")
        p.add_argument("--t1", type=float, default=1.0, help="end time for integrations")
        p.add_argument("--name", help="catalog entry to write (catalog verb)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        return _VERBS[args.verb](args, out)
    except SystemExit2 as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT_ERROR
    except (ChartFileError, ExpressionError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT_ERROR
    except (MetricError, SplitError, ValueError) as exc:
        sys.stderr.write(f"check failed: {exc}\n")
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    raise SystemExit(main())
