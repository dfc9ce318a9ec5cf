"""Poisson side of the geodesic flow.

The dual bundle carries the canonical Poisson structure; in coordinates
(x_1..x_n, xi_1..xi_r) its bivector has blocks

    {x_i, x_j} = 0,   {x_i, xi_s} = -b^{si}(x),
    {xi_s, xi_t} = sum_u C_{st}^u(x) xi_u.

The geodesic field is realized literally as the Hamiltonian field of the
energy E = 1/2 sum g^{ij} xi_i xi_j with respect to this bivector and then
pushed through the metric isomorphism to (x, mu) coordinates.  The route
uses only the raw metric/anchor/bracket evaluations; it never touches the
connection coefficients, which makes it an independent oracle for the
primal geodesic equations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charts import AVector

__all__ = [
    "DualPoint",
    "poisson_matrix",
    "metric_iso",
    "metric_iso_inv",
    "hamiltonian_field",
    "euler_identity_residual",
]


@dataclass(frozen=True, eq=False)
class DualPoint:
    """A point of the dual bundle: base x with covector coordinates xi."""

    x: np.ndarray
    xi: np.ndarray

    def __init__(self, x, xi):
        object.__setattr__(self, "x", np.asarray(x, dtype=float))
        object.__setattr__(self, "xi", np.asarray(xi, dtype=float))


def poisson_matrix(chart, p: DualPoint):
    """The (n+r) x (n+r) bivector matrix Pi[a, b] = {z_a, z_b} at p."""
    n, r = chart.n, chart.r
    B, _ = chart.eval_anchor(p.x)
    C, _ = chart.eval_bracket(p.x)
    pi = np.zeros((n + r, n + r))
    pi[:n, n:] = -B.T  # {x_i, xi_s} = -b^{si}
    pi[n:, :n] = B
    pi[n:, n:] = np.einsum("stu,u->st", C, p.xi)
    return pi


def metric_iso(chart, metric, p: DualPoint) -> AVector:
    """mu_k = sum_i g^{ki} xi_i (raise the index with the fiber metric)."""
    G, _, _ = metric.eval(p.x)
    return AVector(p.x, np.linalg.solve(G, p.xi))


def metric_iso_inv(chart, metric, v: AVector) -> DualPoint:
    """xi_i = sum_k g_{ik} mu_k (lower the index)."""
    G, _, _ = metric.eval(v.x)
    return DualPoint(v.x, G @ v.mu)


def hamiltonian_field(chart, metric, v: AVector):
    """The geodesic field at v, computed on the dual side.

    Returns (dx, dmu).  dE is exact: the x-gradient of E = 1/2 xi^T g^{-1} xi
    uses d(g^{-1}) = -g^{-1} (dg) g^{-1} with dg from hyper-dual evaluation.
    """
    n = chart.n
    x = np.asarray(v.x, dtype=float)
    mu = np.asarray(v.mu, dtype=float)
    G, dG, _ = metric.eval(x, order=1)
    xi = G @ mu
    p = DualPoint(x, xi)
    pi = poisson_matrix(chart, p)

    # gradient of E in (x, xi):  dE/dx_u = -1/2 mu^T (d_u g) mu,  dE/dxi = mu
    grad_E = np.concatenate(
        [-0.5 * np.einsum("s,stu,t->u", mu, dG, mu), mu]
    )
    zdot = pi.T @ grad_E
    dx, dxi = zdot[:n], zdot[n:]

    # push xi-dot through the isomorphism: mu = g^{-1} xi
    dGdt = np.einsum("ijm,m->ij", dG, dx)
    dmu = np.linalg.solve(G, dxi - dGdt @ mu)
    return dx, dmu


def euler_identity_residual(chart, metric, v: AVector):
    """Residual of the Liouville homogeneity of the geodesic field.

    The bracket identity of the Liouville field with the geodesic field
    forces degree 1 in mu on base components and degree 2 on fiber
    components; the residual compares the field at 2*mu against the scaled
    field.
    """
    dx1, dmu1 = hamiltonian_field(chart, metric, v)
    dx2, dmu2 = hamiltonian_field(chart, metric, AVector(v.x, 2.0 * v.mu))
    return float(
        max(np.max(np.abs(dx2 - 2.0 * dx1)), np.max(np.abs(dmu2 - 4.0 * dmu1)))
    )
