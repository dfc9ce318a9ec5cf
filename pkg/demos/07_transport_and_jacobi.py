"""Parallel transport, Jacobi sections, and the differential of exp.

Transport solves the linear connection equation along a path and is a
fiber isometry.  Jacobi sections linearize the geodesic flow; on the unit
sphere chart the normal solution has length sin(t), and anchoring a Jacobi
section at time one gives the derivative of the exponential map, matched
here against central differences.
"""

import numpy as np

from algebroid import catalog
from algebroid.charts import AVector
from algebroid.metric import fiber_inner
from algebroid.paths import (
    dexp,
    exp_map,
    geodesic_integrate,
    jacobi_solve,
    parallel_transport,
)

np.set_printoptions(precision=8, suppress=True)

sphere = catalog.get("sphere_chart")
start = AVector([np.pi / 2, 0.2], [0.0, 1.0])
path = geodesic_integrate(sphere.chart, sphere.metric, start, (0.0, 1.0), 1e-3)

curve = parallel_transport(sphere.chart, sphere.metric, path, [1.0, 0.0])
norms = fiber_inner(sphere.metric, path.xs, curve.values, curve.values)
print("transport along the equator keeps the normal field fixed:")
print("  end value:", curve.values[-1], " norm drift:", np.max(np.abs(norms - norms[0])))

beta = jacobi_solve(sphere.chart, sphere.metric, path, [0.0, 0.0], [1.0, 0.0])
lengths = np.sqrt(fiber_inner(sphere.metric, path.xs, beta.values, beta.values))
ts = path.ts
err = np.max(np.abs(lengths - np.sin(ts)))
print("\nnormal Jacobi section: | |beta(t)| - sin t | =", err)

x0, a = np.array([1.2, 1.0]), np.array([0.3, 0.4])
u = np.array([0.5, -0.2])
d = dexp(sphere.chart, sphere.metric, x0, a, u, step=2e-3)
eps = 1e-4
fd = (exp_map(sphere.chart, sphere.metric, x0, a + eps * u, step=2e-3)
      - exp_map(sphere.chart, sphere.metric, x0, a - eps * u, step=2e-3)) / (2 * eps)
print("\nderivative of the exponential map:")
print("  via the Jacobi section:", d)
print("  via finite differences:", fd)
print("  discrepancy:", np.max(np.abs(d - fd)))
