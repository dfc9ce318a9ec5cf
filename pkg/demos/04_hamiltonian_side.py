"""The dual Poisson structure as an independent oracle.

The dual bundle carries a canonical Poisson bivector built from the anchor
and the bracket coefficients.  Pushing the Hamiltonian field of the energy
through the metric isomorphism must reproduce the geodesic equations; the
two computations share nothing beyond raw field evaluations, so their
agreement is a strong end-to-end check.
"""

import numpy as np

from algebroid import catalog
from algebroid.charts import AVector
from algebroid.hamiltonian import (
    DualPoint,
    euler_identity_residual,
    hamiltonian_field,
    poisson_matrix,
)
from algebroid.paths import geodesic_rhs
from algebroid.sampling import sample_box, sample_fiber

np.set_printoptions(precision=6, suppress=True)

so3 = catalog.get("so3_biinv")
pi = poisson_matrix(so3.chart, DualPoint([0.0], [0.1, 0.2, 0.3]))
print("rotation algebra bivector at xi = (0.1, 0.2, 0.3):")
print(pi)

print("\nworst equivalence residual (Poisson route vs geodesic equations):")
for name in catalog.names():
    entry = catalog.get(name)
    xs = sample_box(entry.chart.domain, 100, 42, shrink=0.1)
    mus = sample_fiber(entry.chart.r, 100, 42)
    worst = 0.0
    for x, mu in zip(xs, mus):
        dx_h, dmu_h = hamiltonian_field(entry.chart, entry.metric, AVector(x, mu))
        dx_g, dmu_g = geodesic_rhs(entry.chart, entry.metric, x, mu)
        worst = max(worst, np.max(np.abs(dx_h - dx_g)), np.max(np.abs(dmu_h - dmu_g)))
    print(f"  {name:20s} {worst:.2e}")

heis = catalog.get("heisenberg_central")
v = AVector([0.3, -0.2], [0.5, 0.4, 0.3])
print("\nhomogeneity of the field (degree 1 base / degree 2 fiber):",
      euler_identity_residual(heis.chart, heis.metric, v))
