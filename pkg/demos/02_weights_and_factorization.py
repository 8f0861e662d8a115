"""
Multiplicative path weights and their square-root factorization
===============================================================
The weight exp(beta*A^c_t) * prod(1 + beta*dA_s) drives every norm in the
package.  It splits exactly into reciprocal square-root factors, which is
the mechanism behind the weighted drift inequality.
"""

import numpy as np

from treebsde import doleans_exponential, doleans_sqrt_factorization

rng = np.random.default_rng(0)
K = 6
path = np.column_stack([rng.uniform(0, 0.5, K), rng.uniform(0, 1, K)])
beta = 2.5

E = doleans_exponential(path, beta)
print("weight path:", np.array2string(E, precision=4))
print("nondecreasing:", bool(np.all(np.diff(E) >= 0)))

upper, lower = doleans_sqrt_factorization(path, beta)
print("upper^2 - E   max abs:", np.max(np.abs(upper ** 2 - E)))
print("upper*lower-1 max abs:", np.max(np.abs(upper * lower - 1.0)))

# a unit jump multiplies the weight by (1 + beta) and the factors by
# sqrt(1 + beta) and 1/sqrt(1 + beta)
E1 = doleans_exponential([(0.0, 1.0)], 3.0)
u1, l1 = doleans_sqrt_factorization([(0.0, 1.0)], 3.0)
print(f"unit jump at beta=3: weight x{E1[1]:.0f}, factors x{u1[1]:.0f} and x{l1[1]:.2f}")
