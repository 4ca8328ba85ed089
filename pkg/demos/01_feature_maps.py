"""Feature maps: anisotropic monomial bases and their derivatives.

The model family is linear in a fixed monomial basis.  Each input axis gets
its own maximal degree, and an overall total-degree cap (the largest per-axis
degree) keeps the basis from exploding when axes differ a lot.
"""

import numpy as np

from shapereg import enumerate_multi_indices, eval_derivative, eval_features

# A basis over four inputs: degree 4 in the first and last axes, nearly
# linear in the second.  The cap keeps cross terms like x1^4 * x3^3 out.
fm = enumerate_multi_indices((4, 1, 3, 4))
print(f"degrees {fm.degrees} -> {fm.dimension} basis monomials")
print("first ten exponent vectors:", fm.indices[:10])

# The five-axis map used throughout the benchmark examples.
fm5 = enumerate_multi_indices((1, 5, 2, 2, 2))
print(f"degrees {fm5.degrees} -> {fm5.dimension} basis monomials")

# Evaluation is plain monomial arithmetic; the constant term sits in slot 0.
fm2 = enumerate_multi_indices((2, 2))
x = np.array([0.3, 0.8])
print("\nbasis:", fm2.indices)
print("features(0.3, 0.8) =", np.round(eval_features(fm2, x), 4))

# Exact partial derivatives come from the same exponent bookkeeping.
print("d/dx1      =", np.round(eval_derivative(fm2, x, axis=0, order=1), 4))
print("d2/dx1^2   =", np.round(eval_derivative(fm2, x, axis=0, order=2), 4))

# Sanity: central finite differences agree to ~1e-10.
h = 1e-6
e = np.array([h, 0.0])
fd = (eval_features(fm2, x + e) - eval_features(fm2, x - e)) / (2 * h)
print("max |analytic - fd| =", float(np.max(np.abs(fd - eval_derivative(fm2, x, 0, 1)))))
