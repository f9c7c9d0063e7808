"""
The norm on a distinguished variety
===================================

For eta = (eta_1, ..., eta_n) the set {eta_1(z_1) = ... = eta_n(z_n)} is a
variety over the disc.  Each boundary fibre carries weights
1/|eta_1' ... eta_n'|, and a function on the variety is rebuilt from its
values on interior fibres.  For monomial eta the rebuilt f = 1 is 1 again
and every boundary fibre has total mass 1, so the weighted area norm of 1 is
sqrt(2 pi) whatever the degrees.  With nonzero Blaschke zeros the rebuilding
weights no longer sum to 1 and the norm of 1 moves away from sqrt(2 pi).
"""
import cmath

import numpy as np

from hardyquot.symbols import BlaschkeProduct, MPoly
from hardyquot.variety import VarietyModel, a2n_report, f_r_on_boundary, fibre_measure, fibre_points

model = VarietyModel((BlaschkeProduct([0, 0]), BlaschkeProduct([0, 0])))
fib = fibre_points(model, 0.25)
print("fibre over 1/4:\n", np.round(fib.points.real, 6))
print("weights over e^{0.9i}:", fibre_measure(model, cmath.exp(0.9j)))

z = fibre_points(model, cmath.exp(0.3j)).points[1]
for r in (0.2, 0.5, 0.9):
    print(f"r = {r}: f_r for f = 1 -> {f_r_on_boundary(model, 1, r, z):.12f}")

for etas in [([0], [0]), ([0, 0], [0, 0]), ([0, 0, 0], [0.3]), ([0.5, -0.2j], [0, 0])]:
    m = VarietyModel(tuple(BlaschkeProduct(e) for e in etas))
    rep = a2n_report(m, 1)
    print(f"eta zeros {str(etas):<24} norm^2 / 2 pi = {rep.norm_sq / (2 * np.pi):.10f}   doubling change {rep.quadrature_error_estimate:.1e}")

z1 = MPoly.variable(2, 0)
print("norm of z1 on eta = (z^2, z^2):", a2n_report(model, z1).norm)
