"""
Boundary representations for homogeneous quotients
==================================================

For a homogeneous p in two variables the essential spectrum of the quotient
sits on the circles {(alpha z, z)} for the unimodular roots alpha of p(., 1).
The identity representation is a boundary representation when some q has
||q(C)|| larger than its sup over that set.  The certifier builds such a q,
measures its sup on the circles, and bounds ||q(C)|| from below with an
exactly representable block of the truncated quotient.
"""
import numpy as np

from hardyquot.boundaryrep import boundary_rep_verdict, homogeneous_model, slice_subdiagonal, weighted_shift_model
from hardyquot.parsing import parse_polynomial
from hardyquot.symbols import MPoly

for text in [
    "(z1-z2)*(z1-i*z2)*(z1+z2)",
    "(z1-z2)*(z1-3*z2)",
    "(z1-0.5*z2)*(z1-2*z2)",
    "(z1-z2)*(z1-0.5*z2)*(z2-z1/3)",
    "(z1-z2)^2",
    "z1^3 - z2^3",
    "(z1-2*z2)*(z1-3*z2)",
]:
    rep = boundary_rep_verdict(parse_polynomial(text, 2), 10)
    line = f"{text:<32} {rep.verdict_br.value:<12} case {str(rep.case):<13}"
    if rep.sup_norm is not None:
        line += f"||q(C)|| >= {rep.norm_lower_bound:.4f}   sup = {rep.sup_norm:.4f}"
    print(line)

# linear p = z1 - 2 z2: on each degree slice C_z1 is a weighted shift whose
# weights increase to 1, so the norm is attained only in the limit
z1, z2 = MPoly.variable(2, 0), MPoly.variable(2, 1)
w = weighted_shift_model(2, 10)
sub = np.abs(slice_subdiagonal(homogeneous_model(z1 - 2 * z2, 12), 0))[:10]
print("weights:", np.round(w, 6))
print("matrix vs closed form:", np.abs(sub - w).max())
