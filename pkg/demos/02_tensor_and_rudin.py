"""
Doubly commuting quotients and a Rudin quotient
===============================================

A tensor product of one-variable quotients has vanishing cross-commutators,
and its self-commutators are tensor products of the one-variable ones.  Only
one infinite-dimensional factor with all other factors one-dimensional gives
an essentially normal quotient.  A Rudin quotient, built from an increasing
and a decreasing chain of Blaschke products, breaks this: its self-commutator
form has a non-vanishing closed form.
"""
import math

import numpy as np

from hardyquot import BlaschkeProduct, TruncationGrid
from hardyquot.diagnostics import cross_commutator, doubly_commuting_verdict, rudin_probe, tensor_self_commutator_check
from hardyquot.quotient import ONE_DIM, RudinFinite, one_variable_model, tensor_quotient

model = tensor_quotient([one_variable_model(BlaschkeProduct([0.5]), 6), one_variable_model(BlaschkeProduct([0, 0, 0]), 6), ONE_DIM])
print("quotient dimension:", model.dim_quot)
print("max |[C_i, C_j^*]|, i != j:", max(np.abs(cross_commutator(model, i, j)).max() for i in range(3) for j in range(3) if i != j))
print("self-commutator tensor residuals:", [tensor_self_commutator_check(model, i) for i in range(3)])

for dims in [(3, 4), (1, math.inf), (2, math.inf), (math.inf, math.inf), (1, 1, math.inf)]:
    print(f"{str(dims):<16} {doubly_commuting_verdict(dims).value}")

# psi = (z, z^2 b(1/2)) increasing, phi = (z^2 b(1/2), z) decreasing
z, zzb = BlaschkeProduct([0]), BlaschkeProduct([0, 0, 0.5])
rep = rudin_probe(RudinFinite((z, zzb), (zzb, z)), 1, 0.5, 0, TruncationGrid((10, 10)))
print(f"Rudin form: measured {rep.measured[0].real:.9f}, closed form {rep.closed_form[0].real}")
print("verdict:", rep.verdict.value)
