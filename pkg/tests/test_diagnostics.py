import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hardyquot.diagnostics import (
    DCVerdict,
    ProbeReport,
    Verdict,
    classify,
    cross_commutator,
    doubly_commuting_verdict,
    lemma25_block_probe,
    operator_norm,
    probe_tail_scale,
    quadratic_form,
    rudin_probe,
    self_commutator,
    singular_values,
    tensor_self_commutator_check,
    theorem31_closed_form,
    theorem31_matrix_probe,
)
from hardyquot.errors import DimensionMismatch, PreconditionError, SpecViolation, SymbolIndependentOfVariable
from hardyquot.lattice import TruncationGrid
from hardyquot.quotient import ONE_DIM, PrincipalInner, RudinFinite, build_submodule, full_space_model, one_variable_model, tensor_quotient
from hardyquot.symbols import BlaschkeProduct, InnerSymbol, blaschke_taylor

Z, ZZ, B_HALF = BlaschkeProduct([0]), BlaschkeProduct([0, 0]), BlaschkeProduct([0.5])
RUDIN = RudinFinite((Z, BlaschkeProduct([0, 0, 0.5])), (BlaschkeProduct([0, 0, 0.5]), Z))


def _grid_operator(model, T):
    return model.quot_frame @ T @ model.quot_frame.conj().T


# cross_commutator


def test_cross_commutator_vanishes_on_tensor_model():
    model = tensor_quotient([one_variable_model(Z, 3), one_variable_model(ZZ, 4)])
    assert np.abs(cross_commutator(model, 0, 1)).max() <= 1e-10


def test_self_commutator_two_by_two_brute_force():
    model = one_variable_model(ZZ, 4)
    # basis (1, z): C = [[0, 0], [1, 0]], so C C* - C* C = diag(-1, 1)
    C = np.array([[0, 0], [1, 0]])
    brute = C @ C.T - C.T @ C
    got = _grid_operator(model, cross_commutator(model, 0, 0))[:2, :2]
    assert np.allclose(got, brute, atol=1e-14)
    assert np.allclose(brute, np.diag([-1, 1]))


def test_commutator_trace_on_full_space():
    model = full_space_model(6)
    assert abs(np.trace(cross_commutator(model, 0, 0))) <= 1e-12


# quadratic_form


def test_quadratic_form_examples():
    rng = np.random.default_rng(3)
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    u = rng.normal(size=4) + 1j * rng.normal(size=4)
    assert quadratic_form(np.eye(4), v) == pytest.approx(np.linalg.norm(v) ** 2)
    assert quadratic_form(np.zeros((4, 4)), v) == 0
    assert quadratic_form(np.outer(u, u.conj()), v) == pytest.approx(abs(np.vdot(u, v)) ** 2)


def test_quadratic_form_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        quadratic_form(np.eye(3), np.ones(4))


# theorem31_closed_form


def test_closed_form_monomial():
    theta = InnerSymbol.from_monomial((1, 1, 0))
    assert theorem31_closed_form(theta, [0.5, 0.5, 0.9]) == pytest.approx(0.140625)


def test_closed_form_vanishes_at_origin():
    theta = InnerSymbol.from_monomial((1, 1, 0))
    assert theorem31_closed_form(theta, [0, 0.7, 0.2]) == 0


def test_closed_form_blaschke_series_oracle():
    theta = InnerSymbol(3, {0: B_HALF}, (0, 1, 0))
    c = blaschke_taylor(B_HALF, 1)
    # M_{z2}^* theta = b(z1), M_{z1}^* theta = (M^* b)(z1) z2, at w = (0, 0.5, 0.9)
    expected = c[0] * np.conj(c[1] * 0.5) * 1.0 * 0.75
    assert theorem31_closed_form(theta, [0, 0.5, 0.9]) == pytest.approx(expected)
    assert expected == pytest.approx(-0.140625)


def test_closed_form_needs_both_variables():
    with pytest.raises(SymbolIndependentOfVariable):
        theorem31_closed_form(InnerSymbol.one_variable(B_HALF, 3, 0), [0.1, 0.1, 0.1])


# theorem31_matrix_probe


def test_matrix_probe_acceptance_case():
    rep = theorem31_matrix_probe(InnerSymbol.from_monomial((1, 1, 0)), TruncationGrid((12, 12, 12)), [0.5, 0.5, 0], 3, [0.5, 0.7, 0.9, 0.95])
    assert np.allclose(rep.closed_form, 0.140625)
    assert rep.max_deviation <= 1e-4
    assert rep.verdict == Verdict.NON_COMPACT_CERTIFICATE


def test_matrix_probe_refuses_one_variable_symbol():
    with pytest.raises(SymbolIndependentOfVariable):
        theorem31_matrix_probe(InnerSymbol.one_variable(B_HALF, 3, 0), TruncationGrid((8, 8, 8)), [0.2, 0.2, 0], 3, [0.5])


def test_matrix_probe_refuses_two_variables():
    with pytest.raises(PreconditionError):
        theorem31_matrix_probe(InnerSymbol.from_monomial((1, 1)), TruncationGrid((8, 8)), [0.2, 0.2], 3, [0.5])


# lemma25_block_probe


@pytest.mark.parametrize("B,size_factor", [(Z, 1), (ZZ, 2), (B_HALF, 1)])
def test_lemma25_block_is_minus_identity(B, size_factor):
    caps = (B.degree + 3, 6, 6)
    rep = lemma25_block_probe(B, 3, TruncationGrid(caps))
    assert rep.extras["residual"] <= 1e-10
    assert rep.verdict == Verdict.NON_COMPACT_CERTIFICATE
    assert rep.extras["block_size"] % size_factor == 0


def test_lemma25_block_doubles_for_z_squared():
    a = lemma25_block_probe(Z, 3, TruncationGrid((5, 6, 6))).extras["block_size"]
    # one more cap for z^2 keeps the trust degree (and the z3 range) equal
    b = lemma25_block_probe(ZZ, 3, TruncationGrid((6, 7, 7))).extras["block_size"]
    assert b == 2 * a


def test_lemma25_refuses_two_variables():
    with pytest.raises(PreconditionError):
        lemma25_block_probe(Z, 2, TruncationGrid((4, 4)))


# tensor_self_commutator_check


def test_tensor_self_commutator_two_factors():
    model = tensor_quotient([one_variable_model(Z, 3), one_variable_model(ZZ, 4)])
    for i in range(2):
        assert tensor_self_commutator_check(model, i) <= 1e-12


def test_tensor_one_dim_factor_is_normal():
    model = tensor_quotient([ONE_DIM, full_space_model(5)])
    assert np.abs(self_commutator(model.compressed_coordinate(0))).max() == 0


def test_tensor_three_factors():
    model = tensor_quotient([one_variable_model(B_HALF, 6), one_variable_model(BlaschkeProduct([0, 0, 0]), 5), ONE_DIM])
    assert max(tensor_self_commutator_check(model, i) for i in range(3)) <= 1e-10


# doubly_commuting_verdict


def test_doubly_commuting_examples():
    assert doubly_commuting_verdict([1, math.inf]) == DCVerdict.ESSENTIALLY_NORMAL
    assert doubly_commuting_verdict([2, math.inf]) == DCVerdict.NOT_ESSENTIALLY_NORMAL
    assert doubly_commuting_verdict([3, 4]) == DCVerdict.ESSENTIALLY_NORMAL


@given(st.lists(st.one_of(st.integers(1, 5), st.just(math.inf)), min_size=1, max_size=4), st.booleans())
def test_doubly_commuting_rule(dims, flag):
    flags = [flag if d == math.inf else None for d in dims]
    infinite = [d for d in dims if d == math.inf]
    finite = [d for d in dims if d != math.inf]
    expected = not infinite or (len(infinite) == 1 and flag and all(d == 1 for d in finite))
    assert (doubly_commuting_verdict(dims, flags) == DCVerdict.ESSENTIALLY_NORMAL) == expected


# rudin_probe


def test_rudin_probe_value():
    rep = rudin_probe(RUDIN, 1, 0.5, 0, TruncationGrid((10, 10)))
    assert rep.closed_form[0] == pytest.approx(-0.75)
    assert rep.max_deviation <= 1e-6


def test_rudin_probe_beta_zero():
    rep = rudin_probe(RUDIN, 1, 0, 0, TruncationGrid((10, 10)))
    assert rep.closed_form[0] == pytest.approx(-1.0)
    assert rep.passed


def test_rudin_probe_refuses_bad_lambda():
    with pytest.raises(SpecViolation):
        rudin_probe(RUDIN, 1, 0.5, 0.3, TruncationGrid((10, 10)))


# norms


def test_norm_examples():
    assert operator_norm(np.zeros((3, 3))) == 0
    assert operator_norm(np.eye(4)) == pytest.approx(1)
    assert np.allclose(singular_values(np.eye(4)), 1)
    u, v = np.array([1, 2j, 0]), np.array([0.5, 0, 1])
    assert operator_norm(np.outer(u, v.conj())) == pytest.approx(np.linalg.norm(u) * np.linalg.norm(v))
    s = singular_values(np.diag([1, 3, 2]))
    assert list(s) == sorted(s, reverse=True)


# reports


def test_report_serialization():
    rep = ProbeReport("x", [np.array([0.5, 0.5j])], [1 + 1j], [1.0], 2.0)
    rep.verdict = classify(rep.measured, rep.closed_form, 2.0)
    d = json.loads(rep.to_json())
    assert d["max_deviation"] == pytest.approx(1.0)
    assert rep.to_csv().splitlines()[0] == "trail_point,measured_re,measured_im,closed_re,closed_im,deviation"


def test_classify_rules():
    assert classify([1.0], [1.0], 1e-3) == Verdict.NON_COMPACT_CERTIFICATE
    assert classify([1e-6], [0.0], 1e-3) == Verdict.VANISHING_SEQUENCE
    assert classify([1.0], [0.0], 1e-3) == Verdict.INCONCLUSIVE


# invariants

disc = st.tuples(st.floats(0, 0.6), st.floats(0, 2 * math.pi)).map(lambda t: t[0] * np.exp(1j * t[1]))


@pytest.fixture(scope="module")
def t31_models():
    out = {}
    for k in [(1, 1, 0), (2, 1, 0), (1, 1, 1)]:
        theta = InnerSymbol.from_monomial(k)
        out[k] = (theta, build_submodule(PrincipalInner(theta), TruncationGrid((9, 9, 9))))
    return out


@given(st.sampled_from([(1, 1, 0), (2, 1, 0), (1, 1, 1)]), disc, disc, st.lists(st.floats(0, 0.6), min_size=1, max_size=3))
def test_theorem31_brute_force_equivalence(t31_models, k, w1, w2, trail):
    theta, model = t31_models[k]
    rep = theorem31_matrix_probe(theta, model.grid, [w1, w2, 0], 3, trail, model=model)
    assert rep.passed
    assert rep.tolerance == pytest.approx(10 * max(probe_tail_scale(p, model.grid.caps, [i for i in range(3) if k[i]]) for p in rep.trail) + 1e-8)


def test_lemma25_and_rudin_brute_force_equivalence():
    for B in (Z, ZZ, B_HALF):
        assert lemma25_block_probe(B, 3, TruncationGrid((B.degree + 3, 6, 6))).passed
    for beta in (0, 0.5):
        assert rudin_probe(RUDIN, 1, beta, 0, TruncationGrid((10, 10))).passed


def test_fuglede_putnam_sanity():
    model = tensor_quotient([ONE_DIM, one_variable_model(B_HALF, 6), ONE_DIM])
    for i in (0, 2):
        assert np.abs(model.compressed_coordinate(i) @ model.compressed_coordinate(1).conj().T - model.compressed_coordinate(1).conj().T @ model.compressed_coordinate(i)).max() <= 1e-10


@given(st.sampled_from(["tensor", "principal", "rudin"]), st.integers(0, 2), st.integers(0, 2))
def test_commutator_traces_vanish(kind, i, j):
    model = {
        "tensor": lambda: tensor_quotient([one_variable_model(B_HALF, 4), full_space_model(3), ONE_DIM]),
        "principal": lambda: build_submodule(PrincipalInner(InnerSymbol(3, {0: B_HALF}, (0, 1, 0))), TruncationGrid((4, 4, 4))),
        "rudin": lambda: build_submodule(RUDIN, TruncationGrid((6, 6))),
    }[kind]()
    i, j = i % model.n, j % model.n
    assert abs(np.trace(cross_commutator(model, i, j))) <= 1e-10


def test_trail_constant_in_w3():
    rep = theorem31_matrix_probe(InnerSymbol.from_monomial((1, 1, 0)), TruncationGrid((12, 12, 12)), [0.5, 0.5, 0], 3, [0.1, 0.5, 0.9, 0.99])
    assert np.ptp(rep.measured.real) <= rep.tolerance
