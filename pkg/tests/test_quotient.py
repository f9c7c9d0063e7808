import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.signal import convolve2d

from hardyquot.boundaryrep import slice_subdiagonal
from hardyquot.diagnostics import self_commutator
from hardyquot.errors import DegenerateSpec, DimensionOverflow, GridMismatch, GridTooSmall, SpecViolation
from hardyquot.lattice import CoeffVector, DiagonalSpace, TruncationGrid, kernel_vector
from hardyquot.quotient import (
    ONE_DIM,
    EtaIdeal,
    PolyIdeal,
    PrincipalInner,
    RudinFinite,
    build_submodule,
    compressed_coordinate,
    compressed_multiplier,
    full_space_model,
    one_variable_model,
    projector_apply,
    tensor_quotient,
)
from hardyquot.symbols import BlaschkeProduct, InnerSymbol, MPoly

z1, z2 = MPoly.variable(2, 0), MPoly.variable(2, 1)


def _span_projector(F):
    return F @ F.conj().T


def _monomial_projector(grid, ks):
    E = np.zeros((grid.size, len(ks)))
    for j, k in enumerate(ks):
        E[grid.position(k), j] = 1
    return E @ E.T


def _random_vector(grid, seed):
    rng = np.random.default_rng(seed)
    return CoeffVector(grid, rng.normal(size=grid.size) + 1j * rng.normal(size=grid.size))


# build_submodule


def test_principal_z1_quotient_is_z2_powers():
    grid = TruncationGrid((3, 3))
    model = build_submodule(PrincipalInner(InnerSymbol.from_monomial((1, 0))), grid)
    assert model.dim_quot == 4
    assert np.allclose(_span_projector(model.quot_frame), _monomial_projector(grid, [(0, k) for k in range(4)]))


def _tableau_rank(p, caps):
    # independent oracle: multiply p by every monomial that keeps the product in the box
    cols = []
    for a in range(caps[0] + 1):
        for b in range(caps[1] + 1):
            prod = {}
            for (i, j), c in p.items():
                prod[(i + a, j + b)] = prod.get((i + a, j + b), 0) + c
            if all(i <= caps[0] and j <= caps[1] for i, j in prod):
                col = np.zeros((caps[0] + 1) * (caps[1] + 1), dtype=complex)
                for (i, j), c in prod.items():
                    col[i * (caps[1] + 1) + j] = c
                cols.append(col)
    return np.linalg.matrix_rank(np.array(cols).T) if cols else 0


def test_poly_ideal_dimension_matches_rank_oracle():
    caps = (2, 2)
    model = build_submodule(PolyIdeal((z1 - z2,)), TruncationGrid(caps), allow_untrusted=True)
    assert model.dim_quot == 9 - _tableau_rank(z1 - z2, caps) == 5


def test_poly_ideal_small_grid_is_refused():
    with pytest.raises(GridTooSmall):
        build_submodule(PolyIdeal((z1 - z2,)), TruncationGrid((2, 2)))


@given(
    st.dictionaries(st.tuples(st.integers(0, 2), st.integers(0, 2)), st.integers(-3, 3).filter(bool), min_size=1, max_size=4),
    st.integers(4, 6),
)
def test_poly_ideal_rank_property(terms, cap):
    p = MPoly(2, terms)
    model = build_submodule(PolyIdeal((p,)), TruncationGrid((cap, cap)), allow_untrusted=True)
    assert model.dim_sub == _tableau_rank(p, (cap, cap))


def test_degenerate_generators():
    with pytest.raises(DegenerateSpec):
        build_submodule(PolyIdeal((MPoly(2),)), TruncationGrid((3, 3)))


def test_rudin_frame_by_hand():
    z, zz = BlaschkeProduct([0]), BlaschkeProduct([0, 0])
    grid = TruncationGrid((4, 4))
    model = build_submodule(RudinFinite((z, zz), (zz, z)), grid)
    # (Q_z (-) 0) x Q_{z^2} = {1, z2}; (Q_{z^2} (-) Q_z) x Q_z = {z1}
    assert np.allclose(_span_projector(model.quot_frame), _monomial_projector(grid, [(0, 0), (0, 1), (1, 0)]))


def test_rudin_rejects_non_nested():
    with pytest.raises(SpecViolation):
        build_submodule(RudinFinite((BlaschkeProduct([0.5]), BlaschkeProduct([0, 0])), (BlaschkeProduct([0, 0]), BlaschkeProduct([0]))), TruncationGrid((4, 4)))


# compressed_coordinate / multiplier


def test_model_space_shift_is_jordan_block():
    model = one_variable_model(BlaschkeProduct([0] * 4), 8)
    C = compressed_coordinate(0, model)
    order = np.argsort([np.argmax(np.abs(model.quot_frame[:, j])) for j in range(model.dim_quot)])
    C = C[np.ix_(order, order)]
    # frame columns may carry phases; compare moduli
    assert model.dim_quot == 4
    assert np.allclose(np.abs(C), np.eye(4, k=-1), atol=1e-14)


def test_linear_ideal_weighted_shift_first_weight():
    model = build_submodule(PolyIdeal((z1 - 2 * z2,)), TruncationGrid((12, 12)))
    sub = np.abs(slice_subdiagonal(model, 0))
    assert sub[0] == pytest.approx(1 / math.sqrt(1.25), abs=1e-12)
    assert np.linalg.norm(self_commutator(model.compressed_coordinate(0))) > 0


def test_multiplier_identity_and_coordinate():
    model = build_submodule(PolyIdeal((z1 - 2 * z2,)), TruncationGrid((6, 6)))
    assert np.allclose(compressed_multiplier(MPoly.constant(2), model), np.eye(model.dim_quot))
    assert np.allclose(compressed_multiplier(z1, model), compressed_coordinate(0, model))


def test_multiplier_blaschke_monomial_matches_polynomial():
    z, zz = BlaschkeProduct([0]), BlaschkeProduct([0, 0])
    model = build_submodule(RudinFinite((z, zz), (zz, z)), TruncationGrid((5, 5)))
    psi = InnerSymbol(2, {0: zz})
    assert np.allclose(compressed_multiplier(psi, model), compressed_multiplier(z1**2, model), atol=1e-14)


# projector_apply


@given(st.integers(0, 2**31))
def test_projectors_complementary(seed):
    model = build_submodule(PrincipalInner(InnerSymbol(2, {0: BlaschkeProduct([0.5])}, (0, 1))), TruncationGrid((5, 5)))
    v = _random_vector(model.grid, seed)
    s = projector_apply(model, "sub", v)
    q = projector_apply(model, "quot", v)
    assert np.allclose((s + q).entries, v.entries)
    assert np.allclose(projector_apply(model, "quot", q).entries, q.entries, atol=1e-10)


def test_projection_formula_small_tail():
    theta = InnerSymbol(2, {0: BlaschkeProduct([0.5])}, (0, 1))
    grid = TruncationGrid((16, 16))
    model = build_submodule(PrincipalInner(theta), grid)
    w = np.array([0.3 + 0.2j, -0.4])
    k, tail = kernel_vector(w, grid)
    lhs = projector_apply(model, "quot", k).entries
    # (1 - conj(theta(w)) theta) K_w, the product truncated to the box
    prod = convolve2d(theta.taylor_tensor(grid.caps), grid.to_box(k.entries))[:17, :17]
    rhs = k.entries - np.conj(theta.evaluate(w)) * grid.from_box(prod)
    assert np.linalg.norm(lhs - rhs) <= 2 * tail + 1e-8 + 2 * 0.5**17


def test_submodule_membership_in_trust():
    theta = InnerSymbol(2, {0: BlaschkeProduct([0.3])}, (0, 1))
    grid = TruncationGrid((30, 5))
    model = build_submodule(PrincipalInner(theta), grid)
    T = theta.taylor_tensor(grid.caps)
    for k in [(0, 0), (1, 0), (0, 1)]:
        shifted = np.zeros_like(T)
        shifted[k[0]:, k[1]:] = T[: T.shape[0] - k[0], : T.shape[1] - k[1]]
        v = CoeffVector(grid, grid.from_box(shifted))
        assert np.allclose(projector_apply(model, "sub", v).entries, v.entries, atol=1e-12)


def test_projector_grid_mismatch():
    model = full_space_model(3)
    with pytest.raises(GridMismatch):
        projector_apply(model, "quot", CoeffVector.zeros(TruncationGrid((4,))))


# tensor_quotient


def test_tensor_lemma_geometry():
    model = tensor_quotient([one_variable_model(BlaschkeProduct([0, 0]), 4), ONE_DIM, full_space_model(5)])
    assert model.dim_quot == 2 * 1 * 6
    for i in range(3):
        for j in range(3):
            if i != j:
                Ci, Cj = model.compressed_coordinate(i), model.compressed_coordinate(j)
                assert np.abs(Ci @ Cj.conj().T - Cj.conj().T @ Ci).max() <= 1e-10


def test_tensor_overflow():
    with pytest.raises(DimensionOverflow):
        tensor_quotient([full_space_model(30), full_space_model(30), full_space_model(30)], max_basis_size=1000)


# invariants


SPECS = [
    PrincipalInner(InnerSymbol(2, {0: BlaschkeProduct([0.5])}, (0, 1))),
    PolyIdeal(((z1 - 2 * z2) * (z1 + 0.5j * z2),)),
    EtaIdeal((BlaschkeProduct([0, 0]), BlaschkeProduct([0, 0]))),
    RudinFinite((BlaschkeProduct([0]), BlaschkeProduct([0, 0.5])), (BlaschkeProduct([0, 0.5]), BlaschkeProduct([0]))),
]


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: type(s).__name__)
@pytest.mark.parametrize("space", ["hardy", "bergman"])
def test_frames_orthonormal_and_idempotent(spec, space):
    if space == "bergman" and isinstance(spec, (PrincipalInner, RudinFinite)):
        pytest.skip("inner-symbol constructions are Hardy-only")
    model = build_submodule(spec, TruncationGrid((6, 6)), getattr(DiagonalSpace, space)(2))
    r = model.frame_residuals()
    assert r["quot_orthonormal"] <= 1e-12 and r["sub_orthonormal"] <= 1e-12 and r["cross"] <= 1e-12
    assert r["rank_deficit"] == 0
    P = _span_projector(model.quot_frame)
    assert np.abs(P @ P - P).max() <= 1e-10


def _grid_operator(model, C):
    return model.quot_frame @ C @ model.quot_frame.conj().T


@pytest.mark.parametrize(
    "spec,caps",
    [
        # Blaschke zeros off the origin: agreement is up to |a|^(2(D+1)), so give z1 room
        (SPECS[0], (44, 5)),
        (SPECS[1], (7, 7)),
        (SPECS[2], (7, 7)),
    ],
    ids=["PrincipalInner", "PolyIdeal", "EtaIdeal"],
)
def test_trust_consistency(spec, caps):
    small = build_submodule(spec, TruncationGrid(caps))
    big = build_submodule(spec, TruncationGrid(tuple(c + 2 for c in caps)))
    T = small.trust_degree
    keep = [k for k in map(tuple, small.grid.exponents) if sum(k) <= T - 1]
    ps = [small.grid.position(k) for k in keep]
    pb = [big.grid.position(k) for k in keep]
    for i in range(2):
        A = _grid_operator(small, small.compressed_coordinate(i))[np.ix_(ps, ps)]
        B = _grid_operator(big, big.compressed_coordinate(i))[np.ix_(pb, pb)]
        assert np.abs(A - B).max() <= 1e-12


def test_principal_isometry_on_trust_block():
    theta = InnerSymbol(2, {0: BlaschkeProduct([0.3])}, (0, 1))
    grid = TruncationGrid((30, 5))
    T = theta.taylor_tensor(grid.caps)
    cols = []
    for k in [(0, 0), (1, 0), (0, 1)]:
        shifted = np.zeros_like(T)
        shifted[k[0]:, k[1]:] = T[: T.shape[0] - k[0], : T.shape[1] - k[1]]
        cols.append(grid.from_box(shifted))
    G = np.array(cols)
    assert np.abs(G.conj() @ G.T - np.eye(3)).max() <= 1e-12


def test_homogeneous_ideal_splits_by_degree():
    model = build_submodule(PolyIdeal(((z1 - 2 * z2) * (z1 + 0.5j * z2),)), TruncationGrid((8, 8)))
    deg = model.grid.total_degrees
    for j in range(model.dim_quot):
        support = np.abs(model.quot_frame[:, j]) > 1e-12
        assert len(set(deg[support])) == 1
