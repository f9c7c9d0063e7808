"""Acceptance criteria AC-1 .. AC-11, one test each, with a PASS/FAIL line per criterion."""
import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.signal import convolve2d

from hardyquot.boundaryrep import (
    BRVerdict,
    boundary_rep_verdict,
    homogeneous_model,
    qeta_vonneumann_check,
    slice_subdiagonal,
    weighted_shift_model,
)
from hardyquot.diagnostics import (
    DCVerdict,
    Verdict,
    cross_commutator,
    doubly_commuting_verdict,
    lemma25_block_probe,
    rudin_probe,
    tensor_self_commutator_check,
    theorem31_matrix_probe,
)
from hardyquot.lattice import TruncationGrid, kernel_vector
from hardyquot.parsing import parse_polynomial
from hardyquot.quotient import ONE_DIM, PrincipalInner, RudinFinite, build_submodule, one_variable_model, projector_apply, tensor_quotient
from hardyquot.symbols import BlaschkeProduct, InnerSymbol, MPoly
from hardyquot.variety import VarietyModel, a2n_norm, a2n_report, fibre_measure


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n{name} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, f"{name}: {detail}"

    return emit


def B(*zeros):
    return BlaschkeProduct(list(zeros))


def test_ac1_projection_formula(report):
    start = time.perf_counter()
    thetas = {
        "z1*z2": InnerSymbol.from_monomial((1, 1)),
        "b(1/2)(z1)*z2": InnerSymbol(2, {0: B(0.5)}, (0, 1)),
        "b(1/2)(z1)*b(1/3)(z2)": InnerSymbol(2, {0: B(0.5), 1: B(1 / 3)}, (0, 0)),
    }
    grid = TruncationGrid((16, 16))
    rng = np.random.default_rng(20240101)
    worst = 0.0
    for theta in thetas.values():
        model = build_submodule(PrincipalInner(theta), grid)
        T = theta.taylor_tensor(grid.caps)
        for _ in range(20):
            w = 0.7 * np.sqrt(rng.uniform(0, 1, 2)) * np.exp(2j * np.pi * rng.uniform(0, 1, 2))
            k, tail = kernel_vector(w, grid)
            lhs = projector_apply(model, "quot", k).entries
            prod = convolve2d(T, grid.to_box(k.entries))[:17, :17]
            rhs = k.entries - np.conj(theta.evaluate(w)) * grid.from_box(prod)
            worst = max(worst, np.linalg.norm(lhs - rhs) / (2 * tail + 1e-8))
    elapsed = time.perf_counter() - start
    report("AC-1", worst <= 1 and elapsed < 10, f"max error/(2 tail + 1e-8) = {worst:.3g}, {elapsed:.1f}s")


def test_ac2_theorem31_closed_form(report):
    start = time.perf_counter()
    rep = theorem31_matrix_probe(InnerSymbol.from_monomial((1, 1, 0)), TruncationGrid((12, 12, 12)), [0.5, 0.5, 0], 3, [0.5, 0.7, 0.9, 0.95])
    elapsed = time.perf_counter() - start
    dev = np.abs(np.asarray(rep.measured) - 0.140625).max()
    ok = dev <= 1e-4 and np.allclose(rep.closed_form, 0.140625) and rep.verdict == Verdict.NON_COMPACT_CERTIFICATE and elapsed < 60
    report("AC-2", ok, f"max |form - 0.140625| = {dev:.3g}, verdict {rep.verdict.value}, {elapsed:.1f}s")


def test_ac3_block_identity(report):
    res = {}
    for name, b in {"z": B(0), "z^2": B(0, 0), "b(1/2)": B(0.5)}.items():
        rep = lemma25_block_probe(b, 3, TruncationGrid((b.degree + 3, 6, 6)))
        res[name] = rep.extras["residual"]
    report("AC-3", max(res.values()) <= 1e-10, ", ".join(f"{k}: {v:.2g}" for k, v in res.items()))


def test_ac4_tensor_self_commutator(report):
    models = {
        "Q_z x Q_z^2": tensor_quotient([one_variable_model(B(0), 6), one_variable_model(B(0, 0), 6)]),
        "Q_b x Q_z^3 x C": tensor_quotient([one_variable_model(B(0.5), 6), one_variable_model(B(0, 0, 0), 6), ONE_DIM]),
    }
    worst_self, worst_cross = 0.0, 0.0
    for model in models.values():
        n = model.grid.n
        worst_self = max(worst_self, max(tensor_self_commutator_check(model, i) for i in range(n)))
        for i in range(n):
            for j in range(n):
                if i != j:
                    worst_cross = max(worst_cross, np.abs(cross_commutator(model, i, j)).max())
    report("AC-4", worst_self <= 1e-10 and worst_cross <= 1e-10, f"self residual {worst_self:.2g}, cross {worst_cross:.2g}")


DC_TABLE = [
    # (dims, flags, essentially normal)
    ((3, 4), None, True),
    ((1, math.inf), None, True),
    ((2, math.inf), None, False),
    ((math.inf, math.inf), None, False),
    ((1, 1, math.inf), None, True),
    ((1, math.inf), (None, False), False),
]


def test_ac5_doubly_commuting_table(report):
    got = [doubly_commuting_verdict(d, f) == DCVerdict.ESSENTIALLY_NORMAL for d, f, _ in DC_TABLE]
    want = [e for *_, e in DC_TABLE]
    report("AC-5", got == want, f"{sum(g == w for g, w in zip(got, want))}/{len(want)} rows match")


def test_ac6_rudin_probe(report):
    spec = RudinFinite((B(0), B(0, 0, 0.5)), (B(0, 0, 0.5), B(0)))
    rep = rudin_probe(spec, 1, 0.5, 0, TruncationGrid((10, 10)))
    dev = abs(rep.measured[0] + 0.75)
    report("AC-6", dev <= 1e-6 and np.isclose(rep.closed_form[0], -0.75), f"measured {rep.measured[0].real:.9f}, |dev| = {dev:.2g}")


AC7 = [
    ("z1^3 - z2^3", BRVerdict.NOT_BOUNDARY),
    ("z1^2 - i*z2^2", BRVerdict.NOT_BOUNDARY),
    ("z1 - 2*z2", BRVerdict.NOT_BOUNDARY),
    ("z1 - 0.5*z2", BRVerdict.NOT_BOUNDARY),
    ("(z1-z2)*(z1-i*z2)*(z1+z2)", BRVerdict.BOUNDARY),
    ("(z1-z2)*(z1-i*z2)", BRVerdict.BOUNDARY),
    ("(z1-z2)*(z1+z2)*(z1-0.5*z2)", BRVerdict.BOUNDARY),
    ("(z1-z2)*(z1-3*z2)", BRVerdict.BOUNDARY),
    ("(z1-0.5*z2)*(z1-2*z2)", BRVerdict.BOUNDARY),
    ("z1*z2", BRVerdict.BOUNDARY),
    ("(z1-z2)*(z1-0.5*z2)*(z2-z1/3)", BRVerdict.BOUNDARY),
    ("(z1-z2)^2", BRVerdict.BOUNDARY),
    ("(z1-z2)^2*(z1+z2)", BRVerdict.BOUNDARY),
    ("(z1-2*z2)*(z1-3*z2)", BRVerdict.OUT_OF_SCOPE),
]


def test_ac7_homogeneous_regression(report):
    bad, min_margin = [], math.inf
    for text, want in AC7:
        rep = boundary_rep_verdict(parse_polynomial(text, 2), 10)
        if rep.verdict_br != want:
            bad.append(text)
        if rep.verdict_br == BRVerdict.BOUNDARY:
            min_margin = min(min_margin, rep.norm_lower_bound - rep.sup_norm)
    main = boundary_rep_verdict(parse_polynomial("(z1-z2)*(z1-i*z2)*(z1+z2)", 2), 10)
    ok = not bad and min_margin >= 1e-3 and main.norm_lower_bound >= math.sqrt(3) - 1e-6 and abs(main.sup_norm - 1) <= 1e-9
    report("AC-7", ok, f"{len(AC7) - len(bad)}/{len(AC7)} verdicts match, min margin {min_margin:.3g}, roots (1,i,-1): lb {main.norm_lower_bound:.6f} sup {main.sup_norm:.12f}")


def test_ac8_weighted_shift(report):
    z1, z2 = MPoly.variable(2, 0), MPoly.variable(2, 1)
    model = homogeneous_model(z1 - 2 * z2, 20)
    sub = np.abs(slice_subdiagonal(model, 0))[:19]
    w = weighted_shift_model(2, 19)
    dev = np.abs(sub - w).max()
    increasing = bool(np.all(np.diff(w) > 0))
    long = weighted_shift_model(2, 60)
    sup_is_lim = long.max() == long[-1] and 1 - long[-1] < 1e-12
    report("AC-8", dev <= 1e-10 and increasing and sup_is_lim, f"max subdiagonal deviation {dev:.2g}, increasing {increasing}, sup = lim {sup_is_lim}")


def test_ac9_appendix_norm(report):
    model = VarietyModel((B(0, 0), B(0, 0)))
    sq = a2n_norm(model, 1) ** 2
    rep = a2n_report(model, 1)
    mass = fibre_measure(model, np.exp(0.9j))
    ok = abs(sq - 2 * np.pi) <= 1e-6 and rep.quadrature_error_estimate < 1e-6 and np.allclose(mass, 0.25)
    report("AC-9", ok, f"norm^2 - 2 pi = {sq - 2 * np.pi:.2g}, doubling change {rep.quadrature_error_estimate:.2g}, masses {np.round(mass, 12).tolist()}")


def test_ac10_qeta_von_neumann(report):
    z1, z2 = MPoly.variable(2, 0), MPoly.variable(2, 1)
    rows = qeta_vonneumann_check([B(0, 0), B(0, 0)], [MPoly.constant(2), z1 * z2, z1 + z2], TruncationGrid((10, 10)))
    ok = all(r.operator_norm <= r.boundary_sup + 1e-3 for r in rows)
    report("AC-10", ok, "; ".join(f"||q(C)|| {r.operator_norm:.6f} <= sup {r.boundary_sup:.6f}" for r in rows))


def test_ac11_property_suite(report):
    here = Path(__file__).resolve().parent
    others = sorted(str(p) for p in here.glob("test_*.py") if p.name != Path(__file__).name)
    start = time.perf_counter()
    env = dict(os.environ, PYTHONWARNINGS="ignore")
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *others], capture_output=True, text=True, env=env, cwd=here.parent)
    elapsed = time.perf_counter() - start
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    report("AC-11", proc.returncode == 0 and elapsed < 600, f"{summary} ({elapsed:.0f}s)")
