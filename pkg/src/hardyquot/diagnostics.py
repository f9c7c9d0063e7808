"""Commutators, kernel quadratic forms and closed-form probes.

A probe measures ``<T K, K>`` for a compressed operator ``T`` along a trail of
kernel vectors and compares it with a closed-form value.  Finite matrices
cannot decide compactness; the verdicts only record what the numbers show.
"""
from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    GridTooSmall,
    PreconditionError,
    SpecViolation,
    SymbolIndependentOfVariable,
)
from .lattice import DiagonalSpace, TruncationGrid, kernel_vector, tail_factor
from .quotient import (
    PrincipalInner,
    QuotientModel,
    RudinFinite,
    build_submodule,
    one_variable_model,
)
from .symbols import BlaschkeProduct, InnerSymbol, MPoly

TAIL_MAX = 1e-6


class Verdict(str, enum.Enum):
    NON_COMPACT_CERTIFICATE = "NonCompactCertificate"
    VANISHING_SEQUENCE = "VanishingSequence"
    INCONCLUSIVE = "Inconclusive"


class DCVerdict(str, enum.Enum):
    ESSENTIALLY_NORMAL = "EssentiallyNormal"
    NOT_ESSENTIALLY_NORMAL = "NotEssentiallyNormal"


def _cjson(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


@dataclass
class ProbeReport:
    probe: str
    trail: list
    measured: np.ndarray
    closed_form: np.ndarray
    tolerance: float
    verdict: Verdict = Verdict.INCONCLUSIVE
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.measured = np.asarray(self.measured, dtype=complex)
        self.closed_form = np.asarray(self.closed_form, dtype=complex)
        if self.measured.shape != self.closed_form.shape:
            raise DimensionMismatch("measured and closed-form sequences differ in length")

    @property
    def deviations(self) -> np.ndarray:
        return np.abs(self.measured - self.closed_form)

    @property
    def max_deviation(self) -> float:
        return float(self.deviations.max(initial=0.0))

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "probe": self.probe,
            "trail": [[_cjson(x) for x in np.atleast_1d(p)] for p in self.trail],
            "measured": [_cjson(x) for x in self.measured],
            "closed_form": [_cjson(x) for x in self.closed_form],
            "max_deviation": self.max_deviation,
            "tolerance": self.tolerance,
            "verdict": self.verdict.value,
            "extras": self.extras,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def csv_rows(self) -> list:
        rows = []
        for p, m, c, d in zip(self.trail, self.measured, self.closed_form, self.deviations):
            point = " ".join(f"{complex(x):.12g}" for x in np.atleast_1d(p))
            rows.append([point, m.real, m.imag, c.real, c.imag, d])
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trail_point", "measured_re", "measured_im", "closed_re", "closed_im", "deviation"])
        w.writerows(self.csv_rows())
        return buf.getvalue()


def classify(measured, closed, tol) -> Verdict:
    """Certificate rule: agreement along the trail and a closed-form limit proxy of size >= 10 tol."""
    measured = np.asarray(measured, dtype=complex)
    closed = np.asarray(closed, dtype=complex)
    if measured.size == 0:
        return Verdict.INCONCLUSIVE
    if np.abs(measured - closed).max() > tol:
        return Verdict.INCONCLUSIVE
    if abs(closed[-1]) >= 10 * tol:
        return Verdict.NON_COMPACT_CERTIFICATE
    if abs(measured[-1]) < 10 * tol:
        return Verdict.VANISHING_SEQUENCE
    return Verdict.INCONCLUSIVE


# ---------------------------------------------------------------------------
# basic linear algebra


def commutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


def cross_commutator(model: QuotientModel, i: int, j: int) -> np.ndarray:
    """``[C_{z_i}, C_{z_j}^*]`` (zero-based variable indices)."""
    Ci = model.compressed_coordinate(i)
    Cj = model.compressed_coordinate(j)
    return Ci @ Cj.conj().T - Cj.conj().T @ Ci


def self_commutator(C: np.ndarray) -> np.ndarray:
    return C @ C.conj().T - C.conj().T @ C


def quadratic_form(T: np.ndarray, v: np.ndarray) -> complex:
    """``<T v, v>``, conjugate-linear in the right slot."""
    T = np.asarray(T)
    v = np.asarray(v)
    if T.ndim != 2 or T.shape[0] != T.shape[1] or T.shape[1] != v.shape[0]:
        raise DimensionMismatch(f"operator {T.shape} and vector {v.shape} do not match")
    return complex(np.vdot(v, T @ v))


def singular_values(T: np.ndarray) -> np.ndarray:
    T = np.asarray(T)
    if T.size == 0:
        return np.zeros(0)
    return np.linalg.svd(T, compute_uv=False)


def operator_norm(T: np.ndarray) -> float:
    s = singular_values(T)
    return float(s[0]) if s.size else 0.0


# ---------------------------------------------------------------------------
# kernel vectors in quotient coordinates


def kernel_in_quotient(model: QuotientModel, w):
    """Quotient coordinates of the unit kernel ``K_w`` and the squared norm retained on the grid."""
    k, tail = kernel_vector(w, model.grid, model.space)
    x = model.quot_coordinates(k)
    return x, 1.0 - tail**2


def kernel_form(T: np.ndarray, model: QuotientModel, w) -> complex:
    """``<T P K_w, P K_w>`` with ``K_w`` renormalized to the mass kept by the grid."""
    x, kept = kernel_in_quotient(model, w)
    return quadratic_form(T, x) / kept


# ---------------------------------------------------------------------------
# the non-essential-normality closed form


def theorem31_closed_form(theta: InnerSymbol, w) -> complex:
    """``(M_{z2}^* theta)(w) conj((M_{z1}^* theta)(w)) (1-|w1|^2)(1-|w2|^2)``.

    The first factor carries no conjugate: for ``theta = z1 z2`` the commutator
    is the rank-one map ``z2 -> z1`` and the form is ``w1 conj(w2) (...)``.
    """
    if theta.n < 3:
        raise PreconditionError("the closed form is only established for n >= 3")
    for i in (0, 1):
        if not theta.depends_on(i):
            raise SymbolIndependentOfVariable(f"theta does not depend on z{i + 1}")
    w = np.asarray(w, dtype=complex)
    a = theta.backward_shift_value(w, 1)
    b = theta.backward_shift_value(w, 0)
    return complex(a * np.conj(b) * (1 - abs(w[0]) ** 2) * (1 - abs(w[1]) ** 2))


def probe_tail_scale(w, caps, variables, zeros=None) -> float:
    """Truncation scale of a kernel form: the largest of ``prod |w_i|^(D_i+1)``,
    ``|w_i|^(2(D_i+1))`` over the variables the symbol acts on, and
    ``|a|^(2(D_i+1))`` over Blaschke zeros ``a`` attached to variable ``i``.

    Variables the symbol ignores cancel through the kept-mass normalization.
    ``zeros`` maps a variable index to the zeros of its Blaschke factor.
    """
    w = np.abs(np.asarray(w, dtype=complex))
    caps = np.asarray(caps)
    terms = [tail_factor(w, caps)] + [w[i] ** (2 * (caps[i] + 1)) for i in variables]
    for i, zs in (zeros or {}).items():
        terms += [abs(a) ** (2 * (caps[i] + 1)) for a in zs]
    return float(max(terms))


def _trail_points(w_fixed, l: int, trail) -> list:
    pts = []
    for t in trail:
        p = np.array(w_fixed, dtype=complex)
        p[l - 1] = t
        pts.append(p)
    return pts


def theorem31_matrix_probe(theta: InnerSymbol, grid: TruncationGrid, w_fixed, l: int, trail, tol: float | None = None, model=None) -> ProbeReport:
    """``<[C_{z1}, C_{z2}^*] K_w, K_w>`` along ``w_l -> boundary`` (``l`` one-based, ``l >= 3``)."""
    if theta.n < 3 or grid.n != theta.n:
        raise PreconditionError("probe needs n >= 3 and a matching grid")
    if not 3 <= l <= theta.n:
        raise PreconditionError(f"boundary variable l={l} must satisfy 3 <= l <= n")
    pts = _trail_points(w_fixed, l, trail)
    tails = [tail_factor(p, grid.caps) for p in pts]
    if max(tails) > TAIL_MAX:
        raise GridTooSmall(f"tail factor {max(tails):.2e} exceeds {TAIL_MAX:g}; enlarge caps")
    closed = [theorem31_closed_form(theta, p) for p in pts]
    model = model or build_submodule(PrincipalInner(theta), grid)
    T = cross_commutator(model, 0, 1)
    measured = [kernel_form(T, model, p) for p in pts]
    acts_on = [i for i in range(theta.n) if theta.depends_on(i)]
    zeros = {i: B.zeros for i, B in theta.factors.items()}
    scale = max(probe_tail_scale(p, grid.caps, acts_on, zeros) for p in pts)
    tol = tol if tol is not None else 10 * scale + 1e-8
    rep = ProbeReport("theorem31", pts, measured, closed, tol)
    rep.verdict = classify(measured, closed, tol)
    rep.extras = {"l": l, "caps": list(grid.caps), "max_tail": max(tails), "tail_scale": scale, "dim_quot": model.dim_quot}
    return rep


# ---------------------------------------------------------------------------
# one-variable inner symbols in n >= 3 variables


def lemma25_block_probe(theta1: BlaschkeProduct, n: int, grid: TruncationGrid, tol: float = 1e-10) -> ProbeReport:
    """Restrict ``[C_{z2}, C_{z2}^*]`` to ``Q_{theta'} (x) C (x) H^2`` and compare with ``-I``."""
    if n < 3:
        raise PreconditionError("the block identity needs n >= 3")
    if grid.n != n:
        raise PreconditionError("grid dimension differs from n")
    if min(grid.caps) < theta1.degree + 2:
        raise GridTooSmall(f"caps {grid.caps} below deg + 2 = {theta1.degree + 2}")
    theta = InnerSymbol.one_variable(theta1, n, 0)
    model = build_submodule(PrincipalInner(theta), grid)
    trust = model.trust_degree
    one = one_variable_model(theta1, grid.caps[0], model.space.factor(0)).quot_frame
    e0 = np.zeros((grid.caps[1] + 1, 1))
    e0[0] = 1.0
    factors = [one, e0]
    for i in range(2, n):
        factors.append(np.eye(grid.caps[i] + 1)[:, : min(trust, grid.caps[i]) + 1])
    V = np.ones((1, 1), dtype=complex)
    for F in factors:
        V = np.kron(V, F)
    V = V[grid.pos_to_box]
    X = model.quot_frame.conj().T @ V
    membership = float(np.abs(model.quot_frame @ X - V).max())
    C2 = model.compressed_coordinate(1)
    block = X.conj().T @ self_commutator(C2) @ X
    residual = float(np.abs(block + np.eye(block.shape[0])).max())
    rep = ProbeReport("lemma25", [np.zeros(n)], [np.diag(block).mean()], [-1.0], tol)
    rep.verdict = Verdict.NON_COMPACT_CERTIFICATE if max(residual, membership) <= tol else Verdict.INCONCLUSIVE
    rep.extras = {"block_size": int(block.shape[0]), "residual": residual, "membership_residual": membership, "caps": list(grid.caps)}
    return rep


# ---------------------------------------------------------------------------
# doubly commuting quotients


def tensor_self_commutator_check(model: QuotientModel, i: int) -> float:
    """Distance between ``[C_{z_i}, C_{z_i}^*]`` and the tensor-assembled right-hand side."""
    if model.factors is None:
        raise PreconditionError("model was not built by tensor_quotient")
    direct = self_commutator(model.compressed_coordinate(i))
    rhs = np.ones((1, 1), dtype=complex)
    for j, f in enumerate(model.factors):
        if j == i:
            piece = self_commutator(f.compressed_coordinate(0))
        else:
            piece = np.eye(f.dim_quot)
        rhs = np.kron(rhs, piece)
    return float(np.abs(direct - rhs).max(initial=0.0))


def doubly_commuting_verdict(dims, flags=None) -> DCVerdict:
    """Essential normality of a doubly commuting quotient from its factor dimensions.

    ``dims`` holds positive integers or ``math.inf``; ``flags`` gives, per
    infinite factor, whether that one-variable quotient is essentially normal
    (always true on the Hardy space).  Missing flags default to true.
    """
    dims = list(dims)
    if not dims:
        raise PreconditionError("need at least one factor")
    flags = list(flags) if flags is not None else [None] * len(dims)
    if len(flags) != len(dims):
        raise DimensionMismatch("one flag per factor")
    for d in dims:
        if not (d == math.inf or (isinstance(d, (int, np.integer)) and d >= 1)):
            raise PreconditionError(f"factor dimension {d!r} must be a positive integer or inf")
    infinite = [k for k, d in enumerate(dims) if d == math.inf]
    if not infinite:
        return DCVerdict.ESSENTIALLY_NORMAL
    if len(infinite) == 1:
        k = infinite[0]
        ok = flags[k] is None or bool(flags[k])
        if ok and all(d == 1 for j, d in enumerate(dims) if j != k):
            return DCVerdict.ESSENTIALLY_NORMAL
    return DCVerdict.NOT_ESSENTIALLY_NORMAL


# ---------------------------------------------------------------------------
# Rudin quotients


def _is_zero_of(B: BlaschkeProduct, z, tol=1e-12) -> bool:
    return any(abs(a - z) <= tol for a in B.zeros)


def _quotient_zeros(big: BlaschkeProduct, small: BlaschkeProduct) -> list:
    pool = list(big.zeros)
    for a in small.zeros:
        j = int(np.argmin([abs(a - b) for b in pool]))
        del pool[j]
    return pool


def rudin_probe(spec: RudinFinite, m: int, beta, lam, grid: TruncationGrid, tol: float | None = None, model=None) -> ProbeReport:
    """``<[C_{psi_m(z1)}, C_{psi_m(z1)}^*] (K_beta x K_lam), K_beta x K_lam>`` versus ``-(1 - |psi_m(beta)|^2)``.

    ``m`` is one-based: ``psi_m = spec.psis[m - 1]``.
    """
    if not 1 <= m < len(spec.psis):
        raise SpecViolation(f"level m={m} needs psi_(m+1); lattice has {len(spec.psis)} levels")
    psi_m, psi_next, phi_next = spec.psis[m - 1], spec.psis[m], spec.phis[m]
    if not any(abs(a - beta) <= 1e-12 for a in _quotient_zeros(psi_next, psi_m)):
        raise SpecViolation(f"beta={beta} is not a zero of psi_(m+1)/psi_m")
    if not _is_zero_of(phi_next, lam):
        raise SpecViolation(f"lambda={lam} is not a zero of phi_(m+1)")
    w = np.array([beta, lam], dtype=complex)
    zeros = {0: [a for B in spec.psis for a in B.zeros], 1: [a for B in spec.phis for a in B.zeros]}
    tail = probe_tail_scale(w, grid.caps, (0, 1), zeros)
    model = model or build_submodule(spec, grid)
    C = model.compressed_multiplier(InnerSymbol(2, {0: psi_m}))
    measured = kernel_form(self_commutator(C), model, w)
    closed = -(1 - abs(psi_m.evaluate(beta)) ** 2)
    tol = tol if tol is not None else 10 * tail + 1e-8
    rep = ProbeReport("rudin", [w], [measured], [closed], tol)
    rep.verdict = classify([measured], [closed], tol)
    rep.extras = {"m": m, "caps": list(grid.caps), "dim_quot": model.dim_quot, "tail_scale": tail}
    return rep
