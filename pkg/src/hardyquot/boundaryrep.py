"""Homogeneous quotients of H^2(D^2): factorization, certificates and verdicts.

A homogeneous ``p`` in two variables is written as

    p = c * z1^a * z2^b * prod_i (z1 - alpha_i z2)^{m_i}

and its roots are sorted into three groups: unimodular roots (the ``p1``
part), roots inside the disc (``z1^a`` counts as ``a`` roots at 0) and roots
outside it.  Outside roots are stored through ``beta = 1/gamma`` so that a
pure ``z2`` factor is simply ``beta = 0``.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .diagnostics import operator_norm
from .errors import (
    ExcludedForm,
    IllConditioned,
    NotApplicable,
    NotEssentiallyNormal,
    NotHomogeneous,
    PreconditionError,
    RootfindingFailure,
    TruncationInconclusive,
    UnimodularAlpha,
    ZeroPolynomial,
)
from .lattice import DiagonalSpace, TruncationGrid
from .quotient import EtaIdeal, PolyIdeal, QuotientModel, build_submodule, multiplication_matrix, symbol_tensor
from .symbols import BlaschkeProduct, MPoly

UNIMODULAR_TOL = 1e-9
ILL_CONDITIONED_BAND = 1e-6
ROOT_CLUSTER_TOL = 1e-5
BR_MARGIN = 1e-6
GOLDEN = (math.sqrt(5) - 1) / 2


class BRVerdict(str, enum.Enum):
    BOUNDARY = "Boundary"
    NOT_BOUNDARY = "NotBoundary"
    OUT_OF_SCOPE = "OutOfScope"


# ---------------------------------------------------------------------------
# factorization


@dataclass(frozen=True)
class HomFactorization:
    const: complex
    unimodular: tuple  # ((alpha, multiplicity), ...)
    inside: tuple  # ((gamma, multiplicity), ...), |gamma| < 1, gamma = 0 for z1 factors
    outside: tuple  # ((beta, multiplicity), ...), beta = 1/gamma, beta = 0 for z2 factors
    degree: int

    @property
    def z1_power(self) -> int:
        return sum(m for g, m in self.inside if g == 0)

    @property
    def z2_power(self) -> int:
        return sum(m for b, m in self.outside if b == 0)

    @property
    def unimodular_roots(self) -> list:
        return [a for a, m in self.unimodular for _ in range(m)]

    @property
    def inside_roots(self) -> list:
        return [g for g, m in self.inside for _ in range(m)]

    @property
    def outside_betas(self) -> list:
        return [b for b, m in self.outside for _ in range(m)]

    @property
    def is_squarefree_p1(self) -> bool:
        return all(m == 1 for _, m in self.unimodular)

    def p1(self) -> MPoly:
        return _linear_product(self.unimodular_roots)

    def p2(self) -> MPoly:
        """``p2`` without the constant; outside roots appear as ``z2 - beta z1``."""
        out = _linear_product(self.inside_roots)
        z1, z2 = MPoly.variable(2, 0), MPoly.variable(2, 1)
        for b in self.outside_betas:
            out = out * (z2 - b * z1)
        return out

    def reconstruct(self) -> MPoly:
        return self.const * self.p1() * self.p2()


def _linear_product(roots) -> MPoly:
    z1, z2 = MPoly.variable(2, 0), MPoly.variable(2, 1)
    out = MPoly.constant(2)
    for a in roots:
        out = out * (z1 - a * z2)
    return out


def _cluster(roots, tol=ROOT_CLUSTER_TOL) -> list:
    """Group nearly equal roots; each cluster is replaced by its mean."""
    roots = list(roots)
    groups = []
    while roots:
        r = roots.pop(0)
        members = [r]
        rest = []
        for s in roots:
            (members if abs(s - r) <= tol * max(1.0, abs(r)) else rest).append(s)
        roots = rest
        groups.append((complex(np.mean(members)), len(members)))
    return groups


def _sort_key(item):
    z = item[0]
    return (round(abs(z), 12), round(float(np.angle(z)) % (2 * np.pi), 12))


def factorize_homogeneous(p: MPoly) -> HomFactorization:
    if p.n != 2:
        raise PreconditionError("homogeneous factorization is for two variables")
    if p.is_zero():
        raise ZeroPolynomial("p = 0")
    d = p.homogeneous_degree()
    a = np.array([p[(k, d - k)] for k in range(d + 1)], dtype=complex)  # a[k]: z1^k z2^(d-k)
    nz = np.flatnonzero(a)
    lo, hi = int(nz[0]), int(nz[-1])
    const = a[hi]
    # p(z, 1) / z^lo has degree hi - lo and nonzero constant term
    core = a[lo : hi + 1]
    roots = np.roots(core[::-1]) if hi > lo else np.zeros(0, dtype=complex)
    unimodular, inside, outside = [], [], []
    for r, m in _cluster(roots):
        gap = abs(abs(r) - 1)
        if gap <= UNIMODULAR_TOL:
            unimodular.append((r / abs(r), m))
        elif gap < ILL_CONDITIONED_BAND:
            raise IllConditioned(f"root {r} lies within {ILL_CONDITIONED_BAND:g} of the unit circle")
        elif abs(r) < 1:
            inside.append((r, m))
        else:
            outside.append((1 / r, m))
    if lo:
        inside.append((0j, lo))
    if d - hi:
        outside.append((0j, d - hi))
    # outside roots contribute (z1 - g z2) = -g (z2 - beta z1)
    for b, m in outside:
        if b != 0:
            const = const * (-1 / b) ** m
    return HomFactorization(
        complex(const),
        tuple(sorted(unimodular, key=_sort_key)),
        tuple(sorted(inside, key=_sort_key)),
        tuple(sorted(outside, key=_sort_key)),
        d,
    )


# ---------------------------------------------------------------------------
# essential normality


def essential_normality_verdict(f: HomFactorization):
    """``(is_essentially_normal, form)`` with form in {"i", "ii", "iii", None}."""
    n_in = sum(m for _, m in f.inside)
    n_out = sum(m for _, m in f.outside)
    if n_in == 0 and n_out == 0:
        return True, "i"
    if n_in + n_out == 1:
        return True, "ii"
    if n_in == 1 and n_out == 1:
        return True, "iii"
    return False, None


def elementary_symmetric(roots) -> np.ndarray:
    """``e_0, ..., e_m`` of the given roots."""
    e = np.array([1.0 + 0j])
    for r in roots:
        e = np.append(e, 0) + r * np.concatenate([[0], e])
    return e


def is_excluded_form(f: HomFactorization):
    """Return "i", "ii" or None for the two non-boundary families."""
    n_in = sum(m for _, m in f.inside)
    n_out = sum(m for _, m in f.outside)
    if f.degree == 1 and n_in + n_out == 1:
        return "ii"
    if n_in == 0 and n_out == 0 and f.is_squarefree_p1:
        e = elementary_symmetric(f.unimodular_roots)
        if np.all(np.abs(e[1:-1]) <= UNIMODULAR_TOL):
            return "i"
    return None


# ---------------------------------------------------------------------------
# certificates


def multiplicity_certificate(f: HomFactorization) -> MPoly:
    """``p`` with one repeated unimodular factor lowered to multiplicity one."""
    if f.is_squarefree_p1:
        raise NotApplicable("every unimodular root is simple")
    k = next(i for i, (_, m) in enumerate(f.unimodular) if m > 1)
    roots = []
    for i, (a, m) in enumerate(f.unimodular):
        roots += [a] * (1 if i == k else m)
    z1, z2 = MPoly.variable(2, 0), MPoly.variable(2, 1)
    q = _linear_product(roots) * _linear_product(f.inside_roots)
    for b in f.outside_betas:
        q = q * (z2 - b * z1)
    return q


def divided_difference_poly(roots) -> MPoly:
    """``[prod (z1 - a_i z2) - (-1)^m prod(a_i) z2^m] / z1``."""
    e = elementary_symmetric(roots)
    m = len(roots)
    return MPoly(2, {(m - k - 1, k): (-1) ** k * e[k] for k in range(m)})


def _swap_roots(roots):
    return [1 / a for a in roots]


def _bisect_crossing(g, lo=0.0, hi=1.0) -> float:
    """Root of an increasing function on (lo, hi) by bisection."""
    if g(lo) >= 0:
        return lo
    if g(hi) <= 0:
        return hi
    return float(brentq(g, lo, hi, xtol=1e-14))


@dataclass
class Certificate:
    q: MPoly
    case: str
    epsilon: float | None = None


def certificate_polynomial(f: HomFactorization) -> Certificate:
    en, form = essential_normality_verdict(f)
    if not en:
        raise NotEssentiallyNormal("Q_p is not essentially normal")
    excl = is_excluded_form(f)
    if excl:
        raise ExcludedForm(f"p is of excluded form ({excl})")
    if not f.is_squarefree_p1:
        return Certificate(multiplicity_certificate(f), "multiplicity")
    alphas = f.unimodular_roots
    m = len(alphas)
    if form == "i":
        return Certificate(divided_difference_poly(alphas), "I")
    if form == "ii":
        if f.inside:
            return Certificate(divided_difference_poly(alphas + f.inside_roots), "II")
        # outside root: swap the variables so that it moves inside
        beta = f.outside_betas[0]
        q = divided_difference_poly(_swap_roots(alphas) + [beta]).swap(0, 1)
        return Certificate(q, "II")
    gamma1, beta = f.inside_roots[0], f.outside_betas[0]
    z1, z2 = MPoly.variable(2, 0), MPoly.variable(2, 1)
    if m == 0:
        # |gamma1 - eps/beta| = 1 - eps on the two circles
        if beta != 0:
            eps = _bisect_crossing(lambda e: abs(gamma1 - e / beta) - (1 - e))
            return Certificate(z1 - (eps / beta) * z2, "III", eps)
        if gamma1 != 0:
            eps = _bisect_crossing(lambda e: abs(beta - e / gamma1) - (1 - e))
            return Certificate(z2 - (eps / gamma1) * z1, "III", eps)
        eps = 0.1
        return Certificate((1 - eps) * (z1 + z2), "III", eps)
    p1 = f.p1()
    M1 = abs(p1.evaluate((gamma1, 1.0)))
    M2 = abs(p1.evaluate((1.0, beta)))
    g1 = abs(gamma1) ** m

    def excess(e):
        b1 = (1 - e) * g1 + e * M1
        b2 = abs(beta) * ((1 - e) + e * M2)
        return max(b1, b2) - (1 - e)

    eps = _bisect_crossing(excess)
    q = z2 * ((1 - eps) * z1**m + eps * p1)
    return Certificate(q, "IV", eps)


# ---------------------------------------------------------------------------
# sup norms on the essential spectrum


def spectrum_circles(f: HomFactorization) -> list:
    """``(label, t -> points)`` parametrizations of the circles making up ``Z(p)`` on the boundary."""
    out = []
    for a, _ in f.unimodular:
        out.append((f"alpha={a:.6g}", lambda t, a=a: np.stack([a * np.exp(1j * t), np.exp(1j * t)], -1)))
    for g, _ in f.inside:
        out.append((f"gamma={g:.6g}", lambda t, g=g: np.stack([g * np.exp(1j * t), np.exp(1j * t)], -1)))
    for b, _ in f.outside:
        out.append((f"beta={b:.6g}", lambda t, b=b: np.stack([np.exp(1j * t), b * np.exp(1j * t)], -1)))
    return out


def _circle_max(q: MPoly, param, resolution: int) -> float:
    t = np.concatenate([
        np.linspace(0, 2 * np.pi, resolution, endpoint=False),
        2 * np.pi * ((np.arange(1, resolution + 1) * GOLDEN) % 1.0),
    ])
    vals = np.abs(q.evaluate(param(t)))
    k = int(np.argmax(vals))
    h = 2 * np.pi / resolution
    res = minimize_scalar(lambda s: -abs(q.evaluate(param(np.array([s])))[0]), bounds=(t[k] - h, t[k] + h), method="bounded", options={"xatol": 1e-12})
    return float(max(vals[k], -res.fun))


def supnorm_on_spectrum(q: MPoly, f: HomFactorization, resolution: int = 1024, per_circle: bool = False):
    if resolution < 256:
        raise PreconditionError("resolution must be at least 256")
    maxima = {label: _circle_max(q, param, resolution) for label, param in spectrum_circles(f)}
    best = max(maxima.values(), default=0.0)
    return (best, maxima) if per_circle else best


# ---------------------------------------------------------------------------
# operator side


def homogeneous_model(p: MPoly, cap: int) -> QuotientModel:
    return build_submodule(PolyIdeal([p]), TruncationGrid((cap, cap)))


def exact_block(model: QuotientModel, max_degree: int | None = None) -> np.ndarray:
    """Quotient frame columns supported in total degree ``<= max_degree`` (default: min cap)."""
    D = min(model.grid.caps) if max_degree is None else max_degree
    deg = model.grid.total_degrees
    F = model.quot_frame
    top = np.array([deg[np.abs(F[:, j]) > 0].max(initial=0) for j in range(F.shape[1])])
    return F[:, top <= D]


def polynomial_operator_lower_bound(q: MPoly, model: QuotientModel):
    """``(||q(C) 1||, ||compression of q(C)||)``, both lower bounds for ``||q(C)||``.

    On slices of total degree ``<= min cap`` the truncated quotient is exact and
    truncated multiplication loses nothing, so the compression below is a
    compression of the true operator.
    """
    F = exact_block(model)
    M = multiplication_matrix(model.grid, model.space, symbol_tensor(q, model.grid.caps))
    T = F.conj().T @ (M @ F)
    e = np.zeros(model.grid.size, dtype=complex)
    e[0] = 1.0
    one = F.conj().T @ e
    one = one / np.linalg.norm(one)
    return float(np.linalg.norm(T @ one)), operator_norm(T)


# ---------------------------------------------------------------------------
# verdicts


def _cjson(z):
    z = complex(z)
    return [z.real, z.imag]


def _poly_json(p: MPoly) -> list:
    return [[list(k), _cjson(c)] for k, c in p.items()]


@dataclass
class CertificateReport:
    p: MPoly
    verdict_en: bool
    form: str | None
    verdict_br: BRVerdict
    case: str | None = None
    excluded_form: str | None = None
    certificate: MPoly | None = None
    epsilon: float | None = None
    sup_norm: float | None = None
    norm_lower_bound: float | None = None
    circle_maxima: dict = field(default_factory=dict)
    caps: tuple | None = None

    @property
    def margin(self):
        if self.sup_norm is None or self.norm_lower_bound is None:
            return None
        return self.norm_lower_bound - self.sup_norm

    def to_dict(self) -> dict:
        return {
            "p": _poly_json(self.p),
            "verdict_en": self.verdict_en,
            "form": self.form,
            "verdict_br": self.verdict_br.value,
            "case": self.case,
            "excluded_form": self.excluded_form,
            "certificate": _poly_json(self.certificate) if self.certificate is not None else None,
            "epsilon": self.epsilon,
            "sup_norm": self.sup_norm,
            "norm_lower_bound": self.norm_lower_bound,
            "margin": self.margin,
            "circle_maxima": self.circle_maxima,
            "caps": list(self.caps) if self.caps else None,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def csv_row(self) -> list:
        d = self.p.homogeneous_degree()
        coeffs = " ".join(f"{self.p[(k, d - k)]:.12g}" for k in range(d + 1))
        return [coeffs, self.verdict_en, self.form, self.verdict_br.value, self.case, self.sup_norm, self.norm_lower_bound, self.margin, self.caps]


def boundary_rep_verdict(p: MPoly, cap: int = 10, resolution: int = 1024) -> CertificateReport:
    if not p.is_homogeneous:
        raise NotHomogeneous("boundary verdicts are implemented for homogeneous p only")
    f = factorize_homogeneous(p)
    en, form = essential_normality_verdict(f)
    if not en:
        return CertificateReport(p, False, None, BRVerdict.OUT_OF_SCOPE)
    excl = is_excluded_form(f)
    if excl:
        return CertificateReport(p, True, form, BRVerdict.NOT_BOUNDARY, excluded_form=excl)
    cert = certificate_polynomial(f)
    if cert.q.degree >= f.degree or cap < f.degree + 1:
        raise PreconditionError("certificate degree must sit below deg p inside the grid")
    sup, maxima = supnorm_on_spectrum(cert.q, f, resolution, per_circle=True)
    model = homogeneous_model(p, cap)
    v1, vT = polynomial_operator_lower_bound(cert.q, model)
    lb = max(v1, vT)
    rep = CertificateReport(p, True, form, BRVerdict.BOUNDARY, cert.case, None, cert.q, cert.epsilon, sup, lb, maxima, (cap, cap))
    if rep.margin < BR_MARGIN:
        raise TruncationInconclusive(f"norm gap {rep.margin:.3e} below {BR_MARGIN:g} at caps {rep.caps}")
    return rep


# ---------------------------------------------------------------------------
# the linear case


def weighted_shift_model(alpha: complex, N: int, swap: bool = False) -> np.ndarray:
    """Weights ``c_n / c_{n+1}`` of ``C_{z1}`` on ``Q_{z1 - alpha z2}`` (n = 0..N-1).

    For ``|alpha| < 1`` pass ``swap=True``: the roles of the variables are
    exchanged and the returned weights belong to ``C_{z2}``.
    """
    alpha = complex(alpha)
    if abs(abs(alpha) - 1) <= UNIMODULAR_TOL:
        raise UnimodularAlpha(f"|alpha| = 1 (alpha = {alpha})")
    if abs(alpha) < 1:
        if not swap:
            raise PreconditionError("|alpha| < 1 needs swap=True")
        if alpha == 0:
            return np.ones(N)
        alpha = 1 / alpha
    beta = alpha / abs(alpha) ** 2
    c = np.sqrt(np.cumsum(abs(beta) ** (2 * np.arange(N + 1))))
    return c[:-1] / c[1:]


def slice_subdiagonal(model: QuotientModel, var: int = 0, upto: int | None = None) -> np.ndarray:
    """Entries ``<C f_d, f_{d+1}>`` when every quotient slice is one-dimensional."""
    deg = model.grid.total_degrees
    F = model.quot_frame
    col_deg = np.array([deg[np.argmax(np.abs(F[:, j]))] for j in range(F.shape[1])])
    order = np.argsort(col_deg, kind="stable")
    if np.any(np.bincount(col_deg) > 1):
        raise PreconditionError("quotient slices are not one-dimensional")
    C = model.compressed_coordinate(var)[np.ix_(order, order)]
    sub = np.diag(C, -1)
    return sub if upto is None else sub[: upto + 1]


# ---------------------------------------------------------------------------
# Q_eta


def eta_spectrum_sample(etas, lams) -> np.ndarray:
    """All points of ``{eta_1(z_1) = ... = eta_n(z_n) = lam}`` for each unimodular ``lam``."""
    pts = []
    for lam in np.atleast_1d(lams):
        per_var = []
        for eta in etas:
            r = eta.preimages(lam)
            if len(r) != eta.degree or np.any(np.abs(np.abs(r) - 1) > 1e-9):
                dev = np.abs(np.abs(r) - 1).max(initial=0.0)
                raise RootfindingFailure(f"preimages of {lam} off the circle by {dev:.2e}")
            per_var.append(r)
        grids = np.meshgrid(*per_var, indexing="ij")
        pts.append(np.stack([g.ravel() for g in grids], axis=-1))
    return np.concatenate(pts, axis=0)


def polynomial_in_operators(q: MPoly, Cs) -> np.ndarray:
    """``q(C_1, ..., C_n)`` for commuting (or nearly commuting) matrices."""
    N = Cs[0].shape[0]
    out = np.zeros((N, N), dtype=complex)
    cache = {}
    for k, c in q.items():
        P = np.eye(N, dtype=complex)
        for i, e in enumerate(k):
            if e:
                key = (i, e)
                if key not in cache:
                    cache[key] = np.linalg.matrix_power(Cs[i], e)
                P = P @ cache[key]
        out += c * P
    return out


@dataclass
class VonNeumannRow:
    q: MPoly
    operator_norm: float
    boundary_sup: float
    slack: float

    @property
    def holds(self) -> bool:
        return self.operator_norm <= self.boundary_sup + self.slack


def qeta_vonneumann_check(etas, polys, grid: TruncationGrid, samples: int = 512, slack: float = 1e-3) -> list:
    model = build_submodule(EtaIdeal(tuple(etas)), grid)
    Cs = [model.compressed_coordinate(i) for i in range(grid.n)]
    lams = np.exp(2j * np.pi * np.arange(samples) / samples)
    pts = eta_spectrum_sample(etas, lams)
    rows = []
    for q in polys:
        op = operator_norm(polynomial_in_operators(q, Cs))
        sup = float(np.abs(q.evaluate(pts)).max())
        rows.append(VonNeumannRow(q, op, sup, slack))
    return rows
