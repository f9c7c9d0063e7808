"""Fibres of the distinguished variety ``{eta_1(z_1) = ... = eta_n(z_n)}`` and its A^{2,n} norm.

Points of the variety over ``lam`` are the cartesian products of the
per-variable preimages ``eta_j^{-1}(lam)``.  Per-variable preimages are
sorted by argument, which fixes the sheet labels used by
:func:`variety_measure`.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import CriticalValue, PreconditionError, RootfindingFailure
from .symbols import BlaschkeProduct, MPoly

DERIV_MIN = 1e-8
RESIDUAL_MAX = 1e-9
NODE_CLEARANCE = 1e-6
COLLISION = 1e-10


@dataclass(frozen=True, eq=False)
class VarietyModel:
    etas: tuple

    def __post_init__(self):
        etas = tuple(self.etas)
        if not etas or any(not isinstance(e, BlaschkeProduct) or e.degree == 0 for e in etas):
            raise PreconditionError("need nonconstant Blaschke products eta_1..eta_n")
        object.__setattr__(self, "etas", etas)

    @property
    def n(self) -> int:
        return len(self.etas)

    @property
    def m(self) -> int:
        return int(np.prod([e.degree for e in self.etas]))

    def phi(self, z) -> complex:
        return complex(self.etas[0].evaluate(np.asarray(z)[..., 0]))

    @cached_property
    def critical_values(self) -> np.ndarray:
        """Images of the critical points of every ``eta_j`` inside the disc."""
        vals = []
        for eta in self.etas:
            N, D = np.polynomial.Polynomial(eta.numerator()), np.polynomial.Polynomial(eta.denominator())
            W = N.deriv() * D - N * D.deriv()
            W = W.trim(1e-14 * max(np.abs(W.coef).max(), 1e-300))
            crit = W.roots() if W.degree() > 0 else np.zeros(0)
            crit = crit[np.abs(crit) < 1]
            vals.extend(eta.evaluate(crit))
        return np.unique(np.round(np.asarray(vals, dtype=complex), 12))


@dataclass
class Fibre:
    lam: complex
    points: np.ndarray  # (m, n)
    derivatives: np.ndarray  # (m, n)

    def __len__(self):
        return self.points.shape[0]


def _batch_preimages(eta: BlaschkeProduct, lams: np.ndarray):
    """Roots of ``N - lam D`` for many ``lam`` at once (stacked companion matrices)."""
    N, D = eta.numerator(), eta.denominator()
    d = eta.degree
    P = N[None, :] - lams[:, None] * np.pad(D, (0, len(N) - len(D)))[None, :]  # ascending
    lead = P[:, d]
    if np.any(np.abs(lead) < 1e-300):
        raise RootfindingFailure("numerator - lambda * denominator lost its leading term")
    low = P[:, :d] / lead[:, None]
    comp = np.zeros((len(lams), d, d), dtype=complex)
    comp[:, 1:, :-1] = np.eye(d - 1)
    comp[:, :, -1] = -low
    r = np.linalg.eigvals(comp)
    for _ in range(2):
        val = eta.evaluate(r) - lams[:, None]
        der = eta.derivative(r)
        step = np.where(np.abs(der) > DERIV_MIN, val / np.where(der == 0, 1, der), 0)
        r = r - step
    order = np.lexsort((np.abs(r), np.round(np.angle(r) % (2 * np.pi), 12)), axis=-1)
    r = np.take_along_axis(r, order, axis=-1)
    res = np.abs(eta.evaluate(r) - lams[:, None])
    if res.size and res.max() > RESIDUAL_MAX:
        raise RootfindingFailure(f"preimage residual {res.max():.2e} exceeds {RESIDUAL_MAX:g}")
    der = eta.derivative(r)
    if np.any(np.abs(der) < DERIV_MIN):
        bad = lams[np.any(np.abs(der) < DERIV_MIN, axis=1)][0]
        raise CriticalValue(f"{bad} is a critical value of an eta")
    return r, der


def fibre_batch(model: VarietyModel, lams):
    """Fibre points and derivatives for an array of ``lam``: shapes (L, m, n)."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex)).ravel()
    if np.any(np.abs(lams) > 1 + 1e-12):
        raise PreconditionError("|lambda| > 1")
    roots, ders = zip(*(_batch_preimages(e, lams) for e in model.etas))
    L = len(lams)
    pts, dv = [], []
    for j in range(model.n):
        shape = [L] + [1] * model.n
        shape[j + 1] = model.etas[j].degree
        full = [L] + [e.degree for e in model.etas]
        pts.append(np.broadcast_to(roots[j].reshape(shape), full).reshape(L, -1))
        dv.append(np.broadcast_to(ders[j].reshape(shape), full).reshape(L, -1))
    return np.stack(pts, -1), np.stack(dv, -1)


def fibre_points(model: VarietyModel, lam) -> Fibre:
    lam = complex(lam)
    if abs(lam) > 1 + 1e-12:
        raise PreconditionError(f"|lambda| = {abs(lam)} > 1")
    P, D = fibre_batch(model, [lam])
    return Fibre(lam, P[0], D[0])


def fibre_measure(model: VarietyModel, lam) -> np.ndarray:
    """Weights ``|eta_1'(w_1) ... eta_n'(w_n)|^-1`` of the fibre over a unimodular ``lam``."""
    if abs(abs(complex(lam)) - 1) > 1e-12:
        raise PreconditionError("the fibre measure lives over unimodular lambda")
    fib = fibre_points(model, lam)
    return 1.0 / np.prod(np.abs(fib.derivatives), axis=1)


def _as_function(f):
    if isinstance(f, MPoly):
        return f.evaluate
    if callable(f):
        return f
    c = complex(f)
    return lambda pts: np.full(np.asarray(pts).shape[0], c)


def _reconstruct(model: VarietyModel, fvals: np.ndarray, inner: Fibre, z: np.ndarray, lam) -> np.ndarray:
    """Sum over ``k`` of ``f(b_k) prod_j (lam - eta_j(z_j)) / ((b_k)_j - z_j) eta_j'((b_k)_j)``.

    ``z`` has shape (p, n); returns shape (p,).
    """
    eta_z = np.stack([e.evaluate(z[:, j]) for j, e in enumerate(model.etas)], -1)  # (p, n)
    num = lam - eta_z  # (p, n)
    den = (inner.points[None, :, :] - z[:, None, :]) * inner.derivatives[None, :, :]  # (p, m, n)
    weights = np.prod(num[:, None, :] / den, axis=2)  # (p, m)
    return weights @ fvals


def f_r_on_boundary(model: VarietyModel, f, r: float, z) -> complex:
    """The reconstruction ``f_[r]`` at a point ``z`` of the distinguished boundary of the variety."""
    z = np.asarray(z, dtype=complex)
    if z.shape != (model.n,):
        raise PreconditionError(f"point needs {model.n} coordinates")
    if np.any(np.abs(np.abs(z) - 1) > 1e-9):
        raise PreconditionError("z must lie on the torus")
    vals = np.array([e.evaluate(z[j]) for j, e in enumerate(model.etas)])
    if np.abs(vals - vals[0]).max() > 1e-9:
        raise PreconditionError("z is not on the variety")
    if not 0 <= r < 1:
        raise PreconditionError("r must lie in [0, 1)")
    lam = r * vals[0]
    inner = fibre_points(model, lam)
    if np.abs(inner.points - z[None, :]).min() < COLLISION:
        warnings.warn("fibre point collides with z; evaluating at a perturbed r", RuntimeWarning)
        return f_r_on_boundary(model, f, r * (1 - 1e-7), z)
    fvals = _as_function(f)(inner.points)
    return complex(_reconstruct(model, fvals, inner, z[None, :], lam)[0])


# ---------------------------------------------------------------------------
# the A^{2,n} norm


def _angular_nodes(model: VarietyModel, radii, angular: int):
    h = 2 * np.pi / angular
    theta = h * np.arange(angular)
    crit = model.critical_values
    if crit.size:
        hit = np.zeros(angular, dtype=bool)
        for r in radii:
            lam = r * np.exp(1j * theta)
            hit |= np.min(np.abs(lam[:, None] - crit[None, :]), axis=1) < NODE_CLEARANCE
        if hit.any():
            theta = theta + h / 2
    return theta, h


def _integrand_grid(model: VarietyModel, fun, n_w: int, radial: int, angular: int):
    """Values ``sum_w |f_[r](w)|^2 mu(w)`` on the tensor grid, plus the node weights."""
    x, wx = np.polynomial.legendre.leggauss(radial)
    r = 0.5 * (x + 1)
    wr = 0.5 * wx * r * (1 - r**2) ** n_w
    theta, h = _angular_nodes(model, r, angular)
    mu = np.exp(1j * theta)
    outer, outer_d = fibre_batch(model, mu)  # (A, m, n)
    weight = 1.0 / np.prod(np.abs(outer_d), axis=2)  # (A, m)
    eta_out = np.stack([e.evaluate(outer[..., j]) for j, e in enumerate(model.etas)], -1)  # (A, m, n)
    vals = np.zeros((radial, angular))
    for a, ra in enumerate(r):
        lam = ra * mu
        inner, inner_d = fibre_batch(model, lam)  # (A, m, n)
        m = inner.shape[1]
        fvals = np.asarray(fun(inner.reshape(-1, model.n)), dtype=complex).reshape(len(lam), m)
        num = lam[:, None, None] - eta_out  # (A, m_out, n)
        den = (inner[:, None, :, :] - outer[:, :, None, :]) * inner_d[:, None, :, :]  # (A, m_out, m_in, n)
        w = np.prod(num[:, :, None, :] / den, axis=3)
        fr = np.einsum("aok,ak->ao", w, fvals)
        vals[a] = np.sum(np.abs(fr) ** 2 * weight, axis=1)
    return vals, wr, h


def _norm_sq(model, fun, n_w, radial, angular) -> float:
    vals, wr, h = _integrand_grid(model, fun, n_w, radial, angular)
    return 2 * (n_w + 1) * float(wr @ vals.sum(axis=1)) * h


@dataclass
class A2NResult:
    norm: float
    norm_sq: float
    quadrature_error_estimate: float
    critical_values: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "norm": self.norm,
            "norm_sq": self.norm_sq,
            "quadrature_error_estimate": self.quadrature_error_estimate,
            "critical_values": [[complex(c).real, complex(c).imag] for c in self.critical_values],
        }


def a2n_report(model: VarietyModel, f, n_w: int = 0, radial: int = 64, angular: int = 128) -> A2NResult:
    """Norm with an error estimate from a run at doubled quadrature sizes."""
    if radial < 64 or angular < 128:
        raise PreconditionError("quadrature needs at least 64 radial and 128 angular nodes")
    if n_w < 0 or int(n_w) != n_w:
        raise PreconditionError("n_w must be a nonnegative integer")
    fun = _as_function(f)
    base = _norm_sq(model, fun, int(n_w), radial, angular)
    fine = _norm_sq(model, fun, int(n_w), 2 * radial, 2 * angular)
    return A2NResult(float(np.sqrt(fine)), fine, abs(fine - base), list(model.critical_values))


def a2n_norm(model: VarietyModel, f, n_w: int = 0, radial: int = 64, angular: int = 128) -> float:
    if radial < 64 or angular < 128:
        raise PreconditionError("quadrature needs at least 64 radial and 128 angular nodes")
    if n_w < 0 or int(n_w) != n_w:
        raise PreconditionError("n_w must be a nonnegative integer")
    return float(np.sqrt(_norm_sq(model, _as_function(f), int(n_w), radial, angular)))


def variety_measure(model: VarietyModel, cells, n_w: int = 0, radial: int = 64, angular: int = 128) -> float:
    """``||chi_E||^2`` for ``E`` a union of ``((theta_lo, theta_hi), sheet)`` cells.

    ``sheet`` is an index into the fibre ordering or ``None`` for every sheet.
    Experimental: the reconstruction formula is applied to a non-holomorphic
    indicator exactly as written.
    """
    cells = [((float(a) % (2 * np.pi), float(b) % (2 * np.pi) if b < 2 * np.pi else 2 * np.pi), s) for (a, b), s in cells]
    m = model.m

    def indicator(points):
        lam = model.etas[0].evaluate(points[:, 0])
        ang = np.angle(lam) % (2 * np.pi)
        out = np.zeros(points.shape[0])
        sheet = np.arange(points.shape[0]) % m
        for (lo, hi), s in cells:
            inside = (ang >= lo) & (ang < hi) if lo <= hi else (ang >= lo) | (ang < hi)
            if s is not None:
                inside &= sheet == s
            out[inside] = 1.0
        return out

    if not cells:
        return 0.0
    return _norm_sq(model, indicator, int(n_w), radial, angular)
