"""Finite Blaschke products, product-form inner symbols and sparse polynomials."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import PointOnBoundary, VariableCountMismatch


def _graded_key(k):
    return (sum(k), k)


class MPoly:
    """Polynomial in ``n`` variables stored as ``{exponent tuple: coefficient}``.

    Zero coefficients are never stored, and iteration follows graded-lex order.
    """

    __slots__ = ("n", "_terms")

    def __init__(self, n: int, terms: Mapping | None = None):
        self.n = int(n)
        clean = {}
        for k, c in (terms or {}).items():
            k = tuple(int(a) for a in k)
            if len(k) != self.n or any(a < 0 for a in k):
                raise VariableCountMismatch(f"exponent {k} does not fit {self.n} variables")
            c = complex(c)
            if c != 0:
                clean[k] = clean.get(k, 0) + c
        self._terms = {k: clean[k] for k in sorted(clean, key=_graded_key) if clean[k] != 0}

    # constructors ---------------------------------------------------------
    @classmethod
    def constant(cls, n, c=1.0):
        return cls(n, {(0,) * n: c})

    @classmethod
    def variable(cls, n, i, power=1):
        """``z_{i+1} ** power`` (``i`` is zero based)."""
        k = [0] * n
        k[i] = power
        return cls(n, {tuple(k): 1.0})

    @classmethod
    def monomial(cls, k, c=1.0):
        return cls(len(k), {tuple(k): c})

    @classmethod
    def from_univariate(cls, coeffs, n=1, var=0):
        """Ascending coefficients of a polynomial in variable ``var``."""
        terms = {}
        for j, c in enumerate(coeffs):
            k = [0] * n
            k[var] = j
            terms[tuple(k)] = c
        return cls(n, terms)

    # container protocol ---------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __iter__(self):
        return iter(self._terms)

    def __len__(self):
        return len(self._terms)

    def __getitem__(self, k):
        return self._terms.get(tuple(k), 0j)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> int:
        if not self._terms:
            return -1
        return max(sum(k) for k in self._terms)

    def partial_degrees(self) -> tuple:
        if not self._terms:
            return (0,) * self.n
        return tuple(max(k[i] for k in self._terms) for i in range(self.n))

    @property
    def is_homogeneous(self) -> bool:
        return len({sum(k) for k in self._terms}) <= 1

    def homogeneous_degree(self) -> int:
        from .errors import NotHomogeneous

        if not self._terms:
            raise NotHomogeneous("the zero polynomial has no degree")
        if not self.is_homogeneous:
            raise NotHomogeneous(f"{self} is not homogeneous")
        return self.degree

    def depends_on(self, i: int) -> bool:
        return any(k[i] > 0 for k in self._terms)

    # arithmetic -----------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, MPoly):
            if other.n != self.n:
                raise VariableCountMismatch(f"{self.n} vs {other.n} variables")
            return other
        return MPoly.constant(self.n, other)

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self._terms)
        for k, c in other.items():
            terms[k] = terms.get(k, 0) + c
        return MPoly(self.n, terms)

    __radd__ = __add__

    def __neg__(self):
        return MPoly(self.n, {k: -c for k, c in self.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        terms = {}
        for k1, c1 in self.items():
            for k2, c2 in other.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                terms[k] = terms.get(k, 0) + c1 * c2
        return MPoly(self.n, terms)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        out = MPoly.constant(self.n)
        for _ in range(int(e)):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, MPoly):
            return NotImplemented
        return self.n == other.n and self._terms == other._terms

    def allclose(self, other, tol=1e-10) -> bool:
        diff = self - other
        return all(abs(c) <= tol for _, c in diff.items())

    def __repr__(self):
        if not self._terms:
            return f"MPoly({self.n}, 0)"
        parts = []
        for k, c in self.items():
            mono = "*".join(f"z{i+1}" + (f"^{a}" if a > 1 else "") for i, a in enumerate(k) if a)
            parts.append(f"({c:.6g})" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)

    # evaluation -----------------------------------------------------------
    def evaluate(self, point) -> complex:
        point = np.asarray(point, dtype=complex)
        if point.shape[-1] != self.n:
            raise VariableCountMismatch(f"point has {point.shape[-1]} coordinates, polynomial has {self.n}")
        out = np.zeros(point.shape[:-1], dtype=complex)
        for k, c in self.items():
            out = out + c * np.prod(point ** np.array(k), axis=-1)
        return out if out.ndim else complex(out)

    __call__ = evaluate

    def swap(self, i=0, j=1) -> "MPoly":
        def sw(k):
            k = list(k)
            k[i], k[j] = k[j], k[i]
            return tuple(k)

        return MPoly(self.n, {sw(k): c for k, c in self.items()})

    def coefficient_vector(self, grid) -> np.ndarray:
        """Coefficients placed on ``grid``; raises if a term falls outside."""
        out = np.zeros(grid.size, dtype=complex)
        for k, c in self.items():
            if not grid.contains(k):
                raise ValueError(f"term z^{k} does not fit caps {grid.caps}")
            out[grid.position(k)] = c
        return out


def mpoly_add(p: MPoly, q: MPoly) -> MPoly:
    return p + q


def mpoly_multiply(p: MPoly, q: MPoly) -> MPoly:
    return p * q


def mpoly_evaluate(p: MPoly, point) -> complex:
    return p.evaluate(point)


def homogeneous_degree(p: MPoly) -> int:
    return p.homogeneous_degree()


def hardy_norm(p: MPoly) -> float:
    return float(np.sqrt(sum(abs(c) ** 2 for _, c in p.items())))


# ---------------------------------------------------------------------------
# one-variable Blaschke products


@dataclass(frozen=True)
class BlaschkeProduct:
    """``c * prod_j (z - a_j) / (1 - conj(a_j) z)`` with ``|a_j| < 1``, ``|c| = 1``."""

    zeros: tuple = ()
    const: complex = 1.0

    def __post_init__(self):
        zs = tuple(complex(a) for a in self.zeros)
        if any(abs(a) >= 1 for a in zs):
            raise ValueError(f"Blaschke zeros must lie in the open disc: {zs}")
        c = complex(self.const)
        if abs(abs(c) - 1) > 1e-12:
            raise ValueError(f"front constant must be unimodular, got {c}")
        object.__setattr__(self, "zeros", zs)
        object.__setattr__(self, "const", c)

    @classmethod
    def monomial(cls, d: int) -> "BlaschkeProduct":
        return cls((0,) * d)

    @property
    def degree(self) -> int:
        return len(self.zeros)

    def __mul__(self, other: "BlaschkeProduct") -> "BlaschkeProduct":
        return BlaschkeProduct(self.zeros + other.zeros, self.const * other.const)

    def numerator(self) -> np.ndarray:
        """Ascending coefficients of ``c * prod (z - a_j)``."""
        return self.const * np.poly(self.zeros)[::-1] if self.zeros else np.array([self.const])

    def denominator(self) -> np.ndarray:
        """Ascending coefficients of ``prod (1 - conj(a_j) z)``."""
        out = np.array([1.0 + 0j])
        for a in self.zeros:
            out = np.convolve(out, [1.0, -np.conj(a)])
        return out

    def evaluate(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, self.const, dtype=complex)
        for a in self.zeros:
            out = out * (z - a) / (1 - np.conj(a) * z)
        return out if out.ndim else complex(out)

    __call__ = evaluate

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        factors = [(z - a) / (1 - np.conj(a) * z) for a in self.zeros]
        primes = [(1 - abs(a) ** 2) / (1 - np.conj(a) * z) ** 2 for a in self.zeros]
        out = np.zeros(z.shape, dtype=complex)
        for j in range(len(self.zeros)):
            term = primes[j]
            for k, f in enumerate(factors):
                if k != j:
                    term = term * f
            out = out + term
        out = self.const * out
        return out if out.ndim else complex(out)

    def backward_shift(self, z):
        """``(B(z) - B(0)) / z`` with the removable singularity filled by ``B'(0)``."""
        z = np.asarray(z, dtype=complex)
        small = np.abs(z) < 1e-300
        safe = np.where(small, 1.0, z)
        out = np.where(small, self.derivative(0.0), (self.evaluate(safe) - self.evaluate(0.0)) / safe)
        return out if out.ndim else complex(out)

    def taylor(self, N: int) -> np.ndarray:
        return blaschke_taylor(self, N)

    def preimages(self, lam) -> np.ndarray:
        """All roots of ``B(z) = lam`` (companion-matrix eigenvalues, Newton polished)."""
        num = self.numerator()
        den = self.denominator()
        m = max(len(num), len(den))
        poly = np.zeros(m, dtype=complex)
        poly[: len(num)] += num
        poly[: len(den)] -= lam * den
        roots = np.roots(poly[::-1]) if m > 1 else np.array([], dtype=complex)
        for _ in range(2):
            val = self.evaluate(roots) - lam
            d = self.derivative(roots)
            ok = np.abs(d) > 1e-14
            roots = np.where(ok, roots - val / np.where(ok, d, 1.0), roots)
        return roots


def blaschke_taylor(B: BlaschkeProduct, N: int) -> np.ndarray:
    """First ``N + 1`` Taylor coefficients, by long division of numerator by denominator."""
    if N < 0:
        raise ValueError("N must be non-negative")
    num = B.numerator()
    den = B.denominator()
    out = np.zeros(N + 1, dtype=complex)
    for n in range(N + 1):
        acc = num[n] if n < len(num) else 0j
        for k in range(1, min(n, len(den) - 1) + 1):
            acc -= den[k] * out[n - k]
        out[n] = acc  # den[0] == 1
    return out


# ---------------------------------------------------------------------------
# multivariable inner symbols of product form


@dataclass(frozen=True)
class InnerSymbol:
    """``c * z^m * prod_i B_i(z_i)``."""

    n: int
    factors: Mapping = field(default_factory=dict)  # variable (0-based) -> BlaschkeProduct
    monomial: tuple = ()
    const: complex = 1.0

    def __post_init__(self):
        mono = tuple(int(a) for a in self.monomial) if self.monomial else (0,) * self.n
        if len(mono) != self.n or any(a < 0 for a in mono):
            raise VariableCountMismatch(f"monomial {mono} does not fit {self.n} variables")
        facs = {int(i): B for i, B in dict(self.factors).items() if B.degree > 0}
        if any(not 0 <= i < self.n for i in facs):
            raise VariableCountMismatch("factor assigned to a missing variable")
        c = complex(self.const)
        for B in facs.values():
            c *= B.const
        facs = {i: BlaschkeProduct(B.zeros) for i, B in sorted(facs.items())}
        if abs(abs(c) - 1) > 1e-12:
            raise ValueError("front constant must be unimodular")
        object.__setattr__(self, "monomial", mono)
        object.__setattr__(self, "factors", facs)
        object.__setattr__(self, "const", c)

    @classmethod
    def from_monomial(cls, k, const=1.0):
        return cls(len(k), {}, tuple(k), const)

    @classmethod
    def one_variable(cls, B: BlaschkeProduct, n: int, var: int = 0):
        return cls(n, {var: B})

    def factor(self, i: int) -> BlaschkeProduct:
        """Everything this symbol does in variable ``i``, as one Blaschke product."""
        B = self.factors.get(i, BlaschkeProduct())
        return BlaschkeProduct(B.zeros + (0,) * self.monomial[i])

    def depends_on(self, i: int) -> bool:
        return self.monomial[i] > 0 or i in self.factors

    def degrees(self) -> tuple:
        return tuple(self.factor(i).degree for i in range(self.n))

    def evaluate(self, w) -> complex:
        w = np.asarray(w, dtype=complex)
        if w.shape[-1] != self.n:
            raise VariableCountMismatch(f"point has {w.shape[-1]} coordinates, symbol has {self.n}")
        if np.any(np.abs(w) >= 1):
            raise PointOnBoundary(f"{w} is not in the open polydisc")
        return _evaluate_unchecked(self, w)

    __call__ = evaluate

    def boundary_values(self, w):
        """Evaluation without the open-polydisc check (for sampling the torus)."""
        return _evaluate_unchecked(self, np.asarray(w, dtype=complex))

    def numerator(self) -> MPoly:
        """Polynomial ``P`` with ``theta * H^2 = P * H^2`` (denominators are invertible)."""
        out = MPoly.monomial(self.monomial, self.const)
        for i, B in self.factors.items():
            out = out * MPoly.from_univariate(B.numerator(), self.n, i)
        return out

    def taylor_tensor(self, caps) -> np.ndarray:
        """Taylor coefficients on the box ``caps``, shape ``caps + 1``."""
        caps = tuple(caps)
        out = np.ones((1,) * 0, dtype=complex) * self.const
        for i in range(self.n):
            series = np.zeros(caps[i] + 1, dtype=complex)
            B = self.factors.get(i)
            base = blaschke_taylor(B, caps[i]) if B is not None else np.eye(1, caps[i] + 1)[0]
            m = self.monomial[i]
            if m <= caps[i]:
                series[m:] = base[: caps[i] + 1 - m]
            out = np.multiply.outer(out, series)
        return out

    def backward_shift_value(self, w, i: int) -> complex:
        """``(M_{z_i}^* theta)(w)`` evaluated in closed form."""
        w = np.asarray(w, dtype=complex)
        if np.any(np.abs(w) >= 1):
            raise PointOnBoundary(f"{w} is not in the open polydisc")
        rest = self.const
        for j in range(self.n):
            if j == i:
                continue
            rest *= w[j] ** self.monomial[j]
            if j in self.factors:
                rest *= self.factors[j](w[j])
        B = self.factors.get(i)
        m = self.monomial[i]
        if m > 0:
            own = w[i] ** (m - 1) * (B(w[i]) if B is not None else 1.0)
        elif B is not None:
            own = B.backward_shift(w[i])
        else:
            own = 0.0
        return complex(rest * own)


def _evaluate_unchecked(theta: InnerSymbol, w):
    out = theta.const * np.prod(w ** np.array(theta.monomial), axis=-1)
    for i, B in theta.factors.items():
        out = out * B.evaluate(w[..., i])
    return out if np.ndim(out) else complex(out)


def symbol_eval(theta: InnerSymbol, w) -> complex:
    return theta.evaluate(w)


def backward_shift_symbol(coeffs: np.ndarray, i: int) -> np.ndarray:
    """Hardy backward shift in variable ``i`` acting on a coefficient tensor."""
    coeffs = np.asarray(coeffs)
    out = np.zeros_like(coeffs)
    src = [slice(None)] * coeffs.ndim
    dst = [slice(None)] * coeffs.ndim
    src[i] = slice(1, None)
    dst[i] = slice(0, -1)
    out[tuple(dst)] = coeffs[tuple(src)]
    return out


def polynomial_symbol_tensor(p: MPoly, caps) -> np.ndarray:
    out = np.zeros(tuple(c + 1 for c in caps), dtype=complex)
    for k, c in p.items():
        if all(a <= cap for a, cap in zip(k, caps)):
            out[k] += c
    return out
