"""Monomial bases of truncated tensor-product analytic Hilbert spaces.

A vector is stored as the Taylor coefficients of a polynomial whose exponents
lie in the box ``{k : k_i <= caps_i}``, enumerated in graded-lexicographic
order.  Inner products are weighted by the squared monomial norms of a
:class:`DiagonalSpace`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from math import comb
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatch, GridMismatch, PointOnBoundary

MultiIndex = tuple  # tuple[int, ...]


@dataclass(frozen=True)
class TruncationGrid:
    """Per-variable degree caps ``D_1, ..., D_n`` and the induced monomial basis."""

    caps: tuple

    def __post_init__(self):
        caps = tuple(int(c) for c in self.caps)
        if len(caps) == 0 or any(c < 0 for c in caps):
            raise ValueError(f"invalid caps {self.caps!r}")
        object.__setattr__(self, "caps", caps)

    @classmethod
    def cube(cls, n: int, cap: int) -> "TruncationGrid":
        return cls((cap,) * n)

    @property
    def n(self) -> int:
        return len(self.caps)

    @property
    def size(self) -> int:
        return int(np.prod([c + 1 for c in self.caps]))

    @property
    def shape(self) -> tuple:
        return tuple(c + 1 for c in self.caps)

    @cached_property
    def indices(self) -> tuple:
        box = itertools.product(*(range(c + 1) for c in self.caps))
        return tuple(sorted(box, key=lambda k: (sum(k), k)))

    @cached_property
    def exponents(self) -> np.ndarray:
        return np.array(self.indices, dtype=np.int64).reshape(self.size, self.n)

    @cached_property
    def total_degrees(self) -> np.ndarray:
        return self.exponents.sum(axis=1)

    @cached_property
    def _positions(self) -> dict:
        return {k: i for i, k in enumerate(self.indices)}

    @cached_property
    def box_to_pos(self) -> np.ndarray:
        """``box_to_pos[flat C-order box index] = graded-lex position``."""
        flat = np.ravel_multi_index(self.exponents.T, self.shape)
        out = np.empty(self.size, dtype=np.int64)
        out[flat] = np.arange(self.size)
        return out

    @cached_property
    def pos_to_box(self) -> np.ndarray:
        return np.ravel_multi_index(self.exponents.T, self.shape)

    def position(self, k) -> int:
        return self._positions[tuple(k)]

    def contains(self, k) -> bool:
        return len(k) == self.n and all(0 <= a <= c for a, c in zip(k, self.caps))

    def positions_of(self, exps: np.ndarray) -> np.ndarray:
        """Vectorised lookup; ``exps`` must lie inside the box."""
        return self.box_to_pos[np.ravel_multi_index(np.asarray(exps).T, self.shape)]

    def degree_slice(self, d: int) -> np.ndarray:
        return np.flatnonzero(self.total_degrees == d)

    def to_box(self, entries: np.ndarray) -> np.ndarray:
        """Reshape a graded-lex vector into an array of shape ``caps + 1``."""
        out = np.zeros(self.size, dtype=np.result_type(entries, np.complex128))
        out[self.pos_to_box] = entries
        return out.reshape(self.shape)

    def from_box(self, tensor: np.ndarray) -> np.ndarray:
        return np.asarray(tensor).reshape(-1)[self.pos_to_box]


def enumerate_basis(grid: TruncationGrid) -> list:
    return list(grid.indices)


def hardy_weights(j: np.ndarray) -> np.ndarray:
    return np.ones_like(np.asarray(j), dtype=float)


def bergman_weights(alpha: int = 0) -> Callable:
    """Kernel coefficients of L^2_{a,alpha}(D): ``(1 - z conj(w))^{-(2+alpha)}``."""
    if alpha <= -1 or int(alpha) != alpha:
        raise ValueError("alpha must be an integer > -1")
    alpha = int(alpha)

    def beta(j):
        j = np.asarray(j)
        return np.array([comb(int(x) + alpha + 1, int(x)) for x in j.ravel()], dtype=float).reshape(j.shape)

    return beta


@dataclass(frozen=True)
class DiagonalSpace:
    """Tensor product of one-variable spaces with orthogonal monomials.

    ``weights[i](j)`` returns the kernel coefficient ``beta_j`` of variable ``i``;
    the monomial norm is ``||z^j|| = beta_j ** -0.5``.
    """

    weights: tuple
    kinds: tuple = field(default=())

    @classmethod
    def hardy(cls, n: int) -> "DiagonalSpace":
        return cls((hardy_weights,) * n, ("hardy",) * n)

    @classmethod
    def bergman(cls, n: int, alpha: int = 0) -> "DiagonalSpace":
        return cls((bergman_weights(alpha),) * n, (f"bergman({alpha})",) * n)

    @classmethod
    def from_sequences(cls, seqs: Sequence[Sequence[float]]) -> "DiagonalSpace":
        arrays = [np.asarray(s, dtype=float) for s in seqs]
        if any(np.any(a <= 0) for a in arrays):
            raise ValueError("weight sequences must be strictly positive")

        def make(a):
            def beta(j):
                j = np.asarray(j)
                if np.any(j >= len(a)):
                    raise ValueError("weight sequence too short for requested degree")
                return a[j]
            return beta

        return cls(tuple(make(a) for a in arrays), ("custom",) * len(arrays))

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def is_hardy(self) -> bool:
        return all(k == "hardy" for k in self.kinds)

    def factor(self, i: int) -> "DiagonalSpace":
        kinds = (self.kinds[i],) if self.kinds else ()
        return DiagonalSpace((self.weights[i],), kinds)

    def norms(self, grid: TruncationGrid) -> np.ndarray:
        """Monomial norms ``||z^k||`` for every basis position of ``grid``."""
        if grid.n != self.n:
            raise GridMismatch(f"space has {self.n} variables, grid has {grid.n}")
        if self.is_hardy:
            return np.ones(grid.size)
        out = np.ones(grid.size)
        for i, beta in enumerate(self.weights):
            out = out / np.sqrt(beta(grid.exponents[:, i]))
        return out


def monomial_norm(k, space: DiagonalSpace) -> float:
    k = tuple(int(a) for a in k)
    if len(k) != space.n or any(a < 0 for a in k):
        raise ValueError(f"bad multi-index {k!r}")
    return float(np.prod([space.weights[i](np.array([a]))[0] ** -0.5 for i, a in enumerate(k)]))


@dataclass(frozen=True, eq=False)
class CoeffVector:
    """Taylor coefficients on a grid (graded-lex order)."""

    grid: TruncationGrid
    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.complex128)
        if entries.shape != (self.grid.size,):
            raise DimensionMismatch(f"expected {self.grid.size} entries, got {entries.shape}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.size))

    @classmethod
    def monomial(cls, grid, k, coeff=1.0):
        e = np.zeros(grid.size, dtype=complex)
        e[grid.position(k)] = coeff
        return cls(grid, e)

    def _check(self, other):
        if not isinstance(other, CoeffVector) or other.grid != self.grid:
            raise GridMismatch("vectors live on different grids")

    def __add__(self, other):
        self._check(other)
        return CoeffVector(self.grid, self.entries + other.entries)

    def __sub__(self, other):
        self._check(other)
        return CoeffVector(self.grid, self.entries - other.entries)

    def __mul__(self, scalar):
        return CoeffVector(self.grid, self.entries * scalar)

    __rmul__ = __mul__

    def coefficient(self, k) -> complex:
        return complex(self.entries[self.grid.position(k)])


def inner(u: CoeffVector, v: CoeffVector, space: DiagonalSpace) -> complex:
    """``<u, v>`` in the space, linear in ``u`` and conjugate-linear in ``v``."""
    if u.grid != v.grid:
        raise GridMismatch("vectors live on different grids")
    w = space.norms(u.grid) ** 2
    return complex(np.sum(u.entries * np.conj(v.entries) * w))


def norm(u: CoeffVector, space: DiagonalSpace) -> float:
    return float(np.sqrt(max(inner(u, u, space).real, 0.0)))


def _check_interior(w) -> np.ndarray:
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    if np.any(np.abs(w) >= 1):
        raise PointOnBoundary(f"point {w} is not in the open polydisc")
    return w


def tail_factor(w, caps) -> float:
    """``prod_i |w_i|^(D_i + 1)``: the per-probe truncation scale."""
    w = _check_interior(w)
    return float(np.prod(np.abs(w) ** (np.asarray(caps) + 1)))


def kernel_vector(w, grid: TruncationGrid, space: DiagonalSpace | None = None):
    """Truncation of the normalized Szego kernel ``K_w`` and the norm of what was cut.

    Returns ``(CoeffVector, tail_norm)`` with ``||trunc||^2 + tail_norm^2 == 1``.
    """
    if space is not None and not space.is_hardy:
        raise NotImplementedError("kernel vectors are only available for the Hardy space")
    w = _check_interior(w)
    if len(w) != grid.n:
        raise DimensionMismatch(f"point has {len(w)} coordinates, grid has {grid.n} variables")
    scale = np.prod(np.sqrt(1 - np.abs(w) ** 2))
    powers = np.prod(np.conj(w)[None, :] ** grid.exponents, axis=1)
    # 1 - prod(1 - x_i) without cancellation
    log_kept = np.sum(np.log1p(-np.abs(w) ** (2 * (np.asarray(grid.caps) + 1))))
    tail = float(np.sqrt(-np.expm1(log_kept)))
    return CoeffVector(grid, scale * powers), tail
