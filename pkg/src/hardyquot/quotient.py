"""Truncated submodules, quotient frames and compressed multipliers.

All frames are stored in *orthonormal monomial coordinates*: coordinate ``k``
of a frame column is the coefficient of ``z^k / ||z^k||``.  In these
coordinates the space inner product is the plain Hermitian dot product, so
adjoints of compressed operators are conjugate transposes.

Truncation policy: the truncated submodule is the span of the generator
multiples ``g * z^k`` that fit entirely inside the grid.  Operators are only
trusted on the block of total degree ``<= trust_degree``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import DegenerateSpec, DimensionOverflow, GridMismatch, GridTooSmall, SpecViolation
from .lattice import CoeffVector, DiagonalSpace, TruncationGrid
from .symbols import BlaschkeProduct, InnerSymbol, MPoly, polynomial_symbol_tensor

RANK_TOL = 1e-10
MAX_BASIS_SIZE = 20000


# ---------------------------------------------------------------------------
# submodule specifications


@dataclass(frozen=True, eq=False)
class PrincipalInner:
    theta: InnerSymbol


@dataclass(frozen=True, eq=False)
class PolyIdeal:
    generators: tuple

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))


@dataclass(frozen=True, eq=False)
class RudinFinite:
    """Finite Rudin lattice: ``psis`` increasing, ``phis`` decreasing, same length."""

    psis: tuple
    phis: tuple

    def __post_init__(self):
        object.__setattr__(self, "psis", tuple(self.psis))
        object.__setattr__(self, "phis", tuple(self.phis))


@dataclass(frozen=True, eq=False)
class EtaIdeal:
    etas: tuple

    def __post_init__(self):
        object.__setattr__(self, "etas", tuple(self.etas))


@dataclass(frozen=True)
class OneDimFactor:
    """The one-dimensional quotient ``C`` (constants) used as a tensor factor."""


ONE_DIM = OneDimFactor()


@dataclass(frozen=True, eq=False)
class TensorQuotient:
    factors: tuple


def eta_generators(etas) -> list:
    """Numerators of ``eta_i(z_i) - eta_{i+1}(z_{i+1})``; the denominators are invertible."""
    n = len(etas)
    gens = []
    for i in range(n - 1):
        a, b = etas[i], etas[i + 1]
        Na, Da = (MPoly.from_univariate(a.numerator(), n, i), MPoly.from_univariate(a.denominator(), n, i))
        Nb, Db = (MPoly.from_univariate(b.numerator(), n, i + 1), MPoly.from_univariate(b.denominator(), n, i + 1))
        gens.append(Na * Db - Nb * Da)
    return gens


def _generators(spec) -> list:
    if isinstance(spec, PrincipalInner):
        return [spec.theta.numerator()]
    if isinstance(spec, PolyIdeal):
        return list(spec.generators)
    if isinstance(spec, EtaIdeal):
        for eta in spec.etas:
            if eta.degree == 0:
                raise SpecViolation("every eta_i must be a nonconstant Blaschke product")
        return eta_generators(spec.etas)
    raise TypeError(f"no generators for {type(spec).__name__}")


# ---------------------------------------------------------------------------
# linear algebra helpers


def canonical_basis(U: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ``range(U)`` built from projected coordinate vectors.

    Coordinates are visited in order, so the result does not depend on the
    arbitrary rotation an SVD returns; each column has a positive real entry
    at its pivot coordinate.
    """
    m, q = U.shape
    if q == 0:
        return U.copy()
    C = U.conj().T  # column k = coordinates of P e_k in the basis U
    W = np.zeros((q, q), dtype=complex)
    r = 0
    used = np.zeros(m, dtype=bool)
    for threshold in (0.5, 1e-2, 1e-6):
        for k in range(m):
            if r == q:
                break
            if used[k]:
                continue
            c = C[:, k]
            res = c - W[:, :r] @ (W[:, :r].conj().T @ c)
            res = res - W[:, :r] @ (W[:, :r].conj().T @ res)
            nrm = np.linalg.norm(res)
            if nrm > threshold * max(np.linalg.norm(c), 1e-300) and nrm > 1e-8:
                W[:, r] = res / nrm
                used[k] = True
                r += 1
    if r < q:
        W = np.linalg.qr(np.hstack([W[:, :r], np.eye(q, dtype=complex)]))[0][:, :q]
    return U @ W


def split_column_space(G: np.ndarray, ambient: int, tol: float = RANK_TOL):
    """Orthonormal bases of ``range(G)`` and of its orthogonal complement."""
    if G.shape[1] == 0 or not np.any(G):
        return np.zeros((ambient, 0), dtype=complex), np.eye(ambient, dtype=complex)
    U, s, _ = sla.svd(G, full_matrices=True, lapack_driver="gesvd")
    r = int(np.sum(s > tol * s[0]))
    return canonical_basis(U[:, :r]), canonical_basis(U[:, r:])


def multiplication_matrix(grid: TruncationGrid, space: DiagonalSpace, tensor: np.ndarray) -> sp.csr_matrix:
    """Truncated multiplication by a symbol in orthonormal monomial coordinates.

    ``tensor`` holds Taylor coefficients on the box ``grid.caps``; terms that
    leave the box are dropped.
    """
    norms = space.norms(grid)
    exps = grid.exponents
    caps = np.asarray(grid.caps)
    rows, cols, data = [], [], []
    for j in zip(*np.nonzero(tensor)):
        j = np.array(j)
        target = exps + j
        mask = np.all(target <= caps, axis=1)
        if not mask.any():
            continue
        src = np.flatnonzero(mask)
        dst = grid.positions_of(target[mask])
        rows.append(dst)
        cols.append(src)
        data.append(tensor[tuple(j)] * norms[dst] / norms[src])
    if not rows:
        return sp.csr_matrix((grid.size, grid.size), dtype=complex)
    return sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(grid.size, grid.size),
        dtype=complex,
    )


def shift_matrix(grid: TruncationGrid, space: DiagonalSpace, i: int) -> sp.csr_matrix:
    tensor = np.zeros(grid.shape, dtype=complex)
    if grid.caps[i] == 0:
        return sp.csr_matrix((grid.size, grid.size), dtype=complex)
    k = [0] * grid.n
    k[i] = 1
    tensor[tuple(k)] = 1.0
    return multiplication_matrix(grid, space, tensor)


def symbol_tensor(sigma, caps) -> np.ndarray:
    if isinstance(sigma, InnerSymbol):
        return sigma.taylor_tensor(caps)
    if isinstance(sigma, BlaschkeProduct):
        return InnerSymbol(len(caps), {0: sigma}).taylor_tensor(caps)
    if isinstance(sigma, MPoly):
        return polynomial_symbol_tensor(sigma, caps)
    if np.isscalar(sigma):
        out = np.zeros(tuple(c + 1 for c in caps), dtype=complex)
        out[(0,) * len(caps)] = sigma
        return out
    raise TypeError(f"cannot multiply by {type(sigma).__name__}")


def _generator_columns(gens, grid: TruncationGrid, norms: np.ndarray):
    """Yield (total degree, column) for every multiple ``g z^k`` that fits the grid."""
    caps = np.asarray(grid.caps)
    exps = grid.exponents
    for g in gens:
        pd = np.asarray(g.partial_degrees())
        ok = np.all(exps + pd <= caps, axis=1)
        terms = list(g.items())
        term_exps = np.array([k for k, _ in terms])
        term_coef = np.array([c for _, c in terms])
        for pos in np.flatnonzero(ok):
            k = exps[pos]
            dst = grid.positions_of(term_exps + k)
            col = np.zeros(grid.size, dtype=complex)
            col[dst] = term_coef * norms[dst]
            yield col


# ---------------------------------------------------------------------------
# the model


class QuotientModel:
    """Frames for a truncated submodule and its complement, with compressed shifts."""

    def __init__(self, grid, space, sub_frame, quot_frame, trust_degree, spec=None, factors=None):
        self.grid = grid
        self.space = space
        self.sub_frame = np.asarray(sub_frame, dtype=complex)
        self.quot_frame = np.asarray(quot_frame, dtype=complex)
        self.trust_degree = int(trust_degree)
        self.spec = spec
        self.factors = factors
        self._norms = space.norms(grid)
        self._shifts = tuple(shift_matrix(grid, space, i) for i in range(grid.n))
        self._compressed = tuple(self._compress(M) for M in self._shifts)
        for a in (self.sub_frame, self.quot_frame):
            a.setflags(write=False)

    def __repr__(self):
        name = type(self.spec).__name__ if self.spec is not None else "custom"
        return f"QuotientModel({name}, caps={self.grid.caps}, dim_quot={self.dim_quot}, trust={self.trust_degree})"

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def dim_quot(self) -> int:
        return self.quot_frame.shape[1]

    @property
    def dim_sub(self) -> int:
        return self.sub_frame.shape[1]

    def _compress(self, M) -> np.ndarray:
        F = self.quot_frame
        return F.conj().T @ (M @ F)

    def shift(self, i: int) -> sp.csr_matrix:
        return self._shifts[i]

    def compressed_coordinate(self, i: int) -> np.ndarray:
        return self._compressed[i]

    def compressed_multiplier(self, sigma) -> np.ndarray:
        M = multiplication_matrix(self.grid, self.space, symbol_tensor(sigma, self.grid.caps))
        return self._compress(M)

    # coordinates ------------------------------------------------------------
    def to_orthonormal(self, v: CoeffVector) -> np.ndarray:
        if v.grid != self.grid:
            raise GridMismatch("vector and model live on different grids")
        return v.entries * self._norms

    def from_orthonormal(self, x: np.ndarray) -> CoeffVector:
        return CoeffVector(self.grid, np.asarray(x) / self._norms)

    def quot_coordinates(self, v: CoeffVector) -> np.ndarray:
        return self.quot_frame.conj().T @ self.to_orthonormal(v)

    def embed(self, coords: np.ndarray) -> CoeffVector:
        return self.from_orthonormal(self.quot_frame @ coords)

    def constant_vector(self) -> np.ndarray:
        """Quotient coordinates of the normalized constant function (if it lies in the quotient)."""
        e = np.zeros(self.grid.size, dtype=complex)
        e[0] = 1.0
        c = self.quot_frame.conj().T @ e
        return c / np.linalg.norm(c)

    def trust_positions(self) -> np.ndarray:
        return np.flatnonzero(self.grid.total_degrees <= self.trust_degree)

    def frame_residuals(self) -> dict:
        F, S = self.quot_frame, self.sub_frame
        return {
            "quot_orthonormal": float(np.abs(F.conj().T @ F - np.eye(F.shape[1])).max(initial=0.0)),
            "sub_orthonormal": float(np.abs(S.conj().T @ S - np.eye(S.shape[1])).max(initial=0.0)),
            "cross": float(np.abs(S.conj().T @ F).max(initial=0.0)),
            "rank_deficit": int(self.grid.size - F.shape[1] - S.shape[1]),
        }


# ---------------------------------------------------------------------------
# construction


def _trust(grid, gen_degree) -> int:
    return min(grid.caps) - gen_degree - 1


def _from_generators(gens, grid, space, spec, allow_untrusted=False) -> QuotientModel:
    if not gens or all(g.is_zero() for g in gens):
        raise DegenerateSpec("submodule needs at least one nonzero generator")
    for g in gens:
        if g.n != grid.n:
            raise GridMismatch(f"generator in {g.n} variables, grid has {grid.n}")
    max_deg = max(g.degree for g in gens)
    if any(pd > cap for g in gens for pd, cap in zip(g.partial_degrees(), grid.caps)):
        raise GridTooSmall(f"generator degrees exceed caps {grid.caps}")
    trust = _trust(grid, max_deg)
    if trust < 1 and not allow_untrusted:
        raise GridTooSmall(f"trust degree {trust} < 1 for caps {grid.caps}; enlarge the grid")
    norms = space.norms(grid)
    cols = list(_generator_columns(gens, grid, norms))
    N = grid.size
    sub = np.zeros((N, 0), dtype=complex)
    quot = np.zeros((N, 0), dtype=complex)
    if all(g.is_homogeneous for g in gens):
        G = np.array(cols).T if cols else np.zeros((N, 0), dtype=complex)
        degs = grid.total_degrees
        col_deg = np.array([degs[np.flatnonzero(c)[0]] for c in cols], dtype=int) if cols else np.zeros(0, int)
        subs, quots = [], []
        for d in range(int(degs.max()) + 1):
            rows = np.flatnonzero(degs == d)
            Gd = G[np.ix_(rows, np.flatnonzero(col_deg == d))]
            s_d, q_d = split_column_space(Gd, len(rows))
            for block, acc in ((s_d, subs), (q_d, quots)):
                full = np.zeros((N, block.shape[1]), dtype=complex)
                full[rows] = block
                acc.append(full)
        sub = np.hstack(subs)
        quot = np.hstack(quots)
    else:
        G = np.array(cols).T if cols else np.zeros((N, 0), dtype=complex)
        sub, quot = split_column_space(G, N)
    return QuotientModel(grid, space, sub, quot, trust, spec)


def _multiset_contains(big, small, tol=1e-12) -> bool:
    pool = list(big)
    for a in small:
        for j, b in enumerate(pool):
            if abs(a - b) <= tol:
                del pool[j]
                break
        else:
            return False
    return True


def _check_rudin(spec: RudinFinite):
    if len(spec.psis) != len(spec.phis) or not spec.psis:
        raise SpecViolation("Rudin lattice needs equally many psi and phi (at least one)")
    for k in range(len(spec.psis) - 1):
        a, b = spec.psis[k], spec.psis[k + 1]
        if not (b.degree > a.degree and _multiset_contains(b.zeros, a.zeros)):
            raise SpecViolation(f"psi_{k+1}/psi_{k} is not a nonconstant Blaschke product")
        a, b = spec.phis[k], spec.phis[k + 1]
        if not (a.degree > b.degree and _multiset_contains(a.zeros, b.zeros)):
            raise SpecViolation(f"phi_{k}/phi_{k+1} is not a nonconstant Blaschke product")


def _kron_frames(frames, grid) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for F in frames:
        out = np.kron(out, F)
    return out[grid.pos_to_box]


def _one_var_frames(B: BlaschkeProduct, cap: int, space: DiagonalSpace):
    if B.degree == 0:
        return np.zeros((cap + 1, 0), dtype=complex)
    grid = TruncationGrid((cap,))
    gen = MPoly.from_univariate(B.numerator())
    m = _from_generators([gen], grid, space, None, allow_untrusted=True)
    return m.quot_frame


def _build_rudin(spec: RudinFinite, grid, space, allow_untrusted=False) -> QuotientModel:
    _check_rudin(spec)
    if grid.n != 2:
        raise GridMismatch("Rudin quotient modules live in two variables")
    s1, s2 = space.factor(0), space.factor(1)
    deg = max(spec.psis[-1].degree, spec.phis[0].degree)
    if deg > min(grid.caps):
        raise GridTooSmall(f"Blaschke degree {deg} exceeds caps {grid.caps}")
    trust = _trust(grid, deg)
    if trust < 1 and not allow_untrusted:
        raise GridTooSmall(f"trust degree {trust} < 1 for caps {grid.caps}")
    blocks = []
    prev = np.zeros((grid.caps[0] + 1, 0), dtype=complex)
    for psi, phi in zip(spec.psis, spec.phis):
        cur = _one_var_frames(psi, grid.caps[0], s1)
        diff = cur - prev @ (prev.conj().T @ cur)
        U, s, _ = np.linalg.svd(diff, full_matrices=False)
        r = int(np.sum(s > RANK_TOL * (s[0] if s.size else 1.0)))
        A = canonical_basis(U[:, :r])
        Bf = _one_var_frames(phi, grid.caps[1], s2)
        if A.shape[1] and Bf.shape[1]:
            blocks.append(_kron_frames([A, Bf], grid))
        prev = cur
    quot = np.hstack(blocks) if blocks else np.zeros((grid.size, 0), dtype=complex)
    sub = _complement(quot)
    return QuotientModel(grid, space, sub, quot, trust, spec)


def _complement(F: np.ndarray) -> np.ndarray:
    N, q = F.shape
    if q == 0:
        return np.eye(N, dtype=complex)
    U, s, _ = sla.svd(F, full_matrices=True, lapack_driver="gesvd")
    return canonical_basis(U[:, q:])


def build_submodule(spec, grid: TruncationGrid, space: DiagonalSpace | None = None, *, allow_untrusted: bool = False) -> QuotientModel:
    """Truncate the submodule described by ``spec`` to ``grid`` and split the grid space.

    ``allow_untrusted`` skips the ``GridTooSmall`` check for models whose trust
    degree is below one (useful for pure rank/dimension bookkeeping).
    """
    space = space or DiagonalSpace.hardy(grid.n)
    if space.n != grid.n:
        raise GridMismatch(f"space has {space.n} variables, grid has {grid.n}")
    if grid.size > MAX_BASIS_SIZE:
        raise DimensionOverflow(f"basis size {grid.size} exceeds {MAX_BASIS_SIZE}")
    if isinstance(spec, RudinFinite):
        return _build_rudin(spec, grid, space, allow_untrusted)
    if isinstance(spec, TensorQuotient):
        raise TypeError("use tensor_quotient() for tensor products of one-variable models")
    if isinstance(spec, PrincipalInner) and spec.theta.n != grid.n:
        raise GridMismatch(f"symbol in {spec.theta.n} variables, grid has {grid.n}")
    return _from_generators(_generators(spec), grid, space, spec, allow_untrusted)


def one_variable_model(B: BlaschkeProduct, cap: int, space: DiagonalSpace | None = None) -> QuotientModel:
    """``Q_B`` inside a one-variable grid (the trust degree may be small)."""
    space = space or DiagonalSpace.hardy(1)
    grid = TruncationGrid((cap,))
    return _from_generators([InnerSymbol(1, {0: B}).numerator()], grid, space, PrincipalInner(InnerSymbol(1, {0: B})), allow_untrusted=True)


def full_space_model(cap: int, space: DiagonalSpace | None = None) -> QuotientModel:
    """The whole truncated one-variable space as a (trivial) quotient."""
    space = space or DiagonalSpace.hardy(1)
    grid = TruncationGrid((cap,))
    N = grid.size
    return QuotientModel(grid, space, np.zeros((N, 0), complex), np.eye(N, dtype=complex), cap, None)


def tensor_quotient(factors, max_basis_size: int = MAX_BASIS_SIZE) -> QuotientModel:
    """Tensor product of one-variable quotient models (``ONE_DIM`` for a factor ``C``)."""
    models = []
    for f in factors:
        if isinstance(f, OneDimFactor):
            grid = TruncationGrid((0,))
            models.append(QuotientModel(grid, DiagonalSpace.hardy(1), np.zeros((1, 0), complex), np.ones((1, 1), complex), 0, f))
        elif isinstance(f, QuotientModel):
            if f.n != 1:
                raise GridMismatch("tensor factors must be one-variable models")
            models.append(f)
        else:
            raise TypeError(f"unsupported tensor factor {f!r}")
    caps = tuple(m.grid.caps[0] for m in models)
    grid = TruncationGrid(caps)
    if grid.size > max_basis_size:
        raise DimensionOverflow(f"basis size {grid.size} exceeds {max_basis_size}")
    space = DiagonalSpace(tuple(m.space.weights[0] for m in models), tuple(m.space.kinds[0] for m in models))
    quot = _kron_frames([m.quot_frame for m in models], grid)
    sub = _complement(quot)
    trusts = [m.trust_degree for m in models if m.grid.caps[0] > 0]
    trust = min(trusts) if trusts else 0
    return QuotientModel(grid, space, sub, quot, trust, TensorQuotient(tuple(factors)), factors=tuple(models))


# ---------------------------------------------------------------------------
# module-level operations


def compressed_coordinate(i: int, model: QuotientModel) -> np.ndarray:
    return model.compressed_coordinate(i)


def compressed_multiplier(sigma, model: QuotientModel) -> np.ndarray:
    return model.compressed_multiplier(sigma)


def projector_apply(model: QuotientModel, which: str, v: CoeffVector) -> CoeffVector:
    """Orthogonal projection onto the truncated submodule (``"sub"``) or quotient (``"quot"``)."""
    x = model.to_orthonormal(v)
    F = {"sub": model.sub_frame, "quot": model.quot_frame}[which.lower()]
    return model.from_orthonormal(F @ (F.conj().T @ x))
