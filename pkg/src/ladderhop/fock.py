"""Fixed-particle-number bosonic Fock bases and sparse operators on them.

Basis ordering is deterministic: occupation vectors are listed in descending
lexicographic order, so the first state has every particle in the first mode.
Product bases use the row-major convention ``i = i_upper * dim_lower + i_lower``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from math import comb
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ladderhop.errors import DomainError, ResourceError

DEFAULT_DIM_CAP = 200_000


def _compositions(n: int, k: int):
    """Occupation vectors of n bosons in k modes, descending lexicographic."""
    if k == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _compositions(n - first, k - 1):
            yield (first,) + rest


@dataclass(frozen=True, eq=False)
class FockBasis:
    modes: tuple
    particles: int
    states: np.ndarray = field(repr=False)
    index: dict = field(repr=False)

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    @property
    def key(self) -> tuple:
        return ("fock", self.modes, self.particles)

    def __eq__(self, other):
        return isinstance(other, FockBasis) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def mode_index(self, mode) -> int:
        try:
            return self.modes.index(mode)
        except ValueError:
            raise DomainError(f"mode {mode!r} is not in basis modes {self.modes}") from None

    def lookup(self, occupations) -> np.ndarray:
        """Basis indices of an array of occupation vectors (-1 where absent)."""
        occ = np.atleast_2d(np.asarray(occupations, dtype=np.int64))
        return np.array([self.index.get(tuple(row), -1) for row in occ.tolist()], dtype=np.int64)

    def occupations(self) -> tuple[tuple, np.ndarray]:
        return self.modes, self.states

    @property
    def digest(self) -> str:
        return hashlib.sha1(repr(self.key).encode()).hexdigest()[:12]


def enumerate_basis(modes, particles: int, *, dim_cap: int = DEFAULT_DIM_CAP) -> FockBasis:
    modes = tuple(modes)
    if not modes:
        raise DomainError("mode set is empty")
    if len(set(modes)) != len(modes):
        raise DomainError(f"duplicate mode labels in {modes}")
    if any(not (a < b) for a, b in zip(modes, modes[1:])):
        raise DomainError(f"mode labels must be strictly increasing: {modes}")
    if particles < 0 or int(particles) != particles:
        raise DomainError(f"particle number must be a nonnegative integer, got {particles!r}")
    particles = int(particles)
    dim = comb(particles + len(modes) - 1, len(modes) - 1)
    if dim > dim_cap:
        raise ResourceError(f"Fock basis dimension {dim} exceeds cap {dim_cap}")
    states = np.array(list(_compositions(particles, len(modes))), dtype=np.int64).reshape(dim, len(modes))
    index = {tuple(row): k for k, row in enumerate(states.tolist())}
    return FockBasis(modes, particles, states, index)


@dataclass(frozen=True, eq=False)
class ProductBasis:
    upper: FockBasis
    lower: FockBasis

    @property
    def dim(self) -> int:
        return self.upper.dim * self.lower.dim

    @property
    def particles(self) -> int:
        return self.upper.particles + self.lower.particles

    @property
    def key(self) -> tuple:
        return ("product", self.upper.key, self.lower.key)

    @property
    def modes(self) -> tuple:
        """Union of both sectors' mode labels, sorted."""
        return tuple(sorted(set(self.upper.modes) | set(self.lower.modes)))

    def __eq__(self, other):
        return isinstance(other, ProductBasis) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def composite(self, i_upper, i_lower):
        return np.asarray(i_upper) * self.lower.dim + np.asarray(i_lower)

    def occupations(self) -> tuple[tuple, np.ndarray]:
        """(mode labels, dim x n_modes occupation array) summed over both sectors."""
        modes = self.modes
        col = {m: k for k, m in enumerate(modes)}
        up = np.zeros((self.upper.dim, len(modes)), dtype=np.int64)
        lo = np.zeros((self.lower.dim, len(modes)), dtype=np.int64)
        for k, m in enumerate(self.upper.modes):
            up[:, col[m]] = self.upper.states[:, k]
        for k, m in enumerate(self.lower.modes):
            lo[:, col[m]] = self.lower.states[:, k]
        occ = (up[:, None, :] + lo[None, :, :]).reshape(self.dim, len(modes))
        return modes, occ

    @property
    def digest(self) -> str:
        return hashlib.sha1(repr(self.key).encode()).hexdigest()[:12]


def product_basis(upper: FockBasis, lower: FockBasis, *, dim_cap: int = DEFAULT_DIM_CAP) -> ProductBasis:
    dim = upper.dim * lower.dim
    if dim > dim_cap:
        raise ResourceError(f"product basis dimension {dim} exceeds cap {dim_cap}")
    return ProductBasis(upper, lower)


def occupations(basis) -> tuple[tuple, np.ndarray]:
    return basis.occupations()


def _is_hermitian(mat: sp.spmatrix, tol: float = 1e-12) -> bool:
    diff = (mat - mat.getH()).tocoo()
    return diff.nnz == 0 or float(np.max(np.abs(diff.data), initial=0.0)) < tol


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Sparse matrix tied to a basis. Arithmetic checks that bases agree."""

    basis: object
    matrix: sp.csr_matrix
    hermitian: bool = False

    def __post_init__(self):
        n = self.basis.dim
        if self.matrix.shape != (n, n):
            raise DomainError(f"matrix shape {self.matrix.shape} does not match basis dimension {n}")
        object.__setattr__(self, "matrix", sp.csr_matrix(self.matrix))

    @property
    def shape(self):
        return self.matrix.shape

    def _same(self, other: "SparseOperator"):
        if not isinstance(other, SparseOperator):
            return NotImplemented
        if self.basis != other.basis:
            raise DomainError("operators live on different bases")
        return None

    def __matmul__(self, other):
        if isinstance(other, np.ndarray):
            return self.matrix @ other
        if self._same(other) is NotImplemented:
            return NotImplemented
        return compose(self, other)

    def __add__(self, other):
        if self._same(other) is NotImplemented:
            return NotImplemented
        return SparseOperator(self.basis, self.matrix + other.matrix, self.hermitian and other.hermitian)

    def __sub__(self, other):
        if self._same(other) is NotImplemented:
            return NotImplemented
        return SparseOperator(self.basis, self.matrix - other.matrix, self.hermitian and other.hermitian)

    def __neg__(self):
        return SparseOperator(self.basis, -self.matrix, self.hermitian)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return scale(self, scalar)

    __rmul__ = __mul__

    def adjoint(self) -> "SparseOperator":
        return SparseOperator(self.basis, self.matrix.getH().tocsr(), self.hermitian)

    @property
    def H(self) -> "SparseOperator":
        return self.adjoint()

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def expectation(self, psi: np.ndarray) -> complex:
        return np.vdot(psi, self.matrix @ psi)

    def check_hermitian(self, tol: float = 1e-12) -> bool:
        return _is_hermitian(self.matrix, tol)

    def dump(self, path) -> None:
        """Write ``row col re im`` triplets; header records the basis digest."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        lines = [f"# basis {self.basis.digest} dim {self.basis.dim} nnz {coo.nnz} hermitian {int(self.hermitian)}"]
        data = coo.data.astype(complex)
        for k in order:
            lines.append(f"{coo.row[k]} {coo.col[k]} {data[k].real:.17g} {data[k].imag:.17g}")
        Path(path).write_text("\n".join(lines) + "\n")


def load_triplets(path, basis) -> SparseOperator:
    rows, cols, vals, herm = [], [], [], False
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            tokens = line[1:].split()
            head = dict(zip(tokens[::2], tokens[1::2]))
            if head.get("basis") != basis.digest:
                raise DomainError("triplet file was written for a different basis")
            herm = head.get("hermitian") == "1"
            continue
        r, c, re, im = line.split()
        rows.append(int(r))
        cols.append(int(c))
        vals.append(complex(float(re), float(im)))
    vals = np.array(vals, dtype=complex)
    if not np.any(vals.imag):
        vals = vals.real
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim))
    return SparseOperator(basis, mat, herm)


def identity(basis) -> SparseOperator:
    return SparseOperator(basis, sp.identity(basis.dim, format="csr"), True)


def zero(basis) -> SparseOperator:
    return SparseOperator(basis, sp.csr_matrix((basis.dim, basis.dim)), True)


def diagonal_operator(basis, values) -> SparseOperator:
    values = np.asarray(values)
    return SparseOperator(basis, sp.diags(values, format="csr"), bool(np.all(np.isreal(values))))


def compose(a: SparseOperator, b: SparseOperator) -> SparseOperator:
    if a.basis != b.basis:
        raise DomainError("cannot compose operators on different bases")
    mat = (a.matrix @ b.matrix).tocsr()
    herm = _is_hermitian(mat) if (a.hermitian or b.hermitian) else False
    return SparseOperator(a.basis, mat, herm)


def add(a: SparseOperator, b: SparseOperator) -> SparseOperator:
    return a + b


def scale(a: SparseOperator, scalar) -> SparseOperator:
    herm = a.hermitian and np.isreal(scalar)
    return SparseOperator(a.basis, a.matrix * scalar, bool(herm))


def adjoint(a: SparseOperator) -> SparseOperator:
    return a.adjoint()


def build_bilinear(basis: FockBasis, m_dst, m_src, weight=1.0) -> SparseOperator:
    """weight * a^dag_{m_dst} a_{m_src}."""
    dst = basis.mode_index(m_dst)
    src = basis.mode_index(m_src)
    states = basis.states
    if dst == src:
        vals = weight * states[:, src].astype(float)
        return SparseOperator(basis, sp.diags(vals, format="csr"), bool(np.isreal(weight)))
    cols = np.nonzero(states[:, src] > 0)[0]
    new = states[cols].copy()
    amp = np.sqrt(new[:, src] * (new[:, dst] + 1.0))
    new[:, src] -= 1
    new[:, dst] += 1
    rows = basis.lookup(new)
    mat = sp.csr_matrix((weight * amp, (rows, cols)), shape=(basis.dim, basis.dim))
    return SparseOperator(basis, mat, False)


def number_operator(basis: FockBasis, mode) -> SparseOperator:
    return build_bilinear(basis, mode, mode, 1.0)


def embed(op: SparseOperator, product: ProductBasis, sector: str) -> SparseOperator:
    """op (x) 1 for sector='upper', 1 (x) op for sector='lower'."""
    if sector == "upper":
        if op.basis != product.upper:
            raise DomainError("operator basis does not match the upper sector")
        mat = sp.kron(op.matrix, sp.identity(product.lower.dim), format="csr")
    elif sector == "lower":
        if op.basis != product.lower:
            raise DomainError("operator basis does not match the lower sector")
        mat = sp.kron(sp.identity(product.upper.dim), op.matrix, format="csr")
    else:
        raise DomainError(f"sector must be 'upper' or 'lower', got {sector!r}")
    return SparseOperator(product, mat, op.hermitian)


def mode_bilinear(basis, m_dst, m_src, weight=1.0) -> SparseOperator:
    """Bilinear on a Fock or product basis; on a product basis the sector
    terms are embedded and summed over every sector that holds both modes."""
    if isinstance(basis, FockBasis):
        return build_bilinear(basis, m_dst, m_src, weight)
    total = None
    for name in ("upper", "lower"):
        sec = getattr(basis, name)
        if m_dst in sec.modes and m_src in sec.modes:
            term = embed(build_bilinear(sec, m_dst, m_src, weight), basis, name)
            total = term if total is None else total + term
    return zero(basis) if total is None else total


def sector_labels(basis, weights: dict) -> np.ndarray:
    """Integer label of the conserved charge sum_m w_m n_m per basis state
    (weights are doubled and rounded so half-integer charges stay exact)."""
    modes, occ = basis.occupations()
    w = np.array([weights.get(m, 0.0) for m in modes])
    return np.rint(2 * (occ @ w)).astype(np.int64)


def split_sectors(labels: np.ndarray) -> list[np.ndarray]:
    """Index arrays grouped by label, in ascending label order."""
    order = np.argsort(labels, kind="stable")
    uniq, starts = np.unique(labels[order], return_index=True)
    bounds = list(starts[1:]) + [len(order)]
    return [np.sort(order[a:b]) for a, b in zip(starts, bounds)]
