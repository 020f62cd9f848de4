"""Exact sparse linear algebra over prime fields and the rationals.

Every rank in the package goes through :func:`rank`. A sparse matrix is first
split into the connected components of its row/column incidence graph (the
Koszul and resolution matrices are block diagonal for the fine lattice
grading, so the blocks are small) and each block is eliminated densely: with a
numba kernel modulo a prime, or with fraction-free Bareiss elimination over Z
when the rationals are requested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numba
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from koszulcoh.errors import ConfigurationError

DEFAULT_PRIME = 32003
SECOND_PRIME = 65537
# keeps (p-1)**2 well inside int64
MAX_MODULUS = 2**31


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    for d in range(3, math.isqrt(n) + 1, 2):
        if n % d == 0:
            return False
    return True


@dataclass(frozen=True)
class FieldSpec:
    """Either ``GF(modulus)`` or ``Q``."""

    kind: str = "prime-field"
    modulus: int | None = DEFAULT_PRIME

    def __post_init__(self) -> None:
        if self.kind == "rationals":
            if self.modulus is not None:
                raise ConfigurationError("the rational field takes no modulus")
        elif self.kind == "prime-field":
            if self.modulus is None or not is_prime(self.modulus):
                raise ConfigurationError(f"modulus {self.modulus!r} is not prime")
            if self.modulus >= MAX_MODULUS:
                raise ConfigurationError(f"modulus {self.modulus} exceeds {MAX_MODULUS}")
        else:
            raise ConfigurationError(f"unknown field kind {self.kind!r}")

    @classmethod
    def prime(cls, modulus: int = DEFAULT_PRIME) -> "FieldSpec":
        return cls("prime-field", modulus)

    @classmethod
    def rationals(cls) -> "FieldSpec":
        return cls("rationals", None)

    @property
    def is_prime_field(self) -> bool:
        return self.kind == "prime-field"

    def __str__(self) -> str:
        return "QQ" if self.kind == "rationals" else f"GF({self.modulus})"


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Immutable sparse integer matrix in coordinate form.

    Entries are exact integers; over a prime field they are read modulo the
    characteristic. No duplicate coordinates and no stored zeros.
    """

    n_rows: int
    n_cols: int
    rows: np.ndarray = field(repr=False)
    cols: np.ndarray = field(repr=False)
    vals: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.n_rows < 0 or self.n_cols < 0:
            raise ConfigurationError("negative matrix dimension")
        for name in ("rows", "cols", "vals"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (len(self.rows) == len(self.cols) == len(self.vals)):
            raise ConfigurationError("coordinate arrays differ in length")
        if len(self.rows):
            if self.rows.min() < 0 or self.rows.max() >= self.n_rows:
                raise ConfigurationError("row index out of range")
            if self.cols.min() < 0 or self.cols.max() >= self.n_cols:
                raise ConfigurationError("column index out of range")
            if np.any(self.vals == 0):
                raise ConfigurationError("stored zero entry")
            keys = self.rows * self.n_cols + self.cols
            if len(np.unique(keys)) != len(keys):
                raise ConfigurationError("duplicate (row, col) entry")

    @classmethod
    def from_entries(
        cls, n_rows: int, n_cols: int, entries: Iterable[tuple[int, int, int]]
    ) -> "SparseMatrix":
        triples = [(r, c, v) for r, c, v in entries if v != 0]
        if triples:
            r, c, v = (np.array(x, dtype=np.int64) for x in zip(*triples))
        else:
            r = c = v = np.zeros(0, dtype=np.int64)
        return cls(n_rows, n_cols, r, c, v)

    @classmethod
    def from_dense(cls, rows: Sequence[Sequence[int]]) -> "SparseMatrix":
        a = np.asarray(rows, dtype=np.int64)
        if a.ndim != 2:
            a = a.reshape(len(rows), -1)
        r, c = np.nonzero(a)
        return cls(a.shape[0], a.shape[1], r, c, a[r, c])

    @classmethod
    def zero(cls, n_rows: int, n_cols: int) -> "SparseMatrix":
        return cls.from_entries(n_rows, n_cols, ())

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        idx = np.arange(n, dtype=np.int64)
        return cls(n, n, idx, idx, np.ones(n, dtype=np.int64))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self) -> int:
        return len(self.vals)

    def entries(self) -> Iterator[tuple[int, int, int]]:
        for r, c, v in zip(self.rows.tolist(), self.cols.tolist(), self.vals.tolist()):
            yield r, c, v

    def to_dense(self) -> np.ndarray:
        a = np.zeros(self.shape, dtype=np.int64)
        a[self.rows, self.cols] = self.vals
        return a

    def to_scipy(self):
        return coo_matrix(
            (self.vals, (self.rows, self.cols)), shape=self.shape, dtype=np.int64
        ).tocsr()

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix(self.n_cols, self.n_rows, self.cols, self.rows, self.vals)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseMatrix) or self.shape != other.shape:
            return NotImplemented if not isinstance(other, SparseMatrix) else False
        return _canonical(self) == _canonical(other)

    __hash__ = None  # type: ignore[assignment]


def _canonical(m: SparseMatrix) -> list[tuple[int, int, int]]:
    return sorted(m.entries())


# ---------------------------------------------------------------------------
# dense kernels


@numba.njit(cache=True, nogil=True)
def _inv_mod(a, p):
    result = 1
    base = a % p
    e = p - 2
    while e > 0:
        if e & 1:
            result = result * base % p
        base = base * base % p
        e >>= 1
    return result


@numba.njit(cache=True, nogil=True)
def _echelon(a, p, reduced):
    """In-place row echelon form of ``a`` (entries in [0, p)).

    Returns the pivot columns. With ``reduced`` the result is the RREF.
    """
    nr, nc = a.shape
    pivots = np.empty(min(nr, nc), dtype=np.int64)
    support = np.empty(nc, dtype=np.int64)
    r = 0
    for c in range(nc):
        if r == nr:
            break
        piv = -1
        for i in range(r, nr):
            if a[i, c] != 0:
                piv = i
                break
        if piv < 0:
            continue
        if piv != r:
            for k in range(c, nc):
                t = a[r, k]
                a[r, k] = a[piv, k]
                a[piv, k] = t
        inv = _inv_mod(a[r, c], p)
        ns = 0
        for k in range(c, nc):
            if a[r, k] != 0:
                a[r, k] = a[r, k] * inv % p
                support[ns] = k
                ns += 1
        start = 0 if reduced else r + 1
        for i in range(start, nr):
            if i == r:
                continue
            f = a[i, c]
            if f != 0:
                for s in range(ns):
                    k = support[s]
                    a[i, k] = (a[i, k] - f * a[r, k]) % p
        pivots[r] = c
        r += 1
    return pivots[:r]


def _as_mod(a: np.ndarray, p: int) -> np.ndarray:
    return np.mod(np.asarray(a, dtype=np.int64), p)


def dense_rank_mod_p(a: np.ndarray, p: int) -> int:
    a = _as_mod(a, p)
    if a.size == 0:
        return 0
    if a.shape[0] > a.shape[1]:
        a = np.ascontiguousarray(a.T)
    return len(_echelon(a, p, False))


def rref_mod_p(a: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Reduced row echelon form and pivot columns of ``a`` over GF(p)."""
    a = np.array(_as_mod(a, p), copy=True)
    if a.size == 0:
        return a, np.zeros(0, dtype=np.int64)
    pivots = _echelon(a, p, True)
    return a[: len(pivots)], pivots


def kernel_basis_mod_p(a: np.ndarray, p: int, with_free: bool = False, reduced_input: bool = False):
    """Rows spanning the right kernel ``{x : a @ x = 0}`` over GF(p).

    One basis vector per free (non-pivot) column, equal to 1 there and 0 on
    the other free columns. With ``with_free`` the free columns are returned
    too, so a kernel element's coordinates are its entries at those columns.
    ``reduced_input`` promises entries already lie in ``[0, p)``.
    """
    n = a.shape[1]
    if a.shape[0] == 0:
        basis, free = np.eye(n, dtype=np.int64), np.arange(n)
    else:
        a = np.array(a, dtype=np.int64) if reduced_input else _as_mod(a, p)
        # plain echelon first, then back-substitute on the (short) pivot rows only
        pivots = _echelon(a, p, False)
        r = np.ascontiguousarray(a[: len(pivots)])
        _echelon(r, p, True)
        free = np.setdiff1d(np.arange(n), pivots)
        basis = np.zeros((len(free), n), dtype=np.int64)
        basis[np.arange(len(free)), free] = 1
        if len(pivots):
            # x_pivot = -sum r[i, free] * x_free
            basis[:, pivots] = np.mod(-r[:, free].T, p)
    return (basis, free) if with_free else basis


def independent_rows_mod_p(a: np.ndarray, p: int) -> np.ndarray:
    """Indices of the greedy (first-come) maximal independent set of rows."""
    a = np.asarray(a, dtype=np.int64)
    if a.shape[0] == 0 or a.shape[1] == 0:
        return np.zeros(0, dtype=np.int64)
    t = np.ascontiguousarray(_as_mod(a, p).T)
    return _echelon(t, p, False).copy()


def bareiss_rank(rows: list[list[int]]) -> int:
    """Rank over Q of an integer matrix by fraction-free elimination."""
    m = [list(r) for r in rows]
    if not m or not m[0]:
        return 0
    nr, nc = len(m), len(m[0])
    rank = 0
    prev = 1
    for c in range(nc):
        piv = next((i for i in range(rank, nr) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        pr = m[rank]
        pc = pr[c]
        for i in range(rank + 1, nr):
            row = m[i]
            f = row[c]
            m[i] = [(pc * row[k] - f * pr[k]) // prev for k in range(nc)]
        prev = pc
        rank += 1
        if rank == nr:
            break
    return rank


# ---------------------------------------------------------------------------
# sparse entry points


def blocks(m: SparseMatrix) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Connected components of the nonzero pattern as dense integer blocks.

    Returns ``(block, row_ids, col_ids)`` triples in a canonical order (by
    smallest row index) so that downstream results are deterministic.
    """
    if m.nnz == 0:
        return []
    R = m.n_rows
    graph = coo_matrix(
        (np.ones(m.nnz, dtype=np.int8), (m.rows, R + m.cols)),
        shape=(R + m.n_cols, R + m.n_cols),
    )
    _, labels = connected_components(graph, directed=False)
    entry_label = labels[m.rows]
    order = np.lexsort((m.cols, m.rows, entry_label))
    lab = entry_label[order]
    cuts = np.flatnonzero(np.diff(lab)) + 1
    out = []
    for idx in np.split(order, cuts):
        rid, rloc = np.unique(m.rows[idx], return_inverse=True)
        cid, cloc = np.unique(m.cols[idx], return_inverse=True)
        block = np.zeros((len(rid), len(cid)), dtype=np.int64)
        block[rloc, cloc] = m.vals[idx]
        out.append((block, rid, cid))
    out.sort(key=lambda t: int(t[1][0]))
    return out


def _block_rank(block: np.ndarray, f: FieldSpec) -> int:
    if f.is_prime_field:
        p = f.modulus
        if min(block.shape) == 1:
            return int(np.any(block % p))
        return dense_rank_mod_p(block, p)
    if min(block.shape) == 1:
        return int(np.any(block))
    return bareiss_rank(block.tolist())


def rank(m: SparseMatrix, f: FieldSpec | None = None) -> int:
    """Rank of ``m`` over the field ``f`` (default GF(32003))."""
    f = f or FieldSpec.prime()
    return sum(_block_rank(b, f) for b, _, _ in blocks(m))


def kernel_dim(m: SparseMatrix, f: FieldSpec | None = None) -> int:
    return m.n_cols - rank(m, f)


@dataclass(frozen=True)
class CertifiedRank:
    rank: int
    prime_ranks: tuple[int, ...]
    escalated: bool


def rank_certified_report(
    m: SparseMatrix, primes: tuple[int, int] = (DEFAULT_PRIME, SECOND_PRIME)
) -> CertifiedRank:
    if len(set(primes)) < 2:
        raise ConfigurationError("certification needs two distinct primes")
    fields = [FieldSpec.prime(p) for p in primes]
    found = tuple(rank(m, f) for f in fields)
    if len(set(found)) == 1:
        return CertifiedRank(found[0], found, False)
    return CertifiedRank(rank(m, FieldSpec.rationals()), found, True)


def rank_certified(
    m: SparseMatrix, primes: tuple[int, int] = (DEFAULT_PRIME, SECOND_PRIME)
) -> int:
    """Rank over two primes; if they disagree, the exact rational rank."""
    return rank_certified_report(m, primes).rank
