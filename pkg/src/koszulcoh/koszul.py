"""Koszul cohomology from the three-term wedge complexes.

``K_{p,q}(B, L)`` is the middle cohomology of

    H^0(B+(q-1)L) (x) wedge^{p+1} V  ->  H^0(B+qL) (x) wedge^p V
                                     ->  H^0(B+(q+1)L) (x) wedge^{p-1} V

with ``V = H^0(L)`` (for ``q = 0`` only the kernel of the second map). The
differential is

    s (x) e_{i_1} ^ ... ^ e_{i_p}  |->  sum_k (-1)^{k-1} (s e_{i_k}) (x) (omit i_k)

Bases: monomials in lex order, wedge subsets in colex order, index =
``summand offset + monomial index * C(h0, p) + colex rank``.
"""

from __future__ import annotations

import itertools
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from typing import Iterable, Sequence

import numpy as np

from koszulcoh import exactlin
from koszulcoh.errors import ConfigurationError, IntegrityError, UnsupportedInstanceError
from koszulcoh.exactlin import FieldSpec, SparseMatrix
from koszulcoh.sections import MonomialSystem, hi


# ---------------------------------------------------------------------------
# wedge bases


def wedge_rank(subset: Sequence[int]) -> int:
    """Colexicographic rank of a strictly increasing subset."""
    r = 0
    prev = -1
    for k, s in enumerate(subset):
        if s <= prev:
            raise ValueError(f"subset {tuple(subset)} is not strictly increasing")
        r += comb(s, k + 1)
        prev = s
    return r


def wedge_unrank(r: int, p: int, h0: int) -> tuple[int, ...]:
    if not 0 <= r < comb(h0, p):
        raise ValueError(f"rank {r} out of range for {p}-subsets of {h0}")
    out = []
    for k in range(p, 0, -1):
        s = k - 1
        while comb(s + 1, k) <= r:
            s += 1
        out.append(s)
        r -= comb(s, k)
    return tuple(reversed(out))


@lru_cache(maxsize=None)
def colex_subsets(h0: int, p: int) -> np.ndarray:
    """All ``p``-subsets of ``range(h0)`` as rows, in colex order."""
    if p < 0 or p > h0:
        return np.zeros((0, max(p, 0)), dtype=np.int64)
    subs = sorted(itertools.combinations(range(h0), p), key=lambda c: c[::-1])
    arr = np.array(subs, dtype=np.int64).reshape(len(subs), p)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=None)
def _faces(h0: int, p: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """For each colex p-subset: removed element, rank of the face, sign."""
    subs = colex_subsets(h0, p)
    n = len(subs)
    removed = subs.copy()
    face_rank = np.zeros((n, p), dtype=np.int64)
    binom = np.array([[comb(s, k) for k in range(p + 1)] for s in range(h0 + 1)], dtype=np.int64)
    for k in range(p):
        rest = np.delete(subs, k, axis=1)
        if p > 1:
            face_rank[:, k] = binom[rest, np.arange(1, p)].sum(axis=1)
    signs = np.array([(-1) ** k for k in range(p)], dtype=np.int64)
    for a in (removed, face_rank, signs):
        a.setflags(write=False)
    return removed, face_rank, signs


# ---------------------------------------------------------------------------
# the differential


def term_dim(sys: MonomialSystem, p: int, q: int) -> int:
    if p < 0 or q < 0:
        return 0
    return sys.h0_total(q) * comb(sys.h0_L, p)


def _offsets(sys: MonomialSystem, m: int, width: int) -> list[int]:
    offs, acc = [], 0
    for s in range(sys.n_summands):
        offs.append(acc)
        acc += sys.h0(s, m) * width
    return offs


def target_table(sys: MonomialSystem, summand: int, m: int) -> np.ndarray:
    """``T[x, i]`` = index of ``basis(m)[x] + L[i]`` in ``basis(m + 1)``."""
    src = sys.basis(summand, m)
    index = {pt: j for j, pt in enumerate(sys.basis(summand, m + 1))}
    T = np.empty((len(src), sys.h0_L), dtype=np.int64)
    for x, pt in enumerate(src):
        for i, v in enumerate(sys.L_points):
            tgt = tuple(a + b for a, b in zip(pt, v))
            j = index.get(tgt)
            if j is None:
                raise IntegrityError(
                    f"closure violated: {pt} + {v} not in basis({m + 1}) of summand {summand}"
                )
            T[x, i] = j
    return T


def build_differential(sys: MonomialSystem, p: int, q: int) -> SparseMatrix:
    """Matrix of ``H^0(B+qL) (x) wedge^p V -> H^0(B+(q+1)L) (x) wedge^{p-1} V``."""
    n_cols = term_dim(sys, p, q)
    n_rows = term_dim(sys, p - 1, q + 1)
    if n_cols == 0 or n_rows == 0:
        return SparseMatrix.zero(n_rows, n_cols)
    h = sys.h0_L
    wp, wp1 = comb(h, p), comb(h, p - 1)
    removed, face_rank, signs = _faces(h, p)
    dom_off = _offsets(sys, q, wp)
    cod_off = _offsets(sys, q + 1, wp1)
    rows, cols, vals = [], [], []
    w = np.arange(wp, dtype=np.int64)
    for s in range(sys.n_summands):
        if sys.h0(s, q) == 0:
            continue
        T = target_table(sys, s, q)
        nx = T.shape[0]
        x = np.arange(nx, dtype=np.int64)
        # (nx, wp, p)
        r = cod_off[s] + T[:, removed] * wp1 + face_rank[None, :, :]
        c = dom_off[s] + x[:, None, None] * wp + w[None, :, None]
        rows.append(r.ravel())
        cols.append(np.broadcast_to(c, r.shape).ravel())
        vals.append(np.broadcast_to(signs, r.shape).ravel())
    return SparseMatrix(n_rows, n_cols, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))


# ---------------------------------------------------------------------------
# cohomology


ENGINES = ("koszul", "resolution", "equivariant")


@dataclass(frozen=True)
class KoszulCell:
    p: int
    q: int
    dim: int
    engine: str = "koszul"

    def __post_init__(self) -> None:
        if self.dim < 0:
            raise IntegrityError(f"negative dimension at ({self.p},{self.q})")
        if self.q < 0 and self.dim != 0:
            raise IntegrityError(f"K_{{{self.p},{self.q}}} must vanish for q < 0")
        if self.engine not in ENGINES:
            raise ConfigurationError(f"unknown engine {self.engine!r}")


class KoszulEngine:
    """Ranks of the differentials of one system, memoised per ``(p, q)``.

    Each differential rank is needed by two neighbouring cells, so a table
    computation touches every matrix once.
    """

    def __init__(
        self,
        sys: MonomialSystem,
        field: FieldSpec | None = None,
        certify: bool = False,
        primes: tuple[int, int] = (exactlin.DEFAULT_PRIME, exactlin.SECOND_PRIME),
    ):
        self.sys = sys
        self.field = field or FieldSpec.prime()
        self.certify = certify
        self.primes = primes
        self.escalations = 0
        self._ranks: dict[tuple[int, int], int] = {}
        self._lock = threading.Lock()

    def differential_rank(self, p: int, q: int) -> int:
        key = (p, q)
        with self._lock:
            if key in self._ranks:
                return self._ranks[key]
        m = build_differential(self.sys, p, q)
        if m.nnz == 0:
            r = 0
        elif self.certify:
            rep = exactlin.rank_certified_report(m, self.primes)
            if rep.escalated:
                with self._lock:
                    self.escalations += 1
            r = rep.rank
        else:
            r = exactlin.rank(m, self.field)
        with self._lock:
            self._ranks[key] = r
        return r

    def dim(self, p: int, q: int) -> int:
        if q < 0 or p < 0:
            return 0
        ker = term_dim(self.sys, p, q) - self.differential_rank(p, q)
        if q == 0:
            return ker
        return ker - self.differential_rank(p + 1, q - 1)

    def cell(self, p: int, q: int) -> KoszulCell:
        return KoszulCell(p, q, self.dim(p, q), "koszul")


def koszul_dim(
    sys: MonomialSystem,
    p: int,
    q: int,
    field: FieldSpec | None = None,
    certify: bool = False,
) -> KoszulCell:
    if q < 0:
        return KoszulCell(p, q, 0)
    return KoszulEngine(sys, field, certify).cell(p, q)


@dataclass
class BettiTable:
    cells: dict[tuple[int, int], int]
    system: str
    field: str
    certified: bool = False
    engine: str = "koszul"
    variety_dim: int | None = None

    def __getitem__(self, key: tuple[int, int]) -> int:
        return self.cells.get(key, 0)

    def nonzero(self) -> dict[tuple[int, int], int]:
        return {k: v for k, v in self.cells.items() if v}

    @property
    def p_range(self) -> list[int]:
        return sorted({p for p, _ in self.cells})

    @property
    def q_range(self) -> list[int]:
        return sorted({q for _, q in self.cells})


def betti_table(
    sys: MonomialSystem,
    p_max: int,
    q_range: Iterable[int],
    field: FieldSpec | None = None,
    certify: bool = False,
    threads: int = 1,
    engine: KoszulEngine | None = None,
) -> BettiTable:
    qs = sorted(set(q_range))
    if not qs:
        raise ConfigurationError("empty q range")
    if p_max < 0 or p_max > sys.h0_L:
        raise ConfigurationError(f"p_max={p_max} outside [0, h0(L)={sys.h0_L}]")
    eng = engine or KoszulEngine(sys, field, certify)
    keys = [(p, q) for q in qs for p in range(p_max + 1)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            dims = list(pool.map(lambda k: eng.dim(*k), keys))
    else:
        dims = [eng.dim(*k) for k in keys]
    return BettiTable(
        cells=dict(zip(keys, dims)),
        system=sys.describe(),
        field="certified" if eng.certify else str(eng.field),
        certified=eng.certify,
        engine="koszul",
        variety_dim=sys.variety_dim,
    )


# ---------------------------------------------------------------------------
# duality, Euler characteristic


@dataclass(frozen=True)
class DualityReport:
    p: int
    q: int
    dual_p: int
    dual_q: int
    hypotheses_hold: bool
    failed_hypotheses: tuple[str, ...] = ()
    dim: int | None = None
    dual_dim: int | None = None

    @property
    def agree(self) -> bool | None:
        if not self.hypotheses_hold:
            return None
        return self.dim == self.dual_dim


def duality_hypotheses(sys: MonomialSystem, q: int) -> list[str]:
    """Failed conditions for duality, as a list of messages (empty when all hold).

    Besides ``H^i(B+(q-i)L) = H^i(B+(q-i-1)L) = 0`` for ``0 < i < n``, both
    ``B`` and ``B^* (x) K_X`` must have no sections after a negative twist:
    duality holds for the module over all ``m in Z``, and only then does it
    coincide with the ``m >= 0`` module computed here. On ``P^1`` with
    ``B = L = O(1)``, ``K_{0,0} = 2`` while its dual group vanishes.
    """
    n, l = sys.params
    failed = []
    for b in sys.summands:
        for i in range(1, n):
            for a in (b + (q - i) * l, b + (q - i - 1) * l):
                if hi(n, a, i):
                    failed.append(f"h^{i}(O({a})) != 0")
        if hi(n, b - l, 0):
            failed.append(f"h^0(B - L) = h^0(O({b - l})) != 0")
        if hi(n, -b - n - 1 - l, 0):
            failed.append(f"h^0(K - B - L) = h^0(O({-b - n - 1 - l})) != 0")
    return failed


def dual_indices(sys: MonomialSystem, p: int, q: int) -> tuple[int, int]:
    n = sys.variety_dim
    # the rank of the ambient space is h0 - 1, hence the extra shift
    return sys.h0_L - 1 - n - p, n + 1 - q


def check_duality(
    sys: MonomialSystem,
    p: int,
    q: int,
    field: FieldSpec | None = None,
    certify: bool = False,
    engines: tuple[KoszulEngine, KoszulEngine] | None = None,
) -> DualityReport:
    """Compare ``K_{p,q}(B, L)`` with ``K_{h0-1-n-p, n+1-q}(B^* (x) K_X, L)``."""
    dual = sys.dual()
    if dual is None:
        raise UnsupportedInstanceError(f"no duality data for {sys.kind} systems")
    dp, dq = dual_indices(sys, p, q)
    failed = duality_hypotheses(sys, q)
    if failed:
        return DualityReport(p, q, dp, dq, False, tuple(failed))
    left, right = engines or (KoszulEngine(sys, field, certify), KoszulEngine(dual, field, certify))
    return DualityReport(p, q, dp, dq, True, (), left.dim(p, q), right.dim(dp, dq))


@dataclass(frozen=True)
class EulerReport:
    n_total: int
    sections_side: int
    cohomology_side: int

    @property
    def holds(self) -> bool:
        return self.sections_side == self.cohomology_side


def euler_check(
    sys: MonomialSystem,
    n_total: int,
    engine: KoszulEngine | None = None,
) -> EulerReport:
    """Alternating sums along the strand ``p + q = n_total``."""
    eng = engine or KoszulEngine(sys)
    h = sys.h0_L
    left = sum((-1) ** m * sys.h0_total(m) * comb(h, n_total - m) for m in range(n_total + 1))
    right = sum((-1) ** m * eng.dim(n_total - m, m) for m in range(n_total + 1))
    return EulerReport(n_total, left, right)
