"""Monomial section systems: lattice-point models of ``H^0(B + mL)``.

A :class:`MonomialSystem` stores the lattice points spanning ``H^0(L)`` and a
rule producing, for each line-bundle summand of ``B`` and each twist ``m``, the
lex-ordered lattice points spanning ``H^0(B + mL)``. Multiplication by a
section of ``L`` is addition of lattice points.

Three kinds are supported:

* ``projective`` -- ``X = P^n``, ``B = sum O(b_i)``, ``L = O(l)``; points are
  exponent vectors in ``n + 1`` variables.
* ``product`` -- ``X = P^{n_1} x ... x P^{n_k}`` with multidegrees.
* ``polytope`` -- explicit point sets, ``basis(m) = B_pts + m * L_pts``. The
  polytopes must be normal for this to be a section ring; that is the caller's
  responsibility.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Callable, Iterable, Sequence

from koszulcoh.errors import ConfigurationError, IntegrityError

Point = tuple[int, ...]

KINDS = ("projective", "product", "polytope")
CLOSURE_CHECK_BOUND = 2


def simplex_points(n_vars: int, degree: int) -> tuple[Point, ...]:
    """Exponent vectors of the degree-``degree`` monomials in ``n_vars`` variables."""
    if degree < 0 or n_vars <= 0:
        return ()
    pts = []
    for bars in itertools.combinations(range(degree + n_vars - 1), n_vars - 1):
        prev = -1
        exps = []
        for b in bars:
            exps.append(b - prev - 1)
            prev = b
        exps.append(degree + n_vars - 2 - prev)
        pts.append(tuple(exps))
    return tuple(sorted(pts))


def minkowski_sum(a: Iterable[Point], b: Iterable[Point]) -> tuple[Point, ...]:
    b = list(b)
    return tuple(sorted({tuple(x + y for x, y in zip(u, v)) for u in a for v in b}))


def dilate(a: Sequence[Point], d: int, rank: int) -> tuple[Point, ...]:
    """``d``-fold Minkowski sum of ``a`` (``{0}`` for ``d = 0``)."""
    out: tuple[Point, ...] = ((0,) * rank,)
    for _ in range(d):
        out = minkowski_sum(out, a)
    return out


def _normalize_points(pts: Iterable[Sequence[int]]) -> tuple[Point, ...]:
    out = tuple(sorted({tuple(int(c) for c in p) for p in pts}))
    ranks = {len(p) for p in out}
    if len(ranks) > 1:
        raise ConfigurationError(f"points of mixed dimension {sorted(ranks)}")
    return out


@dataclass(frozen=True)
class MonomialSystem:
    kind: str
    ambient_rank: int
    variety_dim: int
    L_points: tuple[Point, ...]
    # projective: b_i; product: multidegree tuples; polytope: point tuples
    summands: tuple
    # projective: (n, l); product: (dims, l_degrees); polytope: ()
    params: tuple = ()

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown system kind {self.kind!r}")
        if not self.L_points:
            raise ConfigurationError("H^0(L) must be nonempty")
        if any(len(p) != self.ambient_rank for p in self.L_points):
            raise ConfigurationError("L points do not match the ambient rank")
        if not self.summands:
            raise ConfigurationError("B needs at least one summand")
        for s in range(len(self.summands)):
            for m in range(CLOSURE_CHECK_BOUND + 1):
                check_closure(self, s, m)

    @property
    def h0_L(self) -> int:
        return len(self.L_points)

    @property
    def n_summands(self) -> int:
        return len(self.summands)

    def basis(self, summand: int, m: int) -> tuple[Point, ...]:
        if not 0 <= summand < self.n_summands:
            raise IndexError(f"summand {summand} out of range")
        return _basis(self, summand, m)

    def h0(self, summand: int, m: int) -> int:
        return len(self.basis(summand, m))

    def h0_total(self, m: int) -> int:
        return sum(self.h0(s, m) for s in range(self.n_summands))

    @property
    def hypotheses(self) -> str:
        """Whether the vanishing hypotheses can be checked or are assumed."""
        return "checkable" if self.kind == "projective" else "assumed"

    def dual(self) -> "MonomialSystem | None":
        """The system for ``B^* (x) K_X`` with the same ``L`` (``P^n`` only)."""
        if self.kind != "projective":
            return None
        n, l = self.params
        return projective_system(n, [-b - n - 1 for b in self.summands], l)

    def with_L(self, L_points: Sequence[Point], l_param=None) -> "MonomialSystem":
        """Same ``B``, new ``L``. ``l_param`` is the degree data for P^n / products."""
        if self.kind == "projective":
            return projective_system(self.params[0], list(self.summands), l_param)
        if self.kind == "product":
            return product_system(self.params[0], list(self.summands), l_param)
        return polytope_system(L_points, list(self.summands), self.variety_dim)

    def describe(self) -> str:
        if self.kind == "projective":
            n, l = self.params
            b = "+".join(f"O({x})" for x in self.summands)
            return f"P^{n} B={b} L=O({l})"
        if self.kind == "product":
            dims, ls = self.params
            space = "x".join(f"P^{d}" for d in dims)
            b = "+".join("O(" + ",".join(map(str, x)) + ")" for x in self.summands)
            return f"{space} B={b} L=O({','.join(map(str, ls))})"
        return (
            f"polytope dim={self.variety_dim} |L|={self.h0_L} "
            f"summands={self.n_summands}"
        )


@lru_cache(maxsize=None)
def _basis(sys: MonomialSystem, summand: int, m: int) -> tuple[Point, ...]:
    if m < 0:
        return ()
    spec = sys.summands[summand]
    if sys.kind == "projective":
        n, l = sys.params
        return simplex_points(n + 1, spec + m * l)
    if sys.kind == "product":
        dims, ls = sys.params
        factors = [simplex_points(d + 1, b + m * l) for d, b, l in zip(dims, spec, ls)]
        if any(not f for f in factors):
            return ()
        return tuple(sorted(sum(parts, ()) for parts in itertools.product(*factors)))
    if m == 0:
        return tuple(spec)
    return minkowski_sum(_basis(sys, summand, m - 1), sys.L_points)


def check_closure(sys: MonomialSystem, summand: int, m: int) -> None:
    """Raise :class:`IntegrityError` unless ``basis(m) + L`` lies in ``basis(m+1)``."""
    target = set(sys.basis(summand, m + 1))
    for x in sys.basis(summand, m):
        for v in sys.L_points:
            if tuple(a + b for a, b in zip(x, v)) not in target:
                raise IntegrityError(
                    f"closure violated: {x} + {v} not in basis({m + 1}) "
                    f"of summand {summand}"
                )


def projective_system(n: int, b_degrees: Sequence[int], l_degree: int) -> MonomialSystem:
    if n < 1:
        raise ConfigurationError("projective dimension must be at least 1")
    if l_degree < 1:
        raise ConfigurationError("L = O(l) needs l >= 1")
    return MonomialSystem(
        kind="projective",
        ambient_rank=n + 1,
        variety_dim=n,
        L_points=simplex_points(n + 1, l_degree),
        summands=tuple(int(b) for b in b_degrees),
        params=(n, int(l_degree)),
    )


def product_system(
    dims: Sequence[int],
    b_degrees: Sequence[Sequence[int]],
    l_degrees: Sequence[int],
) -> MonomialSystem:
    """``P^{dims[0]} x P^{dims[1]} x ...`` with ``L = O(l_degrees)``."""
    dims = tuple(int(d) for d in dims)
    ls = tuple(int(l) for l in l_degrees)
    if not dims or any(d < 1 for d in dims):
        raise ConfigurationError("product factors must be P^k with k >= 1")
    if len(ls) != len(dims) or any(l < 1 for l in ls):
        raise ConfigurationError("L needs one positive degree per factor")
    bs = tuple(tuple(int(x) for x in b) for b in b_degrees)
    if any(len(b) != len(dims) for b in bs):
        raise ConfigurationError("each B summand needs one degree per factor")
    factors = [simplex_points(d + 1, l) for d, l in zip(dims, ls)]
    L = tuple(sorted(sum(parts, ()) for parts in itertools.product(*factors)))
    return MonomialSystem(
        kind="product",
        ambient_rank=sum(d + 1 for d in dims),
        variety_dim=sum(dims),
        L_points=L,
        summands=bs,
        params=(dims, ls),
    )


def polytope_system(
    L_pts: Iterable[Sequence[int]],
    B_pts_per_summand: Sequence[Iterable[Sequence[int]]],
    variety_dim: int,
) -> MonomialSystem:
    L = _normalize_points(L_pts)
    if not L:
        raise ConfigurationError("polytope system needs a nonempty L point set")
    bs = tuple(_normalize_points(b) for b in B_pts_per_summand)
    r = len(L[0])
    if any(b and len(b[0]) != r for b in bs):
        raise ConfigurationError("B points do not match the rank of L")
    return MonomialSystem(
        kind="polytope",
        ambient_rank=r,
        variety_dim=int(variety_dim),
        L_points=L,
        summands=bs,
    )


def _simplex_degree(pts: tuple[Point, ...], n_vars: int) -> int | None:
    if not pts:
        return None
    deg = sum(pts[0])
    return deg if pts == simplex_points(n_vars, deg) else None


@dataclass(frozen=True)
class TwistFamily:
    """``d -> (X, B, L_d = P + d A)`` for a fixed base system."""

    base: MonomialSystem
    A_points: tuple[Point, ...]
    P_points: tuple[Point, ...]

    def __call__(self, d: int) -> MonomialSystem:
        if d < 0:
            raise ConfigurationError("family index d must be nonnegative")
        base = self.base
        if base.kind == "projective":
            n = base.params[0]
            a = _simplex_degree(self.A_points, n + 1)
            p = _simplex_degree(self.P_points, n + 1)
            return base.with_L((), p + d * a)
        if base.kind == "product":
            dims = base.params[0]
            a = _multidegree(self.A_points, dims)
            p = _multidegree(self.P_points, dims)
            return base.with_L((), tuple(pi + d * ai for pi, ai in zip(p, a)))
        L = minkowski_sum(self.P_points, dilate(self.A_points, d, base.ambient_rank))
        return base.with_L(L)

    def describe(self) -> str:
        return f"{self.base.describe()} with L_d = P + d*A (|A|={len(self.A_points)}, |P|={len(self.P_points)})"


def _split(point: Point, dims: Sequence[int]) -> list[Point]:
    out, i = [], 0
    for d in dims:
        out.append(point[i : i + d + 1])
        i += d + 1
    return out


def _multidegree(pts: tuple[Point, ...], dims: Sequence[int]) -> tuple[int, ...] | None:
    if not pts:
        return None
    degs = tuple(sum(part) for part in _split(pts[0], dims))
    factors = [simplex_points(d + 1, e) for d, e in zip(dims, degs)]
    full = tuple(sorted(sum(parts, ()) for parts in itertools.product(*factors)))
    return degs if full == pts else None


def twist_family(
    base: MonomialSystem,
    A_pts: Iterable[Sequence[int]],
    P_pts: Iterable[Sequence[int]],
) -> Callable[[int], MonomialSystem]:
    A = _normalize_points(A_pts)
    P = _normalize_points(P_pts)
    if not A or not P:
        raise ConfigurationError("A and P need nonempty point sets")
    if len(A[0]) != base.ambient_rank or len(P[0]) != base.ambient_rank:
        raise ConfigurationError(
            f"rank mismatch: base rank {base.ambient_rank}, "
            f"A rank {len(A[0])}, P rank {len(P[0])}"
        )
    if base.kind == "projective":
        n = base.params[0]
        if _simplex_degree(A, n + 1) is None or _simplex_degree(P, n + 1) is None:
            raise ConfigurationError("on P^n, A and P must be full simplices O(k)")
        if _simplex_degree(A, n + 1) < 1:
            raise ConfigurationError("A must be ample")
    elif base.kind == "product":
        dims = base.params[0]
        a, p = _multidegree(A, dims), _multidegree(P, dims)
        if a is None or p is None:
            raise ConfigurationError("on a product, A and P must be full O(k_1,...,k_r)")
        if min(a) < 1:
            raise ConfigurationError("A must be ample")
    return TwistFamily(base, A, P)


def projective_twist_family(n: int, b_degrees: Sequence[int], a: int, p: int) -> TwistFamily:
    """Shorthand for ``P^n`` with ``A = O(a)`` and ``P = O(p)``."""
    base = projective_system(n, b_degrees, p)
    return twist_family(base, simplex_points(n + 1, a), simplex_points(n + 1, p))


def h0(system: MonomialSystem, summand: int, m: int) -> int:
    return system.h0(summand, m)


@dataclass(frozen=True)
class CohomologyQuery:
    proj_dim: int
    twist: int
    index: int

    def __post_init__(self) -> None:
        if not 0 <= self.index <= self.proj_dim:
            raise ConfigurationError(f"cohomology index {self.index} outside [0, {self.proj_dim}]")


def proj_cohomology(q: CohomologyQuery) -> int:
    """``h^i(P^n, O(a))``."""
    n, a, i = q.proj_dim, q.twist, q.index
    if i == 0:
        return comb(a + n, n) if a >= 0 else 0
    if i == n:
        return comb(-a - 1, n) if a <= -n - 1 else 0
    return 0


def hi(n: int, a: int, i: int) -> int:
    return proj_cohomology(CohomologyQuery(n, a, i))
