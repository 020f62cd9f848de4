"""Invariant sections of the symmetric-group complex on ``X x X^n``.

Taking ``S_n``-invariant global sections of ``B (x) L^{[n]}`` restricted to the
diagonals ``Delta_I = {x = x_i, i in I}`` gives, term by term,

    H^0(B + mL) (x) wedge^{n-m} H^0(L),        m = 1, ..., n,

and the signed inclusion maps become ``(s, w) -> sum_k (-1)^{k-1} (s e_{w_k}, w - w_k)``.
Prepending the sections over all of ``X x X^n`` (the ``m = 0`` term
``H^0(B) (x) wedge^n H^0(L)``) gives the augmented complex whose cohomology at
``m = q`` is ``K_{n-q, q}(B, L)``.

The group action itself is only materialised in
:func:`brute_force_invariant_dim`, which averages over ``S_n`` on the full
non-invariant space.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb, factorial
from typing import Sequence

import numpy as np

from koszulcoh import exactlin
from koszulcoh.errors import ConfigurationError, IntegrityError
from koszulcoh.exactlin import FieldSpec, SparseMatrix
from koszulcoh.koszul import KoszulEngine
from koszulcoh.sections import MonomialSystem

DEFAULT_CAP = 20000
ACTIONS = ("alternating", "trivial")


def _colex(h: int, k: int) -> list[tuple[int, ...]]:
    return sorted(itertools.combinations(range(h), k), key=lambda c: c[::-1])


@dataclass(frozen=True)
class DeltaTerm:
    """Invariant sections over the ``m``-fold diagonals, as a basis list."""

    m: int
    n: int
    basis: tuple[tuple[int, tuple[int, ...], tuple[int, ...]], ...]  # (summand, point, wedge)

    @property
    def space_dim(self) -> int:
        return len(self.basis)


def delta_term(sys: MonomialSystem, n: int, m: int) -> DeltaTerm:
    wedges = _colex(sys.h0_L, n - m) if 0 <= n - m <= sys.h0_L else []
    basis = tuple(
        (s, pt, w)
        for s in range(sys.n_summands)
        for pt in sys.basis(s, m)
        for w in wedges
    )
    return DeltaTerm(m, n, basis)


def _signed_inclusion(sys: MonomialSystem, src: DeltaTerm, dst: DeltaTerm) -> SparseMatrix:
    index = {b: k for k, b in enumerate(dst.basis)}
    entries = []
    for col, (s, pt, w) in enumerate(src.basis):
        for k, i in enumerate(w):
            v = sys.L_points[i]
            tgt = (s, tuple(a + b for a, b in zip(pt, v)), w[:k] + w[k + 1 :])
            row = index.get(tgt)
            if row is None:
                raise IntegrityError(f"closure violated: {pt} + {v} missing from the next term")
            entries.append((row, col, -1 if k % 2 else 1))
    return SparseMatrix.from_entries(dst.space_dim, src.space_dim, entries)


@dataclass
class InvariantComplex:
    n: int
    terms: list[DeltaTerm]  # m = 1..n
    augmentation_term: DeltaTerm  # m = 0: sections over all of X x X^n
    differentials: dict[int, SparseMatrix]  # m -> m + 1 for m = 0..n-1

    def term(self, m: int) -> DeltaTerm:
        return self.augmentation_term if m == 0 else self.terms[m - 1]


def build_invariant_complex(sys: MonomialSystem, n: int) -> InvariantComplex:
    if not 1 <= n <= sys.h0_L:
        raise ConfigurationError(f"need 1 <= n <= h0(L) = {sys.h0_L}, got {n}")
    terms = [delta_term(sys, n, m) for m in range(0, n + 1)]
    diffs = {m: _signed_inclusion(sys, terms[m], terms[m + 1]) for m in range(n)}
    return InvariantComplex(n, terms[1:], terms[0], diffs)


def _rank(m: SparseMatrix, field: FieldSpec | None) -> int:
    return exactlin.rank(m, field) if m.nnz else 0


def invariant_cohomology(
    sys: MonomialSystem,
    n: int,
    q: int,
    field: FieldSpec | None = None,
    complex_: InvariantComplex | None = None,
) -> int:
    """Cohomology of the augmented invariant complex at ``m = q``."""
    if q < 0 or q > n:
        return 0
    cx = complex_ or build_invariant_complex(sys, n)
    dim = cx.term(q).space_dim
    out_rank = _rank(cx.differentials[q], field) if q < n else 0
    in_rank = _rank(cx.differentials[q - 1], field) if q >= 1 else 0
    return dim - out_rank - in_rank


def invariant_h0(
    sys: MonomialSystem,
    n: int,
    field: FieldSpec | None = None,
    complex_: InvariantComplex | None = None,
) -> int:
    """``dim H^0`` of the unaugmented complex: invariant sections over ``Z``."""
    cx = complex_ or build_invariant_complex(sys, n)
    d1 = cx.differentials.get(1)
    rk = _rank(d1, field) if d1 is not None else 0
    return cx.term(1).space_dim - rk


@dataclass(frozen=True)
class ExactSequenceBalance:
    p: int
    kernel_dim: int  # K_{p+1,0}
    sections_dim: int  # h0(B) * C(h0(L), p+1)
    invariant_dim: int  # invariant sections over Z
    cokernel_dim: int  # K_{p,1}

    @property
    def alternating_sum(self) -> int:
        return self.kernel_dim - self.sections_dim + self.invariant_dim - self.cokernel_dim

    @property
    def holds(self) -> bool:
        return self.alternating_sum == 0


def exact_sequence_balance(
    sys: MonomialSystem,
    p: int,
    field: FieldSpec | None = None,
    engine: KoszulEngine | None = None,
) -> ExactSequenceBalance:
    """Dimensions along ``0 -> K_{p+1,0} -> H^0(B) (x) wedge^{p+1} -> H^0_S(Z) -> K_{p,1} -> 0``."""
    eng = engine or KoszulEngine(sys, field)
    return ExactSequenceBalance(
        p,
        eng.dim(p + 1, 0),
        sys.h0_total(0) * comb(sys.h0_L, p + 1),
        invariant_h0(sys, p + 1, field),
        eng.dim(p, 1),
    )


# ---------------------------------------------------------------------------
# the genuine group action


def perm_sign(seq: Sequence[int]) -> int:
    """Sign of the permutation that sorts ``seq`` (distinct entries)."""
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


@dataclass
class ActionModel:
    """Signed permutation action of ``S_n`` on the non-invariant ``m``-th term.

    Basis: ``(I, s, v)`` with ``I`` an ``m``-subset of positions, ``s`` a basis
    point of ``H^0(B + mL)`` (with summand), and ``v`` the ``H^0(L)`` basis
    indices sitting at the positions outside ``I``, in increasing position
    order. ``sigma`` moves ``I`` to ``sigma(I)``, the factor at position ``j``
    to position ``sigma(j)``, and multiplies by the sign of the sort of
    ``(sigma(i_1), ..., sigma(i_m))``; the alternating twist multiplies by
    ``sgn(sigma)`` as well.
    """

    n: int
    m: int
    action: str
    basis: list[tuple[tuple[int, ...], tuple[int, tuple[int, ...]], tuple[int, ...]]]

    def __post_init__(self) -> None:
        if self.action not in ACTIONS:
            raise ConfigurationError(f"unknown action {self.action!r}")
        self.index = {b: k for k, b in enumerate(self.basis)}
        self.group = list(itertools.permutations(range(self.n)))

    @property
    def dim(self) -> int:
        return len(self.basis)

    def act(self, sigma: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        """``(target, sign)`` arrays: ``sigma . e_b = sign[b] e_{target[b]}``."""
        n = self.n
        tw = perm_sign(sigma) if self.action == "alternating" else 1
        target = np.empty(self.dim, dtype=np.int64)
        sign = np.empty(self.dim, dtype=np.int64)
        for b, (I, s, v) in enumerate(self.basis):
            moved = [sigma[i] for i in I]
            newI = tuple(sorted(moved))
            comp = [j for j in range(n) if j not in I]
            placed = dict(zip((sigma[j] for j in comp), v))
            newv = tuple(placed[j] for j in range(n) if j not in newI)
            target[b] = self.index[(newI, s, newv)]
            sign[b] = tw * perm_sign(moved)
        return target, sign

    def matrix(self, sigma: Sequence[int]) -> SparseMatrix:
        t, s = self.act(sigma)
        return SparseMatrix(self.dim, self.dim, t, np.arange(self.dim), s)


def action_model(
    sys: MonomialSystem, n: int, m: int, action: str = "alternating", cap: int = DEFAULT_CAP
) -> ActionModel:
    if not 0 <= m <= n:
        raise ConfigurationError(f"need 0 <= m <= n, got m={m}, n={n}")
    h = sys.h0_L
    sections = [(s, pt) for s in range(sys.n_summands) for pt in sys.basis(s, m)]
    full = comb(n, m) * len(sections) * h ** (n - m)
    if full > cap:
        raise ConfigurationError(
            f"full space has dimension {full} = C({n},{m}) * {len(sections)} * {h}^{n - m}, "
            f"above the cap {cap}"
        )
    basis = [
        (I, sec, v)
        for I in itertools.combinations(range(n), m)
        for sec in sections
        for v in itertools.product(range(h), repeat=n - m)
    ]
    return ActionModel(n, m, action, basis)


def reynolds_numerator(model: ActionModel) -> SparseMatrix:
    """``sum_sigma sigma`` as an integer matrix (the projector times ``n!``)."""
    acc: dict[tuple[int, int], int] = {}
    cols = np.arange(model.dim)
    for sigma in model.group:
        t, s = model.act(sigma)
        for r, c, v in zip(t.tolist(), cols.tolist(), s.tolist()):
            acc[(r, c)] = acc.get((r, c), 0) + v
    return SparseMatrix.from_entries(model.dim, model.dim, ((r, c, v) for (r, c), v in acc.items()))


def group_law_holds(model: ActionModel) -> bool:
    acts = {sigma: model.act(sigma) for sigma in model.group}
    for sigma in model.group:
        ts, ss = acts[sigma]
        for tau in model.group:
            tt, st = acts[tau]
            comp = tuple(sigma[tau[i]] for i in range(model.n))
            tc, sc = acts[comp]
            if not (np.array_equal(ts[tt], tc) and np.array_equal(ss[tt] * st, sc)):
                return False
    return True


def projector_idempotent(model: ActionModel, numerator: SparseMatrix | None = None) -> bool:
    """``P^2 = P`` for ``P = N / n!``, i.e. ``N^2 = n! N`` exactly."""
    N = (numerator or reynolds_numerator(model)).to_scipy()
    return (N @ N - N * factorial(model.n)).count_nonzero() == 0


def brute_force_invariant_dim(
    sys: MonomialSystem,
    n: int,
    m: int,
    action: str = "alternating",
    cap: int = DEFAULT_CAP,
) -> int:
    """Rank of the averaging projector on the full ``m``-th term (exact, over Q)."""
    model = action_model(sys, n, m, action, cap)
    return exactlin.rank(reynolds_numerator(model), FieldSpec.rationals())


def expected_invariant_dim(sys: MonomialSystem, n: int, m: int) -> int:
    return sys.h0_total(m) * comb(sys.h0_L, n - m)


# ---------------------------------------------------------------------------
# exactness of the diagonal sequence on a finite set of points


@dataclass(frozen=True)
class ExactnessReport:
    n: int
    points: int
    term_dims: tuple[int, ...]  # O_Z, then m = 1..n
    ranks: tuple[int, ...]  # of the maps out of each term
    composites_vanish: bool

    def exact_at(self, k: int) -> bool:
        """Exactness at term ``k`` (0 is ``O_Z``, where it means injectivity)."""
        incoming = self.ranks[k - 1] if k > 0 else 0
        outgoing = self.ranks[k] if k < len(self.ranks) else 0
        return self.term_dims[k] - outgoing == incoming

    @property
    def interior_exact(self) -> bool:
        return all(self.exact_at(k) for k in range(len(self.term_dims) - 1))

    @property
    def exact_at_end(self) -> bool:
        return self.exact_at(len(self.term_dims) - 1)


def delta_sequence_exactness(n: int, points: int = 2) -> ExactnessReport:
    """The diagonal sequence ``0 -> O_Z -> sum O_{Delta_i} -> ...`` on ``X = {0..points-1}``.

    Functions on each diagonal are vectors indexed by its points; maps are
    restrictions with the sign ``(-1)^{k-1}`` for the ``k``-th index of the
    larger multi-index.
    """
    X = range(points)
    cube = list(itertools.product(X, repeat=n + 1))
    Z = [pt for pt in cube if any(pt[0] == pt[i + 1] for i in range(n))]
    blocks: list[list[tuple[tuple[int, ...], tuple[int, ...]]]] = [[(None, pt) for pt in Z]]
    for m in range(1, n + 1):
        blocks.append(
            [
                (I, pt)
                for I in itertools.combinations(range(n), m)
                for pt in cube
                if all(pt[0] == pt[i + 1] for i in I)
            ]
        )
    mats = []
    for m in range(n):
        dst = {b: k for k, b in enumerate(blocks[m + 1])}
        entries = []
        for col, (I, pt) in enumerate(blocks[m]):
            if I is None:
                for i in range(n):
                    if (key := ((i,), pt)) in dst:
                        entries.append((dst[key], col, 1))
                continue
            for j in range(n):
                if j in I:
                    continue
                J = tuple(sorted(I + (j,)))
                if (key := (J, pt)) in dst:
                    k = J.index(j)
                    entries.append((dst[key], col, -1 if k % 2 else 1))
        mats.append(SparseMatrix.from_entries(len(blocks[m + 1]), len(blocks[m]), entries))
    ranks = tuple(exactlin.rank(a, FieldSpec.rationals()) for a in mats)
    vanish = all(
        (mats[k + 1].to_scipy() @ mats[k].to_scipy()).count_nonzero() == 0
        for k in range(len(mats) - 1)
    )
    return ExactnessReport(n, points, tuple(len(b) for b in blocks), ranks, vanish)
