"""Growth of ``dim K_{p,q}(B, P + dA)`` in ``d``: sweeps, differences, exact fits."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from koszulcoh.errors import ConfigurationError
from koszulcoh.exactlin import FieldSpec
from koszulcoh.koszul import KoszulEngine
from koszulcoh.sections import MonomialSystem

Family = Callable[[int], MonomialSystem]


@dataclass(frozen=True)
class DSweep:
    family: str
    p: int
    q: int
    samples: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        ds = [d for d, _ in self.samples]
        if any(b <= a for a, b in zip(ds, ds[1:])):
            raise ConfigurationError("sweep d values must be strictly increasing")
        if any(v < 0 for _, v in self.samples):
            raise ConfigurationError("negative dimension in sweep")

    @property
    def ds(self) -> list[int]:
        return [d for d, _ in self.samples]

    @property
    def dims(self) -> list[int]:
        return [v for _, v in self.samples]

    def to_csv(self) -> str:
        return "d,dim\n" + "".join(f"{d},{v}\n" for d, v in self.samples)


def _describe(family: Family) -> str:
    return family.describe() if hasattr(family, "describe") else repr(family)


def sweep(
    family: Family,
    p: int,
    q: int,
    d_from: int,
    d_to: int,
    certify: bool = True,
    field: FieldSpec | None = None,
    threads: int = 1,
) -> DSweep:
    if d_from > d_to:
        raise ConfigurationError(f"empty d range {d_from}..{d_to}")
    ds = list(range(d_from, d_to + 1))

    def one(d: int) -> int:
        if q < 0:
            return 0
        return KoszulEngine(family(d), field, certify).dim(p, q)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            dims = list(pool.map(one, ds))
    else:
        dims = [one(d) for d in ds]
    return DSweep(_describe(family), p, q, tuple(zip(ds, dims)))


@dataclass(frozen=True)
class DifferenceTable:
    rows: tuple[tuple[int, ...], ...]  # rows[k] = k-th forward differences
    vanishing_order: int | None  # least k whose row is all zero, None if none

    @property
    def stabilized(self) -> bool:
        return self.vanishing_order is not None


def finite_differences(s: DSweep) -> DifferenceTable:
    """Forward-difference rows of the sampled dimensions.

    The vanishing order is the least ``k`` whose row is nonempty and all zero;
    a row needs at least two entries to count, so a lone trailing difference
    never certifies anything.
    """
    if len(s.samples) < 2:
        raise ConfigurationError("need at least two samples")
    if any(b - a != 1 for a, b in zip(s.ds, s.ds[1:])):
        raise ConfigurationError("finite differences need consecutive d")
    rows = [tuple(s.dims)]
    while len(rows[-1]) > 1:
        r = rows[-1]
        rows.append(tuple(b - a for a, b in zip(r, r[1:])))
    order = next((k for k, r in enumerate(rows) if len(r) >= 2 and not any(r)), None)
    return DifferenceTable(tuple(rows), order)


def interpolate(points: Sequence[tuple[int, int]]) -> list[Fraction]:
    """Exact coefficients (constant term first) of the interpolating polynomial."""
    n = len(points)
    coeffs = [Fraction(0)] * n
    for i, (xi, yi) in enumerate(points):
        basis = [Fraction(1)]
        denom = Fraction(1)
        for j, (xj, _) in enumerate(points):
            if j == i:
                continue
            basis = [Fraction(0)] + basis
            for k in range(len(basis) - 1):
                basis[k] -= xj * basis[k + 1]
            denom *= xi - xj
        for k in range(n):
            coeffs[k] += yi * basis[k] / denom
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    return coeffs


def evaluate(coeffs: Sequence[Fraction], x: int) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


@dataclass(frozen=True)
class PolyFit:
    degree: int
    coefficients: tuple[Fraction, ...]
    stabilization: int | None  # least sampled d from which every later sample matches
    validated: bool
    train: tuple[int, ...]
    holdout: tuple[int, ...]
    first_failure: int | None = None

    def __call__(self, d: int) -> Fraction:
        return evaluate(self.coefficients, d)

    def report(self) -> str:
        coeffs = " ".join(f"{c.numerator}/{c.denominator}" for c in self.coefficients)
        lines = [
            f"degree: {self.degree}",
            f"coefficients (constant first): {coeffs}",
            f"train: {','.join(map(str, self.train))}",
            f"holdout: {','.join(map(str, self.holdout))}",
            f"stabilization d0: {self.stabilization if self.stabilization is not None else 'none'}",
        ]
        if self.validated:
            lines.append("verdict: validated")
        else:
            lines.append(f"verdict: not-stabilized (first failing d = {self.first_failure})")
        return "\n".join(lines) + "\n"


def fit_and_validate(s: DSweep, train: Sequence[int], holdout: Sequence[int]) -> PolyFit:
    """Interpolate exactly on ``train``; every ``holdout`` sample must match.

    A mismatch is reported (``validated=False`` with the first failing ``d``),
    not raised: an unstabilized window is data.
    """
    table = dict(s.samples)
    train, holdout = list(train), list(holdout)
    missing = [d for d in train + holdout if d not in table]
    if missing:
        raise ConfigurationError(f"d values {missing} were not sampled")
    if not train or any(b - a != 1 for a, b in zip(train, train[1:])):
        raise ConfigurationError("train window must be consecutive d values")
    coeffs = interpolate([(d, table[d]) for d in train])
    failures = [d for d in holdout if evaluate(coeffs, d) != table[d]]
    stab = None
    for d in reversed(s.ds):
        if evaluate(coeffs, d) != table[d]:
            break
        stab = d
    return PolyFit(
        degree=len(coeffs) - 1 if any(coeffs) else 0,
        coefficients=tuple(coeffs),
        stabilization=stab,
        validated=not failures,
        train=tuple(train),
        holdout=tuple(holdout),
        first_failure=failures[0] if failures else None,
    )


@dataclass(frozen=True)
class ThresholdReport:
    p: int
    q: int
    samples: tuple[tuple[int, int], ...]
    threshold: int | None  # least sampled d0 with zeros at every sampled d >= d0

    @property
    def found(self) -> bool:
        return self.threshold is not None


def vanishing_threshold(
    family: Family,
    p: int,
    q: int,
    d_max: int,
    d_from: int = 0,
    certify: bool = True,
    field: FieldSpec | None = None,
) -> ThresholdReport:
    if q < 2:
        raise ConfigurationError("eventual vanishing is only claimed for q >= 2")
    s = sweep(family, p, q, d_from, d_max, certify, field)
    threshold = None
    for d, v in reversed(s.samples):
        if v:
            break
        threshold = d
    return ThresholdReport(p, q, s.samples, threshold)
