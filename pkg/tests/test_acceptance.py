"""Acceptance suite.

Each criterion is checked exactly at its stated scope; results are collected
and printed as one PASS/FAIL line per criterion in the terminal summary.
Criterion 3 is run twice: with the duality index as literally stated, which
does not hold and is kept as a strict expected failure, and with the index
``h0(L) - 1 - n - p`` that does hold.
"""

import io
import json
import time
from math import comb

import pytest

from conftest import record
from koszulcoh import cli, equivariant
from koszulcoh.asymptotics import finite_differences, fit_and_validate, sweep
from koszulcoh.exactlin import FieldSpec
from koszulcoh.koszul import KoszulEngine, betti_table, check_duality, euler_check
from koszulcoh.resolution import minimal_resolution, tor_dim
from koszulcoh.sections import product_system, projective_system, projective_twist_family

PRIMES = (32003, 65537)


def _instances():
    out = [projective_system(1, (b,), d) for d in range(2, 7) for b in (0, 1, -2)]
    out += [projective_system(2, (0,), 2), projective_system(2, (0,), 3)]
    out.append(product_system((1, 1), [(0, 0)], (1, 1)))
    return out


ORACLE_SET = _instances()
ALL_INSTANCES = ORACLE_SET  # the twisted cubic is P^1, O, O(3), already included
DUALITY_SET = [projective_system(1, (b,), d) for d in range(3, 7) for b in (0, 1, -2)] + [
    projective_system(2, (0,), 2),
    projective_system(2, (0,), 3),
]
ids = [s.describe() for s in ORACLE_SET]
_oracle_seconds = {p: 0.0 for p in PRIMES}
_engines: dict[tuple[str, int], KoszulEngine] = {}


def engine(sys, prime):
    key = (sys.describe(), prime)
    if key not in _engines:
        _engines[key] = KoszulEngine(sys, FieldSpec.prime(prime))
    return _engines[key]


# 1 --------------------------------------------------------------------------


@pytest.mark.parametrize("prime", PRIMES)
@pytest.mark.parametrize("sys", ORACLE_SET, ids=ids)
def test_criterion_1_oracle_equivalence(sys, prime):
    n = sys.variety_dim
    p_max = min(sys.h0_L, 8)
    t0 = time.perf_counter()
    led = minimal_resolution(sys, p_max, field=FieldSpec.prime(prime))
    eng = KoszulEngine(sys, FieldSpec.prime(prime))
    bad = [
        (p, q)
        for p in range(p_max + 1)
        for q in range(n + 2)
        if eng.dim(p, q) != tor_dim(led, p, q)
    ]
    _oracle_seconds[prime] += time.perf_counter() - t0
    ok = not bad and not led.truncated
    record("1", f"{sys.describe()} GF({prime}) cells {bad}", ok)
    assert ok, bad


@pytest.mark.parametrize("prime", PRIMES)
def test_criterion_1_budget(prime):
    spent = _oracle_seconds[prime]
    ok = 0 < spent <= 300
    record("1", f"oracle runtime {spent:.1f}s over GF({prime})", ok)
    assert ok


# 2 --------------------------------------------------------------------------


@pytest.mark.parametrize("prime", PRIMES)
def test_criterion_2_twisted_cubic(prime):
    sys = projective_system(1, (0,), 3)
    golden = {(0, 0): 1, (1, 1): 3, (2, 1): 2}
    eng = KoszulEngine(sys, FieldSpec.prime(prime))
    led = minimal_resolution(sys, 3, field=FieldSpec.prime(prime))
    cells = [(p, q) for p in range(4) for q in range(3)]
    ok = all(eng.dim(*c) == golden.get(c, 0) == tor_dim(led, *c) for c in cells)
    record("2", f"twisted cubic GF({prime})", ok)
    assert ok


# 3 --------------------------------------------------------------------------


def _duality_cells(sys, prime, literal):
    """Checked cells and mismatches; ``literal`` uses the index h0 - n - p."""
    n = sys.variety_dim
    left, right = engine(sys, prime), engine(sys.dual(), prime)
    checked, bad = 0, []
    for p in range(sys.h0_L + 1):
        for q in range(n + 2):
            rep = check_duality(sys, p, q, engines=(left, right))
            if not rep.hypotheses_hold:
                continue
            checked += 1
            dp = rep.dual_p + 1 if literal else rep.dual_p
            if left.dim(p, q) != right.dim(dp, rep.dual_q):
                bad.append((p, q))
    return checked, bad


@pytest.mark.parametrize("prime", PRIMES)
@pytest.mark.parametrize("sys", DUALITY_SET, ids=[s.describe() for s in DUALITY_SET])
def test_criterion_3_duality(sys, prime):
    checked, bad = _duality_cells(sys, prime, literal=False)
    ok = checked > 0 and not bad
    record("3", f"{sys.describe()} GF({prime}) index h0-1-n-p mismatches {bad}", ok)
    assert ok


@pytest.mark.xfail(strict=True, reason="the index h0-n-p is off by one; see the decisions ledger")
def test_criterion_3_duality_literal_index():
    failures = []
    for sys in DUALITY_SET:
        for prime in PRIMES:
            _, bad = _duality_cells(sys, prime, literal=True)
            if bad:
                failures.append(f"{sys.describe()} GF({prime}) at {bad[:3]}")
    record(
        "3-literal",
        f"index h0-n-p disagrees on {len(failures)} of {2 * len(DUALITY_SET)} instance/prime pairs",
        not failures,
    )
    assert not failures


# 4 --------------------------------------------------------------------------


@pytest.mark.parametrize("prime", PRIMES)
@pytest.mark.parametrize("sys", ALL_INSTANCES, ids=ids)
def test_criterion_4_vanishing(sys, prime):
    eng = engine(sys, prime)
    n = sys.variety_dim
    trivial_B = all(not any(b) if isinstance(b, tuple) else b == 0 for b in sys.summands)
    bad = []
    for p in range(sys.h0_L + 1):
        for q in (-2, -1, n + 2, n + 3):
            if eng.dim(p, q):
                bad.append((p, q))
        if trivial_B and p >= 1 and eng.dim(p, 0):
            bad.append((p, 0))
    record("4", f"{sys.describe()} GF({prime}) nonzero at {bad}", not bad)
    assert not bad


# 5 --------------------------------------------------------------------------


@pytest.mark.parametrize("prime", PRIMES)
@pytest.mark.parametrize("sys", ALL_INSTANCES, ids=ids)
def test_criterion_5_euler(sys, prime):
    eng = engine(sys, prime)
    bad = [t for t in range(sys.h0_L + 1) if not euler_check(sys, t, eng).holds]
    record("5", f"{sys.describe()} GF({prime}) strands {bad}", not bad)
    assert not bad


# 6 --------------------------------------------------------------------------

_equivariant_seconds = [0.0]


@pytest.mark.parametrize("prime", PRIMES)
@pytest.mark.parametrize("b", (0, 1))
@pytest.mark.parametrize("d", (1, 2, 3))
def test_criterion_6_equivariant(d, b, prime):
    t0 = time.perf_counter()
    f = FieldSpec.prime(prime)
    sys = projective_system(1, (b,), d)
    eng = KoszulEngine(sys, f)
    problems = []
    for n in range(1, min(4, sys.h0_L) + 1):
        cx = equivariant.build_invariant_complex(sys, n)
        for q in range(1, n + 1):
            if equivariant.invariant_cohomology(sys, n, q, f, cx) != eng.dim(n - q, q):
                problems.append(f"n={n} q={q} interpretation")
        if not equivariant.exact_sequence_balance(sys, n - 1, f, eng).holds:
            problems.append(f"n={n} balance")
        for m in range(n + 1):
            if equivariant.brute_force_invariant_dim(sys, n, m) != equivariant.expected_invariant_dim(sys, n, m):
                problems.append(f"n={n} m={m} projector rank")
        for m in range(n - 1):
            comp = cx.differentials[m + 1].to_scipy() @ cx.differentials[m].to_scipy()
            if comp.count_nonzero():
                problems.append(f"n={n} m={m} d o d")
        for m in range(n + 1):
            model = equivariant.action_model(sys, n, m)
            if model.dim <= 600 and not (
                equivariant.group_law_holds(model) and equivariant.projector_idempotent(model)
            ):
                problems.append(f"n={n} m={m} group action")
    _equivariant_seconds[0] += time.perf_counter() - t0
    record("6", f"P^1 O({b}) O({d}) GF({prime}) {problems}", not problems)
    assert not problems


def test_criterion_6_budget():
    ok = 0 < _equivariant_seconds[0] <= 120
    record("6", f"equivariant runtime {_equivariant_seconds[0]:.1f}s", ok)
    assert ok


# 7 --------------------------------------------------------------------------

LINE = projective_twist_family(1, (0,), 1, 1)


@pytest.mark.parametrize("prime", PRIMES)
@pytest.mark.parametrize("p, q", [(1, 1), (2, 1), (1, 0)])
def test_criterion_7_polynomiality(p, q, prime):
    s = sweep(LINE, p, q, 1, 10, certify=False, field=FieldSpec.prime(prime))
    diffs = finite_differences(s)
    fit = fit_and_validate(s, [3, 4, 5, 6], [7, 8, 9, 10])
    ok = diffs.stabilized and fit.validated and len(fit.holdout) >= 3
    if (p, q) == (1, 1):
        ok = ok and s.dims[:6] == [1, 3, 6, 10, 15, 21]
    record("7", f"({p},{q}) GF({prime}) dims {s.dims}", ok)
    assert ok


# 8 --------------------------------------------------------------------------

PLANE = projective_twist_family(2, (0,), 1, 1)


@pytest.mark.parametrize("prime", PRIMES)
@pytest.mark.parametrize("p", (0, 1))
def test_criterion_8_eventual_vanishing(p, prime):
    s = sweep(PLANE, p, 2, 0, 4, certify=False, field=FieldSpec.prime(prime))
    ok = all(v == 0 for d, v in s.samples if d >= 2)
    record("8", f"p={p} GF({prime}) dims {s.dims}", ok)
    assert ok


# 9 --------------------------------------------------------------------------


@pytest.mark.parametrize(
    "sys",
    ALL_INSTANCES + [s.dual() for s in DUALITY_SET],
    ids=ids + [s.dual().describe() + " (dual)" for s in DUALITY_SET],
)
def test_criterion_9_field_robustness(sys):
    n = sys.variety_dim
    cells = [(p, q) for p in range(sys.h0_L + 1) for q in range(-1, n + 3)]
    a, b = engine(sys, PRIMES[0]), engine(sys, PRIMES[1])
    cert = KoszulEngine(sys, certify=True, primes=PRIMES)
    bad = [c for c in cells if not a.dim(*c) == b.dim(*c) == cert.dim(*c)]
    ok = not bad and cert.escalations == 0
    record("9", f"{sys.describe()} cells {bad} escalations {cert.escalations}", ok)
    assert ok


@pytest.mark.parametrize(
    "fam, p, q, d_to",
    [(LINE, 1, 1, 10), (LINE, 2, 1, 10), (LINE, 1, 0, 10), (PLANE, 0, 2, 4), (PLANE, 1, 2, 4)],
)
def test_criterion_9_certified_sweeps(fam, p, q, d_to):
    plain = [sweep(fam, p, q, 0, d_to, certify=False, field=FieldSpec.prime(x)) for x in PRIMES]
    cert = sweep(fam, p, q, 0, d_to, certify=True)
    ok = plain[0].dims == plain[1].dims == cert.dims
    record("9", f"sweep {fam.describe()} ({p},{q})", ok)
    assert ok


# 10 -------------------------------------------------------------------------


def test_criterion_10_performance():
    sys = projective_system(2, (0,), 3)
    assert comb(sys.h0_L, 5) == 252
    t0 = time.perf_counter()
    table = betti_table(sys, sys.h0_L, range(0, 4), FieldSpec.prime(32003), threads=1)
    spent = time.perf_counter() - t0
    ok = spent <= 60 and table.nonzero() == {
        (0, 0): 1, (1, 1): 27, (2, 1): 105, (3, 1): 189,
        (4, 1): 189, (5, 1): 105, (6, 1): 27, (7, 2): 1,
    }
    record("10", f"P^2 O(3) table in {spent:.2f}s", ok)
    assert ok


def test_criterion_10_thread_determinism(tmp_path):
    cfg = tmp_path / "p2.json"
    cfg.write_text(json.dumps({"schema_version": 1, "system": {"kind": "projective", "n": 2, "L": 3}}))
    outs = []
    for threads in ("1", "4"):
        path = tmp_path / f"t{threads}.csv"
        code = cli.main(
            ["betti", "--config", str(cfg), "--threads", threads, "--out", str(path)],
            stdout=io.StringIO(),
            stderr=io.StringIO(),
        )
        assert code == 0
        outs.append(path.read_bytes() + path.with_suffix(".diagram.txt").read_bytes())
    ok = outs[0] == outs[1]
    record("10", "byte-identical output at --threads 4", ok)
    assert ok
