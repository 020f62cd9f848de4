"""Command-line front end: ``koszulcoh <command> --config run.json``.

Every command reads one JSON config (``schema_version`` 1, unknown keys
rejected), computes, and writes plain text or CSV. Exit codes: 0 success or
agreement, 1 a computed disagreement, 2 configuration or usage error, 3 an
internal integrity failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable

import jsonschema

from koszulcoh import asymptotics, equivariant, koszul, resolution, sections
from koszulcoh.errors import (
    ConfigurationError,
    IntegrityError,
    TruncationError,
    UnsupportedInstanceError,
)
from koszulcoh.exactlin import FieldSpec

SCHEMA_VERSION = 1

EXIT_OK, EXIT_DISAGREE, EXIT_CONFIG, EXIT_INTEGRITY = 0, 1, 2, 3

_int_list = {"type": "array", "items": {"type": "integer"}}
_points = {"type": "array", "items": _int_list, "minItems": 1}

CONFIG_SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "system"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "system": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind", "n", "L"],
                    "properties": {
                        "kind": {"const": "projective"},
                        "n": {"type": "integer", "minimum": 1},
                        "B": {**_int_list, "minItems": 1},
                        "L": {"type": "integer", "minimum": 1},
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind", "dims", "L"],
                    "properties": {
                        "kind": {"const": "product"},
                        "dims": {**_int_list, "minItems": 1},
                        "B": {"type": "array", "items": _int_list, "minItems": 1},
                        "L": _int_list,
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind", "L_points", "B_points", "variety_dim"],
                    "properties": {
                        "kind": {"const": "polytope"},
                        "L_points": _points,
                        "B_points": {"type": "array", "items": _points, "minItems": 1},
                        "variety_dim": {"type": "integer", "minimum": 0},
                    },
                },
            ]
        },
        "field": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "prime": {"type": "integer", "minimum": 2},
                "certify": {"type": "boolean"},
            },
        },
        "table": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "p_max": {"type": "integer", "minimum": 0},
                "q_min": {"type": "integer"},
                "q_max": {"type": "integer"},
                "degree_bound": {"type": "integer"},
            },
        },
        "family": {
            "type": "object",
            "additionalProperties": False,
            "required": ["A", "p", "q", "d_from", "d_to"],
            "properties": {
                # degree (projective), multidegree (product) or lattice points (polytope)
                "A": {"anyOf": [{"type": "integer"}, _int_list, _points]},
                "p": {"type": "integer", "minimum": 0},
                "q": {"type": "integer"},
                "d_from": {"type": "integer", "minimum": 0},
                "d_to": {"type": "integer", "minimum": 0},
                "train": {**_int_list, "minItems": 1},
                "holdout": _int_list,
            },
        },
        "equivariant": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n"],
            "properties": {"n": {"type": "integer", "minimum": 1}},
        },
        "threads": {"type": "integer", "minimum": 1},
        "out": {"type": "string"},
    },
}


def load_config(path: str | Path) -> dict[str, Any]:
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg: Any) -> None:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise ConfigurationError(f"config error at {where}: {exc.message}") from exc


def build_system(spec: dict[str, Any]) -> sections.MonomialSystem:
    kind = spec["kind"]
    if kind == "projective":
        return sections.projective_system(spec["n"], tuple(spec.get("B", [0])), spec["L"])
    if kind == "product":
        dims = spec["dims"]
        return sections.product_system(dims, spec.get("B", [[0] * len(dims)]), spec["L"])
    return sections.polytope_system(spec["L_points"], spec["B_points"], spec["variety_dim"])


def build_family(cfg: dict[str, Any]) -> sections.TwistFamily:
    """``L_d = L + d A`` with ``L`` taken from the system block."""
    base = build_system(cfg["system"])
    A = cfg["family"]["A"]
    kind = base.kind
    if kind == "projective":
        if not isinstance(A, int):
            raise ConfigurationError("on P^n the family A is an integer degree")
        A_pts = sections.simplex_points(base.ambient_rank, A)
    elif kind == "product":
        if not isinstance(A, list) or not all(isinstance(a, int) for a in A):
            raise ConfigurationError("on a product the family A is a multidegree")
        dims = base.params[0]
        if len(A) != len(dims):
            raise ConfigurationError("A needs one degree per factor")
        A_pts = sections.product_system(dims, [[0] * len(dims)], [max(a, 1) for a in A]).L_points
        if min(A) < 1:
            raise ConfigurationError("A must be ample")
    else:
        if not isinstance(A, list) or not all(isinstance(a, list) for a in A):
            raise ConfigurationError("on a polytope system the family A is a point list")
        A_pts = A
    return sections.twist_family(base, A_pts, base.L_points)


def _field(cfg: dict[str, Any], args: argparse.Namespace) -> tuple[FieldSpec, bool]:
    fcfg = cfg.get("field", {})
    prime = args.field_prime or fcfg.get("prime") or FieldSpec.prime().modulus
    certify = bool(args.certify or fcfg.get("certify", False))
    return FieldSpec.prime(prime), certify


def _threads(cfg: dict[str, Any], args: argparse.Namespace) -> int:
    t = args.threads or cfg.get("threads", 1)
    if t < 1:
        raise ConfigurationError("--threads must be at least 1")
    return t


def _table_ranges(sys_: sections.MonomialSystem, cfg: dict[str, Any], warn) -> tuple[int, range]:
    tcfg = cfg.get("table", {})
    n = sys_.variety_dim
    p_max = tcfg.get("p_max", sys_.h0_L)
    if p_max > sys_.h0_L:
        warn(f"warning: p_max={p_max} exceeds h0(L)={sys_.h0_L}; clipped (wedge powers vanish)")
        p_max = sys_.h0_L
    q_min = tcfg.get("q_min", 0)
    q_max = tcfg.get("q_max", n + 1)
    if q_max < q_min:
        raise ConfigurationError(f"empty q range {q_min}..{q_max}")
    return p_max, range(q_min, q_max + 1)


# ---------------------------------------------------------------------------
# formats


def betti_csv(table: koszul.BettiTable) -> str:
    rows = sorted(table.cells.items(), key=lambda kv: (kv[0][1], kv[0][0]))
    return "p,q,dim\n" + "".join(f"{p},{q},{v}\n" for (p, q), v in rows)


def betti_diagram(table: koszul.BettiTable) -> str:
    """Rows ``q``, columns ``p``, zeros as ``.``, with a ``total:`` row."""
    ps, qs = table.p_range, table.q_range
    totals = [sum(table.cells.get((p, q), 0) for q in qs) for p in ps]
    grid = [[str(table.cells.get((p, q), 0) or ".") for p in ps] for q in qs]
    labels = ["", "total:"] + [f"{q}:" for q in qs]
    body = [[str(p) for p in ps], [str(t) for t in totals]] + grid
    lw = max(len(s) for s in labels)
    cw = max(len(s) for row in body for s in row)
    lines = [
        (label.rjust(lw) + " " + " ".join(s.rjust(cw) for s in row)).rstrip()
        for label, row in zip(labels, body)
    ]
    return "\n".join(lines) + "\n"


class _Output:
    """Primary text goes to ``--out`` when given, otherwise to stdout."""

    def __init__(self, path: str | None, stdout, stderr):
        self.path = Path(path) if path else None
        self.stdout = stdout
        self.stderr = stderr

    def emit(self, text: str, companion: str | None = None) -> None:
        if self.path is None:
            if companion:
                self.stdout.write(companion + "\n")
            self.stdout.write(text)
            return
        self.path.write_bytes(text.encode())
        if companion is not None:
            self.path.with_suffix(".diagram.txt").write_bytes(companion.encode())

    def warn(self, msg: str) -> None:
        self.stderr.write(msg + "\n")


# ---------------------------------------------------------------------------
# commands


def cmd_betti(cfg, args, out: _Output) -> int:
    sys_ = build_system(cfg["system"])
    field, certify = _field(cfg, args)
    p_max, qs = _table_ranges(sys_, cfg, out.warn)
    table = koszul.betti_table(sys_, p_max, qs, field, certify, _threads(cfg, args))
    out.emit(betti_csv(table), betti_diagram(table))
    return EXIT_OK


def cmd_oracle_compare(cfg, args, out: _Output) -> int:
    sys_ = build_system(cfg["system"])
    field, _ = _field(cfg, args)
    p_max, qs = _table_ranges(sys_, cfg, out.warn)
    table = koszul.betti_table(sys_, p_max, qs, field, False, _threads(cfg, args))
    ledger = resolution.minimal_resolution(sys_, p_max, cfg.get("table", {}).get("degree_bound"), field)
    if ledger.truncated:
        raise TruncationError(
            f"resolution window reached degree_bound={ledger.degree_bound} with nonzero Betti "
            "numbers; raise table.degree_bound"
        )
    lines = ["p,q,koszul,resolution,agree"]
    bad = 0
    for q in qs:
        for p in range(p_max + 1):
            k = table[p, q]
            r = resolution.tor_dim(ledger, p, q)
            bad += k != r
            lines.append(f"{p},{q},{k},{r},{'yes' if k == r else 'NO'}")
    lines.append(f"# {sys_.describe()} over {field}: {'all cells agree' if not bad else f'{bad} cells disagree'}")
    out.emit("\n".join(lines) + "\n")
    return EXIT_DISAGREE if bad else EXIT_OK


def cmd_duality(cfg, args, out: _Output) -> int:
    sys_ = build_system(cfg["system"])
    field, certify = _field(cfg, args)
    dual = sys_.dual()
    if dual is None:
        raise UnsupportedInstanceError(f"duality data exists only for P^n, not {sys_.kind}")
    p_max, qs = _table_ranges(sys_, cfg, out.warn)
    engines = (koszul.KoszulEngine(sys_, field, certify), koszul.KoszulEngine(dual, field, certify))
    lines = ["p,q,dual_p,dual_q,dim,dual_dim,status"]
    bad = 0
    for q in qs:
        for p in range(p_max + 1):
            r = koszul.check_duality(sys_, p, q, engines=engines)
            if not r.hypotheses_hold:
                status = "skipped: " + "; ".join(r.failed_hypotheses)
                lines.append(f"{p},{q},{r.dual_p},{r.dual_q},,,{status}")
                continue
            bad += not r.agree
            lines.append(f"{p},{q},{r.dual_p},{r.dual_q},{r.dim},{r.dual_dim},{'agree' if r.agree else 'DISAGREE'}")
    lines.append(f"# {sys_.describe()} vs {dual.describe()}: {'agreement' if not bad else f'{bad} disagreements'}")
    out.emit("\n".join(lines) + "\n")
    return EXIT_DISAGREE if bad else EXIT_OK


def _sweep(cfg, args) -> asymptotics.DSweep:
    if "family" not in cfg:
        raise ConfigurationError("this command needs a 'family' block")
    fam = cfg["family"]
    field, certify = _field(cfg, args)
    return asymptotics.sweep(
        build_family(cfg),
        fam["p"],
        fam["q"],
        fam["d_from"],
        fam["d_to"],
        certify=certify,
        field=field,
        threads=_threads(cfg, args),
    )


def cmd_sweep(cfg, args, out: _Output) -> int:
    out.emit(_sweep(cfg, args).to_csv())
    return EXIT_OK


def cmd_fit(cfg, args, out: _Output) -> int:
    s = _sweep(cfg, args)
    fam = cfg["family"]
    ds = s.ds
    train = fam.get("train", ds[: max(1, len(ds) // 2)])
    holdout = fam.get("holdout", [d for d in ds if d > max(train)])
    fit = asymptotics.fit_and_validate(s, train, holdout)
    diffs = asymptotics.finite_differences(s) if len(ds) >= 2 else None
    text = fit.report()
    if diffs is not None:
        k = diffs.vanishing_order
        text += f"finite differences: {'order ' + str(k) + ' vanishes' if k is not None else 'no vanishing row in the window'}\n"
    text += f"window: d={ds[0]}..{ds[-1]} p={s.p} q={s.q} family: {s.family}\n"
    out.emit(text)
    # an unstabilized window is a reported finding, not an engine failure
    return EXIT_OK


def cmd_equivariant(cfg, args, out: _Output) -> int:
    sys_ = build_system(cfg["system"])
    if "equivariant" not in cfg:
        raise ConfigurationError("this command needs an 'equivariant' block")
    n = cfg["equivariant"]["n"]
    if n > sys_.h0_L:
        raise ConfigurationError(f"n={n} exceeds h0(L)={sys_.h0_L}")
    field, certify = _field(cfg, args)
    engine = koszul.KoszulEngine(sys_, field, certify)
    cx = equivariant.build_invariant_complex(sys_, n)
    lines = ["q,p,invariant,koszul,agree"]
    bad = 0
    for q in range(0, n + 1):
        a = equivariant.invariant_cohomology(sys_, n, q, field, cx)
        b = engine.dim(n - q, q)
        bad += a != b
        lines.append(f"{q},{n - q},{a},{b},{'yes' if a == b else 'NO'}")
    bal = equivariant.exact_sequence_balance(sys_, n - 1, field, engine)
    bad += not bal.holds
    lines.append(
        f"# exact sequence at p={n - 1}: {bal.kernel_dim} - {bal.sections_dim} + "
        f"{bal.invariant_dim} - {bal.cokernel_dim} = {bal.alternating_sum}"
    )
    lines.append(f"# {sys_.describe()} n={n}: {'equality holds' if not bad else f'{bad} mismatches'}")
    out.emit("\n".join(lines) + "\n")
    return EXIT_DISAGREE if bad else EXIT_OK


COMMANDS: dict[str, Callable[..., int]] = {
    "betti": cmd_betti,
    "oracle-compare": cmd_oracle_compare,
    "duality": cmd_duality,
    "sweep": cmd_sweep,
    "fit": cmd_fit,
    "equivariant": cmd_equivariant,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="koszulcoh", description="Koszul cohomology tables and checks.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--field-prime", type=int, metavar="N")
        p.add_argument("--certify", action="store_true", help="rank over two primes, rationals on disagreement")
        p.add_argument("--threads", type=int, metavar="N")
        p.add_argument("--out", metavar="PATH")
    return parser


def main(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config)
        out = _Output(args.out or cfg.get("out"), stdout, stderr)
        return COMMANDS[args.command](cfg, args, out)
    except TruncationError as exc:
        stderr.write(f"truncated: {exc}\n")
        return EXIT_CONFIG
    except (ConfigurationError, UnsupportedInstanceError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    except IntegrityError as exc:
        stderr.write(f"integrity failure: {exc}\n")
        return EXIT_INTEGRITY


if __name__ == "__main__":
    sys.exit(main())
