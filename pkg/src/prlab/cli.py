"""Command-line entry point ``prlab``.

Every subcommand writes one JSON document to stdout and a run manifest
(argv, config echo, version, seed, timing, sha256 of stdout) to stderr or to
``--manifest PATH``.  ``prlab replay PATH`` reruns a manifest and checks that
stdout is byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

from . import __version__
from .bounds import (
    BoundReport,
    bound_linear_equation,
    bound_obtuse,
    equal_distance_exponent,
    exact_bounded_monomial_count,
    gamma,
    gamma_exponent_identifier,
    gamma_range_check,
    markov_bound,
    orthogonality_exponent,
    partition_rank_upper_bound_linear,
    partition_rank_upper_bound_polynomial,
    right_configuration_exponent,
    subset_constant,
    verify_poset_lemma,
)
from .errors import CheckFailure, ConfigError, PrlabError, SizeLimitError, budget
from .ffield import FieldSpec
from .indicators import (
    PartitionFunction,
    diagonal_value,
    distinctness_generator,
    evaluate_indicator,
    indicator_coefficients,
    indicator_value_lemma,
    rank_generator,
)
from .partition_lattice import enumerate_partitions
from .search import SearchConfig, max_avoiding_set, resolve_threads, sandwich_report
from .selftest import FAULTS, run_selftest
from .tensors import (
    PropertySpec,
    points_from_json,
    verify_main1_decomposition,
    verify_main2_diagonalization,
    verify_tensor_semantics,
)

EXIT_OK, EXIT_CHECK, EXIT_BUDGET, EXIT_CONFIG = 0, 2, 3, 4


@dataclass
class Outcome:
    payload: Any
    exit_code: int = EXIT_OK
    seed: int | None = None
    timing: dict[str, float] = field(default_factory=dict)
    csv_rows: list[dict] | None = None


# -- input helpers ---------------------------------------------------------------------


def load_json(text: str) -> Any:
    """Inline JSON, or ``@path`` to read it from a file."""
    try:
        if text.startswith("@"):
            return json.loads(Path(text[1:]).read_text())
        return json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read JSON from {text!r}: {exc}") from exc


def parse_field(text: str | None) -> FieldSpec | None:
    if text is None or text in ("Q", "rationals"):
        return None
    return FieldSpec.from_json(load_json(text))


def parse_function(k: int, field: FieldSpec | None, f_json: Any, generator: str | None, top: Any = None) -> PartitionFunction:
    if (f_json is None) == (generator is None):
        raise ConfigError("give exactly one of an explicit f or a generator")
    if generator is not None:
        if generator == "distinctness":
            f = distinctness_generator(k, field)
        elif generator.startswith("rank:"):
            f = rank_generator(k, int(generator[5:]), field)
        else:
            raise ConfigError(f"unknown generator {generator!r}; use distinctness or rank:R")
        mapping = dict(f.values)
    else:
        if not isinstance(f_json, dict):
            raise ConfigError("f must be a JSON object keyed by partition strings")
        mapping = dict(f_json)
    if top is None:
        return PartitionFunction.from_mapping(k, mapping, field)
    from .partition_lattice import SetPartition

    mapping[SetPartition.top(k)] = top
    return PartitionFunction.from_mapping(k, mapping, field, include_top=True)


def _scalar(v: Any) -> Any:
    if isinstance(v, Fraction):
        return v.numerator if v.denominator == 1 else str(v)
    return v.to_json()


# -- bound dispatch ----------------------------------------------------------------------


def _need(params: dict, *names: str) -> list[int]:
    missing = [n for n in names if params.get(n) is None]
    if missing:
        raise ConfigError(f"formula needs {', '.join('--' + m.replace('_', '-') for m in missing)}")
    return [int(params[n]) for n in names]


def _wrap(name: str, inputs: dict, value: Any, source: str, **extra: Any) -> BoundReport:
    return BoundReport(name, inputs, value, source, extra=extra)


def _markov(p: dict) -> BoundReport:
    n, q, m = _need(p, "n", "p", "m")
    if p.get("x") is None:
        raise ConfigError("formula needs --x")
    x = Fraction(str(p["x"]))
    b = markov_bound(n, q, m, x)
    count = exact_bounded_monomial_count(n, q, n * (q - 1) // m)
    rep = _wrap("markov", {"n": n, "p": q, "m": m, "x": str(x)}, b.value, "phi(x)^n with d = floor(n(p-1)/m)", exact=b.exact, count=count)
    rep.check("bound dominates the exact count", b.value >= count, f"{count} <= {float(b.value)}")
    return rep


BOUNDS: dict[str, Callable[[dict], BoundReport]] = {
    "obtuse": lambda p: bound_obtuse(*_need(p, "n", "q")),
    "linear": lambda p: bound_linear_equation(*_need(p, "n", "p", "k", "m")),
    "linear-rank": lambda p: _wrap(
        "linear-rank", dict(zip("npkm", _need(p, "n", "p", "k", "m"))),
        partition_rank_upper_bound_linear(*_need(p, "n", "p", "k", "m")),
        "partition-rank upper bound from bounded-degree monomials",
    ),
    "markov": _markov,
    "monomial-count": lambda p: _wrap(
        "monomial-count", dict(zip("npd", _need(p, "n", "p", "d"))),
        exact_bounded_monomial_count(*_need(p, "n", "p", "d")),
        "digit tuples in 0..p-1 with sum at most d",
    ),
    "subset-constant": lambda p: _wrap("subset-constant", {"k": _need(p, "k")[0]}, subset_constant(*_need(p, "k")), "number of nonempty proper subset pairs"),
    "identifier": lambda p: gamma_exponent_identifier(*_need(p, "k", "m", "deg"), q=p.get("q")),
    "right-configuration": lambda p: right_configuration_exponent(*_need(p, "k"), q=p.get("q")),
    "equal-distance": lambda p: equal_distance_exponent(*_need(p, "k", "q")),
    "orthogonality": lambda p: orthogonality_exponent(*_need(p, "k", "q")),
    "polynomial-rank": lambda p: partition_rank_upper_bound_polynomial(*_need(p, "n", "k", "m", "deg", "q")),
    "poset-lemma": lambda p: verify_poset_lemma(*_need(p, "k", "r"), FieldSpec(int(p["p"])) if p.get("p") else None),
    "gamma-range": lambda p: gamma_range_check(_int_list(p.get("p_list") or "5,7,11,13"), _int_list(p.get("m_list") or "3,4,5,6,7,8,9,10")),
}


def _int_list(v: Any) -> list[int]:
    if isinstance(v, str):
        try:
            return [int(x) for x in v.split(",") if x.strip()]
        except ValueError as exc:
            raise ConfigError(f"expected a comma-separated integer list, got {v!r}") from exc
    return [int(x) for x in v]


def compute_bound(params: dict) -> BoundReport:
    name = params.get("formula")
    if name not in BOUNDS:
        raise ConfigError(f"unknown bound formula {name!r}; choose from {sorted(BOUNDS)}")
    try:
        return BOUNDS[name](params)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


# -- subcommands -------------------------------------------------------------------------------


def cmd_lattice(args: argparse.Namespace) -> Outcome:
    lat = enumerate_partitions(args.k)
    out: dict[str, Any] = {
        "k": args.k,
        "size": lat.size,
        "partitions": [str(p) for p in lat.partitions],
        "ranks": [int(r) for r in lat.rank],
    }
    if not args.no_mobius:
        if lat.size**2 > budget():
            raise SizeLimitError(f"Möbius matrix has {lat.size ** 2} entries; pass --no-mobius or raise PRLAB_BUDGET")
        out["mobius"] = lat.mobius.tolist()
    return Outcome(out)


def cmd_indicator(args: argparse.Namespace) -> Outcome:
    F = parse_field(args.field)
    f = parse_function(args.k, F, load_json(args.f) if args.f else None, args.generator)
    c = indicator_coefficients(f)
    out: dict[str, Any] = {
        "k": args.k,
        "field": F.to_json() if F else "rationals",
        "f": f.to_json(),
        "coefficients": c.to_json(),
        "support_size": len(c.support),
        "diagonal_value": _scalar(diagonal_value(f)),
    }
    if args.tuple is not None:
        tup = [x.strip() for x in args.tuple.split(",")]
        by_sum = evaluate_indicator(c, tup)
        by_lemma = indicator_value_lemma(f, tup)
        out["tuple"] = tup
        out["value"] = _scalar(by_sum)
        out["value_closed_form"] = _scalar(by_lemma)
        if by_sum != by_lemma:
            return Outcome(out, EXIT_CHECK)
    return Outcome(out)


def _points_for(cfg: dict, spec: PropertySpec, threads: int) -> list:
    rows = cfg.get("set", "search")
    if rows == "search":
        return max_avoiding_set(SearchConfig(spec, seed=int(cfg.get("seed", 0)), threads=threads)).best_set
    return points_from_json(spec, rows)


def cmd_verify(args: argparse.Namespace) -> Outcome:
    cfg = load_json(args.config)
    if not isinstance(cfg, dict) or "property" not in cfg:
        raise ConfigError("verify config must be an object with a property")
    spec = PropertySpec.from_json(cfg["property"])
    what = cfg.get("check", "semantics")
    seed = int(cfg.get("seed", 0))
    limit = cfg.get("limit")
    if what == "semantics":
        rep = verify_tensor_semantics(spec, mode=cfg.get("mode", "exhaustive"), samples=int(cfg.get("samples", 2000)), seed=seed, limit=limit)
        ok = rep.ok
    elif what == "diagonalisation":
        f = parse_function(spec.k, spec.field, cfg.get("f"), cfg.get("generator"))
        rep = verify_main2_diagonalization(f, spec, _points_for(cfg, spec, args.threads), limit=limit)
        # Failed hypotheses are reported, not errors; a wrong diagonal is.
        ok = rep.off_diagonal_zero and rep.diagonal_matches_prediction
    elif what == "decomposition":
        f = parse_function(spec.k, spec.field, cfg.get("f"), cfg.get("generator"), top=cfg.get("top_value", 0))
        rep = verify_main1_decomposition(f, spec, _points_for(cfg, spec, args.threads), limit=limit)
        ok = rep.identity_holds
    else:
        raise ConfigError("check must be semantics, diagonalisation or decomposition")
    out = {"check": what, "property": spec.to_json(), "report": rep.to_json(), "ok": bool(ok)}
    return Outcome(out, EXIT_OK if ok else EXIT_CHECK, seed=seed)


def cmd_bound(args: argparse.Namespace) -> Outcome:
    params = {k: v for k, v in vars(args).items() if k in BOUND_PARAMS}
    rep = compute_bound(params)
    return Outcome(rep.to_json(), EXIT_OK if rep.ok else EXIT_CHECK)


def cmd_gamma(args: argparse.Namespace) -> Outcome:
    if args.p_list or args.m_list:
        rows = []
        for p in _int_list(args.p_list or str(args.p)):
            for m in _int_list(args.m_list or str(args.m)):
                rows.append(gamma(p, m, args.tol).to_json())
        csv_rows = [{k: r[k] for k in ("p", "m", "x_star", "value", "certified_upper")} for r in rows]
        return Outcome({"results": rows}, csv_rows=csv_rows)
    if args.p is None or args.m is None:
        raise ConfigError("gamma needs --p and --m, or --p-list/--m-list")
    res = gamma(args.p, args.m, args.tol)
    return Outcome(res.to_json(), csv_rows=[{k: res.to_json()[k] for k in ("p", "m", "x_star", "value", "certified_upper")}])


def _search_config(args: argparse.Namespace) -> tuple[SearchConfig, dict]:
    cfg = load_json(args.config)
    if not isinstance(cfg, dict):
        raise ConfigError("search config must be a JSON object")
    cfg = dict(cfg)
    bound = cfg.pop("bound", None)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.mode is not None:
        cfg["mode"] = args.mode
    cfg["threads"] = args.threads
    return SearchConfig.from_json(cfg), bound


def cmd_search(args: argparse.Namespace) -> Outcome:
    config, _ = _search_config(args)
    res = max_avoiding_set(config)
    out = {"config": config.to_json(), "result": res.to_json(config.field)}
    return Outcome(out, seed=config.seed)


def cmd_sandwich(args: argparse.Namespace) -> Outcome:
    config, bound = _search_config(args)
    if not isinstance(bound, dict):
        raise ConfigError('sandwich config needs "bound": {"formula": ..., parameters}')
    rep = compute_bound(bound)
    try:
        out = sandwich_report(config, rep)
        code = EXIT_OK
    except CheckFailure as exc:
        out = {"consistent": False, "error": str(exc)}
        code = EXIT_CHECK
    out["bound"] = rep.to_json()
    out["config"] = config.to_json()
    return Outcome(out, code, seed=config.seed)


def cmd_selftest(args: argparse.Namespace) -> Outcome:
    res = run_selftest(args.level, args.inject_fault)
    timing = res.pop("timing")
    for cid in res["failed"]:
        detail = next(c["detail"] for c in res["checks"] if c["id"] == cid)
        print(f"FAILED {cid}: {detail}", file=sys.stderr)
    return Outcome(res, EXIT_OK if res["passed"] else EXIT_CHECK, timing=timing)


COMMANDS: dict[str, Callable[[argparse.Namespace], Outcome]] = {
    "lattice": cmd_lattice,
    "indicator": cmd_indicator,
    "verify": cmd_verify,
    "bound": cmd_bound,
    "gamma": cmd_gamma,
    "search": cmd_search,
    "sandwich": cmd_sandwich,
    "selftest": cmd_selftest,
}

BOUND_PARAMS = ("formula", "n", "p", "q", "k", "m", "r", "d", "deg", "x", "p_list", "m_list")


# -- parser ------------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--human", action="store_true", help="indented JSON instead of one line")
    common.add_argument("--threads", type=int, default=None, help="worker processes (default: available CPUs)")
    common.add_argument("--manifest", metavar="PATH", help="write the run manifest here instead of stderr")
    common.add_argument("--csv", metavar="PATH", help="also write a flat CSV table where the command has one")

    parser = argparse.ArgumentParser(prog="prlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"prlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lattice", parents=[common], help="partitions, ranks and Möbius matrix of Π_k")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--no-mobius", action="store_true")

    p = sub.add_parser("indicator", parents=[common], help="indicator coefficients and diagonal value of f")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--f", help="JSON object partition -> value, or @file")
    p.add_argument("--generator", help="distinctness or rank:R")
    p.add_argument("--field", help="prime p, JSON field spec, or Q (default)")
    p.add_argument("--tuple", help="comma-separated tuple to evaluate the indicator on")

    p = sub.add_parser("verify", parents=[common], help="tensor semantics, diagonalisation or decomposition checks")
    p.add_argument("--config", required=True, help="JSON or @file")

    p = sub.add_parser("bound", parents=[common], help="closed-form bounds with cross-checks")
    p.add_argument("--formula", required=True, choices=sorted(BOUNDS))
    for name in ("n", "p", "q", "k", "m", "r", "d", "deg"):
        p.add_argument(f"--{name}", type=int)
    p.add_argument("--x", help="rational in (0,1), e.g. 19/32")
    p.add_argument("--p-list")
    p.add_argument("--m-list")

    p = sub.add_parser("gamma", parents=[common], help="certified minimum of the Markov ratio")
    p.add_argument("--p", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--p-list")
    p.add_argument("--m-list")

    for name, help_text in (("search", "largest avoiding set"), ("sandwich", "search result against an upper bound")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--config", required=True, help="JSON or @file")
        p.add_argument("--seed", type=int)
        p.add_argument("--mode", choices=("exact", "greedy", "random_restart"))

    p = sub.add_parser("selftest", parents=[common], help="run the built-in acceptance checks")
    p.add_argument("--level", choices=("quick", "full"), default="quick")
    p.add_argument("--inject-fault", choices=FAULTS)

    p = sub.add_parser("replay", help="rerun a manifest and compare output digests")
    p.add_argument("manifest_path")
    return parser


# -- execution ----------------------------------------------------------------------------------------


def _render(payload: Any, human: bool) -> str:
    if human:
        return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n"


def _config_echo(args: argparse.Namespace) -> dict:
    echo = {k: v for k, v in vars(args).items() if k not in ("manifest",)}
    for key in ("config", "f"):
        if isinstance(echo.get(key), str) and echo[key].startswith("@"):
            echo[f"{key}_resolved"] = load_json(echo[key])
    return echo


def execute(argv: list[str]) -> tuple[int, str, str, dict | None]:
    """Run one command; returns (exit code, stdout text, stderr text, manifest)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_CONFIG, "", "", None
    if args.command == "replay":
        return _replay(args.manifest_path)
    args.threads = resolve_threads(args.threads)
    err = io.StringIO()
    start = time.monotonic()
    old_stderr, sys.stderr = sys.stderr, err
    try:
        outcome = COMMANDS[args.command](args)
    except ConfigError as exc:
        outcome = Outcome({"error": "invalid config", "message": str(exc)}, EXIT_CONFIG)
    except SizeLimitError as exc:
        outcome = Outcome({"error": "budget exceeded", "message": str(exc)}, EXIT_BUDGET)
    except CheckFailure as exc:
        outcome = Outcome({"error": "check failed", "message": str(exc)}, EXIT_CHECK)
    except PrlabError as exc:
        outcome = Outcome({"error": type(exc).__name__, "message": str(exc)}, EXIT_CHECK)
    finally:
        sys.stderr = old_stderr
    elapsed = time.monotonic() - start
    text = _render(outcome.payload, args.human)
    if args.csv:
        if outcome.csv_rows is None:
            print(f"note: {args.command} has no CSV table; --csv ignored", file=err)
        else:
            _write_csv(args.csv, outcome.csv_rows)
    manifest = {
        "command": args.command,
        "argv": list(argv),
        "config": _config_echo(args),
        "version": __version__,
        "seed": outcome.seed,
        "timing": {"wall_seconds": round(elapsed, 3), **outcome.timing},
        "exit_code": outcome.exit_code,
        "output_sha256": hashlib.sha256(text.encode()).hexdigest(),
    }
    return outcome.exit_code, text, err.getvalue(), manifest


def _write_csv(path: str, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else [])
        writer.writeheader()
        writer.writerows(rows)


def _replay(path: str) -> tuple[int, str, str, dict | None]:
    try:
        old = json.loads(Path(path).read_text())
        argv = list(old["argv"])
        want = old["output_sha256"]
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        return EXIT_CONFIG, _render({"error": "invalid manifest", "message": str(exc)}, False), "", None
    argv = [
        a
        for i, a in enumerate(argv)
        if a != "--manifest" and not a.startswith("--manifest=") and (i == 0 or argv[i - 1] != "--manifest")
    ]
    code, text, err, manifest = execute(argv)
    got = manifest["output_sha256"] if manifest else None
    same = got == want
    summary = {"replayed": old.get("command"), "identical": same, "expected_sha256": want, "actual_sha256": got}
    err += _render(summary, False)
    return (code if same else EXIT_CHECK), text, err, manifest


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    code, text, err, manifest = execute(argv)
    sys.stdout.write(text)
    sys.stdout.flush()
    if err:
        sys.stderr.write(err)
    if manifest is not None:
        dest = _manifest_path(argv)
        if dest:
            Path(dest).write_text(_render(manifest, True))
        else:
            sys.stderr.write("manifest " + _render(manifest, False))
    return code


def _manifest_path(argv: list[str]) -> str | None:
    for i, a in enumerate(argv):
        if a == "--manifest" and i + 1 < len(argv):
            return argv[i + 1]
        if a.startswith("--manifest="):
            return a.split("=", 1)[1]
    return None


if __name__ == "__main__":
    sys.exit(main())
