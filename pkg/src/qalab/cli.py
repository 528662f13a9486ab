"""Command-line front end: ``qalab {gen,spectrum,bounds,anneal,verify}``.

Exit codes: 0 ok, 1 failed check or invariant, 2 usage/parse error,
3 capacity exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import verify
from .config import RunConfig, load_config
from .errors import CapacityError, ParseError, QALabError, StructureError
from .harness import (bounds_failures, generate_instances, load_instance, run_anneal, run_bounds,
                      spectrum_table)
from .ising import DriverKind

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAPACITY = 0, 1, 2, 3


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--instance", nargs="+", type=Path, help="instance file(s)")
    p.add_argument("--config", type=Path, help="run config file")
    p.add_argument("--out", type=Path, help="output file or directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--dense-limit", type=int)
    p.add_argument("--driver", choices=[d.value for d in DriverKind])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qalab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write random k-body instances")
    p.add_argument("--n", type=int, required=True, help="number of sites")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--orders", default="1,2", help="term orders, e.g. 1,2,3")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("spectrum", help="eigenvalues versus gamma (CSV)")
    _common(p)
    p.add_argument("--gammas", type=_floats, help="comma-separated gamma grid")
    p.add_argument("--levels", type=int)

    p = sub.add_parser("bounds", help="bound-chain reports (JSON lines)")
    _common(p)
    p.add_argument("--gammas", type=_floats, help="comma-separated gamma grid")

    p = sub.add_parser("anneal", help="Schroedinger annealing sweeps (CSV)")
    _common(p)

    p = sub.add_parser("verify", help="run the built-in invariant suite")
    p.add_argument("--select", default="", help="only checks whose name contains this text")
    return parser


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.instance:
        cfg.instances = list(args.instance)
    if args.driver:
        cfg.driver = DriverKind.parse(args.driver)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    if args.dense_limit is not None:
        cfg.dense_limit = args.dense_limit
    if args.out is not None:
        cfg.out = args.out
    if getattr(args, "gammas", None):
        cfg.sweep["gamma"] = args.gammas
    return cfg.validate()


def _write(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")


def cmd_gen(args) -> int:
    orders = [int(x) for x in args.orders.replace(",", " ").split()]
    args.out.mkdir(parents=True, exist_ok=True)
    for k, text in enumerate(generate_instances(args.n, args.count, args.seed, orders)):
        (args.out / f"inst_n{args.n}_{k:03d}.txt").write_text(text, encoding="utf-8")
    print(f"wrote {args.count} instance(s) to {args.out}")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    cfg = _config(args)
    chunks = []
    for path in cfg.instances:
        inst = load_instance(path)
        table = spectrum_table(inst, cfg.driver, cfg.gammas, args.levels, cfg.dense_limit)
        chunks.append(table if len(cfg.instances) == 1 else f"# {path}\n{table}")
    _write("".join(chunks), cfg.out)
    return EXIT_OK


def cmd_bounds(args) -> int:
    cfg = _config(args)
    rows = run_bounds(cfg)
    _write("".join(json.dumps(r, sort_keys=True) + "\n" for r in rows), cfg.out)
    for r in rows:
        if r["exponent"] != r["default_exponent"]:
            print(f"note: {r['instance']} gamma={r['gamma']}: M not strictly positive at p={r['default_exponent']},"
                  f" used p={r['exponent']}", file=sys.stderr)
    failed = bounds_failures(rows)
    for r in failed:
        fails = [k for k, v in r.items() if k.startswith("check_") and v is False]
        print(f"FAIL {r['instance']} gamma={r['gamma']}: {', '.join(fails)}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_anneal(args) -> int:
    cfg = _config(args)
    if cfg.out is None:
        raise StructureError("anneal needs --out (or 'out' in [run]) for its output directory")
    rows = run_anneal(cfg, cfg.out)
    bad = [r for r in rows if r.get("status") != "ok"]
    for r in bad:
        print(f"run {r['run_id']}: {r['status']}", file=sys.stderr)
    print(f"{len(rows)} run(s) written to {cfg.out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    results = verify.run_all(args.select)
    width = max((len(name) for name, _, _ in results), default=10)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}")
    n_fail = sum(not ok for _, ok, _ in results)
    print(f"{len(results) - n_fail}/{len(results)} invariants hold")
    return EXIT_FAIL if n_fail else EXIT_OK


COMMANDS = {"gen": cmd_gen, "spectrum": cmd_spectrum, "bounds": cmd_bounds,
            "anneal": cmd_anneal, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ParseError, StructureError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QALabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
