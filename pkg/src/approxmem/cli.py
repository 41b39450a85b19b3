"""Command line entry point.

    approxmem run     --scenario FILE --seed N --out DIR
    approxmem oracle  --scenario FILE --threshold Q
    approxmem sweep   --kind {sensitivity,invocation_period,state_space} --scenario FILE
    approxmem replay  --trace DIR/trace.csv

Exit codes: 0 success, 1 replay mismatch, 2 configuration error, 3 infeasible oracle.
"""

from __future__ import annotations

import argparse
import sys

import yaml

from .errors import ConfigurationError, DomainError
from .harness import (
    SWEEP_KINDS,
    brute_force_oracle,
    load_scenario,
    replay,
    run_scenario,
    save_run,
    sweep,
    sweep_csv,
)

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    result = run_scenario(scenario, args.seed)
    path = save_run(result, scenario, args.seed, args.out)
    print(yaml.safe_dump(result.summary.to_dict(), sort_keys=False), end="")
    print(f"trace written to {path}")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    scenario = load_scenario(args.scenario)
    res = brute_force_oracle(scenario, args.threshold, args.seed, args.frames)
    if args.table:
        for cfg, power, q in res.table:
            print(f"{cfg.l1:.1f} {cfg.l2:.1f} {cfg.dram:g} power={power:.4f} median_q={q:.3f}")
    status = "feasible" if res.feasible else "INFEASIBLE"
    print(f"{status}: {res.config} power={res.power:.4f} median_q={res.median_q:.3f} threshold={res.threshold:g}")
    return EXIT_OK if res.feasible else EXIT_INFEASIBLE


def _cmd_sweep(args) -> int:
    scenario = load_scenario(args.scenario)
    values = None
    if args.values is not None:
        values = [float(v) if args.kind == "sensitivity" else int(v) for v in args.values.split(",") if v]
    text = sweep_csv(sweep(args.kind, scenario, args.seed, values))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_replay(args) -> int:
    ok, msg = replay(args.trace)
    print(("replay OK: " if ok else "replay MISMATCH: ") + msg)
    return EXIT_OK if ok else EXIT_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="approxmem", description="Approximate memory hierarchy with a learned knob controller.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario and write trace.csv, summary.yaml, run.yaml")
    r.add_argument("--scenario", required=True)
    r.add_argument("--seed", type=_u64, default=0)
    r.add_argument("--out", required=True)
    r.set_defaults(func=_cmd_run)

    o = sub.add_parser("oracle", help="enumerate every knob configuration and report the cheapest feasible one")
    o.add_argument("--scenario", required=True)
    o.add_argument("--threshold", type=float, required=True)
    o.add_argument("--seed", type=_u64, default=0)
    o.add_argument("--frames", type=int, default=None, help="calibration segment length (default: scenario oracle.frames)")
    o.add_argument("--table", action="store_true", help="also print every configuration")
    o.set_defaults(func=_cmd_oracle)

    s = sub.add_parser("sweep", help="vary one dimension of a scenario, emit long-format CSV")
    s.add_argument("--kind", required=True, choices=SWEEP_KINDS)
    s.add_argument("--scenario", required=True)
    s.add_argument("--seed", type=_u64, default=0)
    s.add_argument("--values", default=None, help="comma-separated grid overriding the default")
    s.add_argument("--out", default=None)
    s.set_defaults(func=_cmd_sweep)

    rp = sub.add_parser("replay", help="re-run a saved trace from its run.yaml and compare bytes")
    rp.add_argument("--trace", required=True)
    rp.set_defaults(func=_cmd_replay)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
