"""Command line entry point.

Exit codes: 0 success, 2 task infeasible, 1 anything else (bad usage,
invalid input files, budget exhaustion, cache mismatch).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

from .basis_graph import DEFAULT_STATE_CAP, load_cache, save_cache
from .bench import MODES, BenchConfig, run_bench
from .errors import TampError
from .grid import cost_json, env_to_pn, free_cells, load_env, plan_json_text, render
from .oracle import DEFAULT_ORACLE_BUDGET, joint_search
from .planner import Infeasible, OfflineModel, build_offline, plan
from .taskspec import parse

STATE_CAP_ENV = "TAMP_STATE_CAP"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; we reserve 2 for
    infeasible tasks, so usage problems are re-raised and mapped to 1."""

    def error(self, message):
        raise _UsageError(message)


def _state_cap(flag_value: Optional[int], default: Optional[int]) -> Optional[int]:
    if flag_value is not None:
        return flag_value
    raw = os.environ.get(STATE_CAP_ENV)
    if raw is not None:
        try:
            value = int(raw)
        except ValueError:
            raise _UsageError(f"{STATE_CAP_ENV} must be an integer, got {raw!r}")
        if value < 1:
            raise _UsageError(f"{STATE_CAP_ENV} must be positive, got {value}")
        return value
    return default


def _read_spec(args) -> str:
    if args.spec is not None:
        return args.spec
    with open(args.spec_file, "r", encoding="utf-8") as handle:
        return handle.read()


def _build_parser() -> _Parser:
    parser = _Parser(prog="tampnet",
                     description="Grid multi-agent route planning against "
                                 "boolean visit/end formulas.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p_build = sub.add_parser("build", help="precompute and cache the reachability index for an environment")
    p_build.add_argument("--env", required=True, help="environment JSON file")
    p_build.add_argument("--out", required=True, help="cache file to write")
    p_build.add_argument("--state-cap", type=int, default=None,
                         help=f"abort after this many explored markings (default {DEFAULT_STATE_CAP})")
    p_build.set_defaults(func=_cmd_build)

    p_plan = sub.add_parser("plan", help="plan routes satisfying a formula")
    p_plan.add_argument("--env", required=True, help="environment JSON file")
    group = p_plan.add_mutually_exclusive_group(required=True)
    group.add_argument("--spec", help="formula text, e.g. 'visit(2) & end(3) & !visit(1)'")
    group.add_argument("--spec-file", help="file containing the formula")
    p_plan.add_argument("--cache", help="reachability cache: loaded if present, else built and written here")
    p_plan.add_argument("--out", help="write the plan JSON here instead of stdout")
    p_plan.add_argument("--render", choices=("ascii", "svg"), help="also render the plan")
    p_plan.add_argument("--render-out", help="file for the rendering (required with --render)")
    p_plan.add_argument("--state-cap", type=int, default=None,
                        help=f"abort after this many explored markings (default {DEFAULT_STATE_CAP})")
    p_plan.set_defaults(func=_cmd_plan)

    p_oracle = sub.add_parser("oracle", help="exact joint search over agent configurations (slow; for cross-checking)")
    p_oracle.add_argument("--env", required=True, help="environment JSON file")
    group = p_oracle.add_mutually_exclusive_group(required=True)
    group.add_argument("--spec", help="formula text")
    group.add_argument("--spec-file", help="file containing the formula")
    p_oracle.add_argument("--budget", type=int, default=DEFAULT_ORACLE_BUDGET,
                          help=f"abort after this many explored states (default {DEFAULT_ORACLE_BUDGET})")
    p_oracle.set_defaults(func=_cmd_oracle)

    p_bench = sub.add_parser("bench", help="run a seeded random-instance sweep and write a CSV")
    p_bench.add_argument("--mode", choices=MODES, required=True,
                         help="which parameter the sweep varies")
    p_bench.add_argument("--out", required=True, help="CSV file to write")
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--sizes", type=int, nargs="+", default=[20],
                         help="square grid sizes (the first is used when mode is not 'size')")
    p_bench.add_argument("--agents", type=int, nargs="+", default=[3],
                         help="agent counts (the first is used when mode is not 'agents')")
    p_bench.add_argument("--props", type=int, nargs=2, default=[2, 10], metavar=("LO", "HI"),
                         help="labeled-cell count range")
    p_bench.add_argument("--reps", type=int, default=20, help="instances per sweep value")
    p_bench.add_argument("--oracle-budget", type=int, default=0,
                         help="cross-check each instance against the exact search (0 = off)")
    p_bench.add_argument("--state-cap", type=int, default=None)
    p_bench.set_defaults(func=_cmd_bench)

    return parser


def _cmd_build(args) -> int:
    env = load_env(args.env)
    cap = _state_cap(args.state_cap, DEFAULT_STATE_CAP)
    offline = build_offline(env, state_cap=cap)
    save_cache(offline.graph, offline.monitored, offline.partition, args.out)
    print(f"wrote {args.out}: {len(offline.graph)} markings, "
          f"{len(offline.graph.edges) - 1} edges")
    return 0


def _offline_from_cache(env, cache_path: str) -> OfflineModel:
    from .abstraction import build_monitored, build_simplified
    from .planner import escape_steps

    net = env_to_pn(env)
    props = set()
    for region in env.regions:
        props |= region.trajectory_props
    simplified = build_simplified(net)
    monitored = build_monitored(simplified, props)
    graph, partition = load_cache(cache_path, monitored)
    return OfflineModel(env, net, free_cells(env), simplified, monitored,
                        partition, graph, escape_steps(net, simplified.base_place))


def _cmd_plan(args) -> int:
    if args.render and not args.render_out:
        raise _UsageError("--render requires --render-out")
    env = load_env(args.env)
    spec = parse(_read_spec(args))
    cap = _state_cap(args.state_cap, DEFAULT_STATE_CAP)
    offline = None
    if args.cache and os.path.exists(args.cache):
        offline = _offline_from_cache(env, args.cache)
    if offline is None:
        offline = build_offline(env, state_cap=cap)
        if args.cache:
            save_cache(offline.graph, offline.monitored, offline.partition, args.cache)
    result = plan(env, spec, offline)
    if isinstance(result, Infeasible):
        print(result.message, file=sys.stderr)
        return 2
    text = plan_json_text(env, result)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    if args.render:
        with open(args.render_out, "w", encoding="utf-8") as handle:
            handle.write(render(env, result, args.render))
    return 0


def _cmd_oracle(args) -> int:
    env = load_env(args.env)
    spec = parse(_read_spec(args))
    result = joint_search(env, spec, state_budget=args.budget)
    if result is None:
        print("infeasible", file=sys.stderr)
        return 2
    payload = {
        "cost": cost_json(result.cost),
        "moves": [[agent, list(src), list(dst)] for agent, src, dst in result.moves],
    }
    sys.stdout.write(json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n")
    return 0


def _cmd_bench(args) -> int:
    cfg = BenchConfig(
        mode=args.mode,
        seed=args.seed,
        sizes=tuple(args.sizes),
        agent_counts=tuple(args.agents),
        prop_range=(args.props[0], args.props[1]),
        repetitions=args.reps,
        state_cap=_state_cap(args.state_cap, None),
        oracle_budget=args.oracle_budget,
    )
    rows = run_bench(cfg, args.out)
    instances = sum(1 for r in rows if r["rep"] != "mean")
    errors = sum(1 for r in rows if r["rep"] != "mean" and r["error"])
    print(f"wrote {args.out}: {instances} instances, {errors} errors")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except TampError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
