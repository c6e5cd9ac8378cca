"""Command line: synth, simulate, check, bench.

Exit codes: 0 success, 2 unrealizable spec, 3 audit violation, 1 any other error.
"""
import argparse
import json
import sys

from .errors import ShieldError, UnrealizableSpec
from .game import check_realizable, gen_relaxation_automaton, synthesize
from .shieldio import load_shield, save_shield
from .sim import ErrorPolicy, csv_text, simulate
from .spec import abstract, load_spec

OK, ERROR, UNREALIZABLE, VIOLATION = 0, 1, 2, 3


def _dump(obj):
    print(json.dumps(obj, indent=2, default=str))


def cmd_synth(args):
    spec = load_spec(args.spec)
    try:
        result = synthesize(abstract(spec), skip_rf=args.skip_rf)
    except UnrealizableSpec as e:
        print(f"unrealizable: {e}", file=sys.stderr)
        _dump({"counterexample": e.counterexample})
        return UNREALIZABLE
    save_shield(args.output, result.shield, spec, result.report)
    _dump(result.report)
    return OK


def _policy(args, spec):
    script = ()
    if args.script:
        with open(args.script) as f:
            script = json.load(f)
    elif args.scripted:
        script = spec.simulation.get("script", [])
    policy = ErrorPolicy.scripted(script, args.seed) if script else ErrorPolicy(0.0, args.seed)
    policy.rate = args.error_rate
    policy.__post_init__()
    return policy


def cmd_simulate(args):
    spec = load_spec(args.spec)
    shield, _ = load_shield(args.shield, spec)
    a = abstract(spec)
    steps = args.steps or int(spec.simulation.get("steps", 1000))
    sim = simulate(shield, a, steps, _policy(args, spec), mode=args.mode, objective=args.objective)
    if args.csv:
        with open(args.csv, "w") as f:
            f.write(csv_text(sim, timings=not args.no_timings))
    _dump(sim.metrics)
    return OK


def cmd_check(args):
    shield, spec = load_shield(args.shield)
    a = abstract(spec)
    relax = gen_relaxation_automaton(a)
    violations = check_realizable(shield, a, relax=relax)
    _dump({"shield": args.shield, "states": shield.n, "violations": violations})
    return VIOLATION if violations else OK


def cmd_bench(args):
    rows = []
    for path in args.specs:
        a = abstract(load_spec(path))
        result = synthesize(a)
        sim = simulate(result.shield, a, args.steps, ErrorPolicy(args.error_rate, args.seed),
                       mode=args.mode)
        m = sim.metrics
        rows.append({"benchmark": a.spec.name, "synth_s": result.report["time_s"],
                     "shield_states": result.shield.n, "steps": m["steps"],
                     "corrections": m["corrections"],
                     **{f"{k}_{q}": m[k][q] for k in ("bool_us", "pred_us", "lp_us")
                        for q in ("median", "p99")}})
    cols = ["benchmark", "synth_s", "shield_states", "steps", "corrections",
            "bool_us_median", "bool_us_p99", "pred_us_median", "pred_us_p99",
            "lp_us_median", "lp_us_p99"]
    print("\t".join(cols))
    for r in rows:
        print("\t".join("" if r[c] is None else f"{r[c]:.2f}" if isinstance(r[c], float) else str(r[c])
                        for c in cols))
    return OK


def parser():
    p = argparse.ArgumentParser(prog="realshield", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="synthesize a shield from a spec")
    s.add_argument("spec")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--skip-rf", action="store_true",
                   help="leave out the relaxation and feasibility constraints (demonstration only)")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("simulate", help="run the benchmark's plant with the shield in the loop")
    s.add_argument("spec")
    s.add_argument("shield")
    s.add_argument("--steps", type=int, default=None)
    s.add_argument("--error-rate", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--script", help="JSON list of [step, variable, value] error overrides")
    s.add_argument("--scripted", action="store_true", help="use the spec's own error script")
    s.add_argument("--csv")
    s.add_argument("--no-timings", action="store_true",
                   help="leave timing columns empty so the CSV is reproducible byte for byte")
    s.add_argument("--mode", choices=("strict", "fast"), default=None)
    s.add_argument("--objective", choices=("robust", "feasibility"), default="robust")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("check", help="exhaustive realizability audit of a shield file")
    s.add_argument("shield")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("bench", help="latency table over the given specs")
    s.add_argument("specs", nargs="*")
    s.add_argument("--steps", type=int, default=10000)
    s.add_argument("--error-rate", type=float, default=0.05)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--mode", choices=("strict", "fast"), default="fast")
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    args = parser().parse_args(argv)
    try:
        return args.func(args)
    except UnrealizableSpec as e:
        print(f"unrealizable: {e}", file=sys.stderr)
        return UNREALIZABLE
    except (ShieldError, OSError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return ERROR


if __name__ == "__main__":
    sys.exit(main())
