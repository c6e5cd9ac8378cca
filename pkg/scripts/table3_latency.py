"""Per-phase shield latency over long error-injected runs (fast mode by default).

Absolute numbers depend on the machine; the ordering Boolean step < prediction
< LP solve is the point.

    python3 scripts/table3_latency.py [--steps 10000] [--error-rate 0.05] [--mode fast]
"""
import argparse

import numpy as np

from realshield import abstract, benchmark, benchmark_names, load_spec, simulate, synthesize
from realshield.runtime import PASS
from realshield.sim import ErrorPolicy


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", help="benchmarks (default: all with a plant)")
    ap.add_argument("--steps", type=int, default=10000)
    ap.add_argument("--error-rate", type=float, default=0.05)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--mode", choices=("strict", "fast"), default="fast")
    args = ap.parse_args()
    names = args.names or [n for n in benchmark_names() if n != "running_example_bool"]
    cols = ["name", "steps", "corrections", "hit_rate", "bool_us", "pred_us", "lp_us", "correction_us"]
    print("\t".join(cols))
    for name in names:
        a = abstract(load_spec(benchmark(name)))
        sh = synthesize(a).shield
        s = simulate(sh, a, args.steps, ErrorPolicy(args.error_rate, args.seed), mode=args.mode)
        m = s.metrics
        fixes = [sum(r.timings.get(k, 0.0) for k in ("abs_us", "bool_us", "pred_us", "lp_us"))
                 for r in s.records if r.provenance != PASS]
        row = [name, m["steps"], m["corrections"],
               "" if m["hit_rate"] is None else f"{m['hit_rate']:.2f}",
               *("" if m[k]["median"] is None else f"{m[k]['median']:.2f}"
                 for k in ("bool_us", "pred_us", "lp_us")),
               f"{np.median(fixes):.1f}" if fixes else ""]
        print("\t".join(map(str, row)))


if __name__ == "__main__":
    main()
