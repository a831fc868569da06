"""Full pipeline on one parameter draw, with a per-suite summary.

    python3 scripts/run_pipeline.py --l 1 --N 2 --seed 7 --out report.json
"""

import argparse
from collections import defaultdict

from sgsov import reports, suites
from sgsov.model import sample_params


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--l", type=int, default=1)
    ap.add_argument("--N", type=int, default=2)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--untwisted", action="store_true")
    ap.add_argument("--out")
    args = ap.parse_args()

    P = sample_params(args.l, args.N, args.seed, twisted=not args.untwisted)
    checks, ctx = suites.run(P)
    tally = defaultdict(lambda: [0, 0])
    for c in checks:
        tally[c.suite][0] += c.passed
        tally[c.suite][1] += 1
    for name in suites.ORDER:
        if name in tally:
            ok, n = tally[name]
            print(f"{name:<9} {ok}/{n}")
    for c in checks:
        if not c.passed:
            print(f"  FAIL {c.suite}.{c.name} = {c.value:.3g} ({c.kind} {c.bound:.0e}) {c.note}")
    if "q_rows" in ctx.extras:
        first = ctx.extras["q_rows"][0]
        print("first Baxter row:", first["error"] or f"a_t={first['a_t']} b_t={first['b_t']}")
    if args.out:
        doc = reports.envelope("pipeline", {"l": args.l, "N": args.N, "seed": args.seed},
                               {"params": P.to_json(), "checks": [c.to_json() for c in checks]})
        reports.emit_report(doc, args.out)


if __name__ == "__main__":
    main()
