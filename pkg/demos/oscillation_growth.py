"""Largest observed oscillation ratios as J grows, against a J^(1/2) law.

Writes the curves as CSV next to this script; pass a trial count to go beyond
the quick default.
"""

import sys
from pathlib import Path

from osclab import harness as hz


def main(trials: int = 40):
    out = Path(__file__).with_name("growth_curves.csv")
    rows = []
    for scenario in ("martingale_osc", "carleson_osc", "dz_theorem"):
        report, code = hz.run_estimate({"scenario": scenario, "seed": 0, "trials": trials, "K": 12,
                                        "J_values": [4, 8, 16, 32, 64], "p_values": [1.5, 2.0, 4.0]})
        if code:
            raise SystemExit(report)
        print(f"\n{report['label']} ({trials} trials)")
        print("   p     J=4     J=8    J=16    J=32    J=64   growth")
        for est in report["estimates"]:
            vals = " ".join(f"{v:7.3f}" for v in est["per_J"])
            print(f"  {est['p']:3g} {vals}   {est['growth']:.2f}   (J^1/2 law: {64 ** 0.5 / 4 ** 0.5:.0f})")
        rows.append(hz.emit_plot_data(report).splitlines()[1:])
    out.write_text("x,y,series\n" + "\n".join(line for r in rows for line in r) + "\n")
    print(f"\ncurves written to {out}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 40)
