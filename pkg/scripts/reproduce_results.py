"""Drive the CLI end to end and drop every artifact into out/.

Usage: python3 scripts/reproduce_results.py [outdir]

Produces the geometric mechanism table, the benchmark user's optimal
mechanism with its LP report, the constraint-grid analysis, the derived
remap, the 200-trial verification sweep (JSON report and CSV), the
two-user infeasibility certificate, and the geometric-vs-laplace loss
table. Everything is seeded, so reruns are byte-identical except for
wall-clock fields.
"""

import json
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from privopt.cli import main  # noqa: E402

BENCHMARK_USER = {
    "prior": ["1/4", "0", "1/4", "0", "1/4", "1/4"],
    "loss": {"kind": "power", "exponent": "3/2"},
}


def run(args):
    print("$ privopt", " ".join(args))
    rc = main(args)
    if rc != 0:
        sys.exit(f"command failed with exit code {rc}")


def main_script():
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "out")
    out.mkdir(parents=True, exist_ok=True)

    user = out / "benchmark_user.json"
    user.write_text(json.dumps(BENCHMARK_USER, indent=2, sort_keys=True) + "\n")

    run(["mech", "geometric", "--alpha", "1/2", "--n", "5",
         "--out", str(out / "geometric.json")])
    run(["optimal", "--user", str(user), "--alpha", "1/2",
         "--out", str(out / "benchmark_mech.json"),
         "--report", str(out / "benchmark_report.json")])
    run(["analyze", "--mech", str(out / "benchmark_mech.json"),
         "--alpha", "1/2", "--out", str(out / "benchmark_analysis.json")])
    run(["remap", "--mech", str(out / "geometric.json"),
         "--user", str(user), "--out", str(out / "benchmark_remap.json")])
    run(["verify", "theorem1", "--n", "8", "--alphas", "1/4,1/2,3/4",
         "--trials", "200", "--seed", "7",
         "--report", str(out / "sweep_report.json"),
         "--csv", str(out / "sweep_trials.csv")])
    run(["nonoblivious", "counterexample", "--alpha", "1/2",
         "--report", str(out / "infeasibility_certificate.json")])
    run(["compare-laplace", "--alphas", "1/4,1/10,1/100,1/1000",
         "--csv", str(out / "loss_comparison.csv")])
    print(f"artifacts written to {out}/")


if __name__ == "__main__":
    main_script()
