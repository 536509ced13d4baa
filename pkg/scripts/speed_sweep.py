"""Train at several walking speeds, test at a low frame rate, compare ID switches.

Lowering the test fps to a quarter multiplies per-frame displacement by four,
so the train speed of 4 m/s is the displacement-matched one.
"""
import argparse
import json
from dataclasses import asdict

from motlab.experiments import FactorGrid, TrackerTemplate, run_sweep
from motlab.io_cli.config import write_report
from motlab.sim_world import ScenarioConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--speeds", type=float, nargs="+", default=[1.0, 2.0, 4.0, 6.0])
    ap.add_argument("--test-fps", type=float, default=7.5)
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--frames", type=int, default=150)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--report", default="speed_sweep.json")
    args = ap.parse_args()

    base = ScenarioConfig(duration_frames=args.frames, target_density=15, fps=30.0)
    grid = FactorGrid("speed", tuple(args.speeds), (1.0,), args.trials, base, (("fps", args.test_fps),))
    template = TrackerTemplate(kind="parametric", mode="w/o A", train_sequences=2, test_sequences=3)
    res = run_sweep(grid, template, args.seed, args.workers)
    for v in args.speeds:
        c = res.cell(v, 1.0)
        print(f"train {v:4.1f} m/s  IDSW {c.mean('idsw'):7.1f} +- {c.std('idsw'):5.1f}  IDF1 {c.mean('idf1'):.3f}")
    rows = [{"train": v, **asdict(res.compare(1.0, v, 1.0, "idsw"))} for v in args.speeds if v != 1.0]
    print(json.dumps(rows, indent=1))
    write_report(args.report, "speed_sweep", {**res.to_dict(), "vs_train_1": rows}, args.seed)


if __name__ == "__main__":
    main()
