"""2x2 camera-view train/test matrix (surveillance vs vehicle)."""
import argparse

from motlab.experiments import FactorGrid, TrackerTemplate, run_sweep
from motlab.io_cli.config import write_report
from motlab.sim_world import ScenarioConfig

VIEWS = ("surveillance", "vehicle")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--frames", type=int, default=120)
    ap.add_argument("--fps", type=float, default=7.5)
    ap.add_argument("--mode", default="w/o A", choices=("A+M", "w/o A", "w/o M"))
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--report", default="view_sweep.json")
    args = ap.parse_args()

    base = ScenarioConfig(duration_frames=args.frames, target_density=15, fps=args.fps)
    grid = FactorGrid("camera_view", VIEWS, VIEWS, args.trials, base)
    template = TrackerTemplate(kind="parametric", mode=args.mode, train_sequences=2, test_sequences=2)
    res = run_sweep(grid, template, args.seed, args.workers)
    print("IDF1 (rows: train view, columns: test view)")
    for tr in VIEWS:
        print(f"{tr:>13}", "  ".join(f"{res.cell(tr, te).mean('idf1'):.3f}" for te in VIEWS))
    diag, off, w = res.diagonal_test("idf1")
    print(f"diagonal {diag:.4f}  off-diagonal {off:.4f}  p = {w.p_value:.3g} {w.label}")
    write_report(args.report, "view_sweep", {**res.to_dict(), "diagonal_idf1": {
        "diagonal_mean": diag, "off_diagonal_mean": off, "p": w.p_value, "label": w.label}}, args.seed)


if __name__ == "__main__":
    main()
