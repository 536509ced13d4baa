"""Tune the SORT IoU threshold on a target set and on matched / mismatched synthetic sets."""
import argparse
from dataclasses import replace

from motlab.experiments import TrackerTemplate, derive_seed, prepare_sequence, tune_threshold
from motlab.io_cli.config import write_report
from motlab.sim_world import ScenarioConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--frames", type=int, default=150)
    ap.add_argument("--report", default="tune_transfer.json")
    args = ap.parse_args()

    template = TrackerTemplate(kind="sort", max_age=1, min_hits=3)
    sets = {
        "target": (ScenarioConfig(duration_frames=args.frames, target_density=25, fps=5.0, speed_dist=(3.0, 0.1)), 10),
        "matched": (ScenarioConfig(duration_frames=args.frames, target_density=15, fps=5.0, speed_dist=(3.0, 0.1)), 11),
        "mismatched": (ScenarioConfig(duration_frames=args.frames, target_density=15, fps=30.0,
                                      speed_dist=(1.0, 0.1)), 12),
    }
    rows = []
    for seed in range(args.seeds):
        row = {"seed": seed}
        for name, (cfg, role) in sets.items():
            seqs = [prepare_sequence(replace(cfg, seed=derive_seed(seed, role, s)), template.noise) for s in range(2)]
            row[name] = tune_threshold(seqs, template.threshold_grid, template)[0]
        rows.append(row)
        print(row)
    write_report(args.report, "tune_transfer", {"rows": rows}, None)


if __name__ == "__main__":
    main()
