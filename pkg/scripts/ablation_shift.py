"""Feature ablations (A+M, w/o A, w/o M) with and without an appearance domain shift."""
import argparse
from dataclasses import replace

import numpy as np

from motlab.experiments import ABLATION_MODES, TrackerTemplate, derive_seed, evaluate_tracker, fit_tracker, \
    prepare_sequence, welch_test
from motlab.io_cli.config import write_report
from motlab.sensing import DomainShift
from motlab.sim_world import ScenarioConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--frames", type=int, default=150)
    ap.add_argument("--sigma", type=float, default=0.1, help="noise added after the rotation")
    ap.add_argument("--reid-noise", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=9)
    ap.add_argument("--report", default="ablation_shift.json")
    args = ap.parse_args()

    base = ScenarioConfig(duration_frames=args.frames, target_density=15, fps=30.0)
    results = {}
    for mode in ABLATION_MODES:
        template = TrackerTemplate(kind="parametric", mode=mode, reid_noise=args.reid_noise)
        plain, shifted = [], []
        for r in range(args.trials):
            train = [prepare_sequence(replace(base, seed=derive_seed(args.seed, 1, 0, r, s)), template.noise,
                                      template.reid_noise) for s in range(2)]
            cfg = fit_tracker(template, train)
            shift = DomainShift.random(seed=derive_seed(args.seed, 3, r), noise_sigma=args.sigma)
            tests = [replace(base, seed=derive_seed(args.seed, 2, 0, r, s)) for s in range(2)]
            plain.append(evaluate_tracker(cfg, [prepare_sequence(c, template.noise, template.reid_noise)
                                                for c in tests]).idf1)
            shifted.append(evaluate_tracker(cfg, [prepare_sequence(c, template.noise, template.reid_noise, shift)
                                                  for c in tests]).idf1)
        w = welch_test(plain, shifted)
        results[mode] = {"idf1": plain, "idf1_shifted": shifted, "p": w.p_value, "label": w.label}
        print(f"{mode:6}  IDF1 {np.mean(plain):.3f}  shifted {np.mean(shifted):.3f}  "
              f"drop {100 * (np.mean(plain) - np.mean(shifted)):.2f} pts  {w.label}")
    write_report(args.report, "ablation_shift", {"sigma": args.sigma, "modes": results}, args.seed)


if __name__ == "__main__":
    main()
