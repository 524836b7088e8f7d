"""Success rate vs number of in-cell devices, Algorithm 1 vs Algorithm 2.

m = 12, gains drawn for in-cell devices only, 60 dB, list width 4.
Algorithm 2 uses 4 slots of 1024 samples without message passing, so each
message picks one slot at random.  Writes one CSV per algorithm and a plot.
"""

import argparse
from pathlib import Path

from rmaccess.cli import main as cli
from rmaccess.harness import ExperimentConfig, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--K", default="20,40,60,80,100,120")
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--outdir", default="results/success_vs_load")
    a = ap.parse_args()

    out = Path(a.outdir)
    ks = tuple(int(k) for k in a.K.split(","))
    paths = []
    for alg in (1, 2):
        cfg = ExperimentConfig(m=12, p=2, algorithm=alg, message_passing=False, k_sweep=ks,
                               trials=a.trials, seed=a.seed, snr_db=60, list_plan="4",
                               kmax_policy="slot-default", channel="gain-only",
                               workers=a.workers)
        path = out / f"alg{alg}.csv"
        rows = run_experiment(cfg, path)
        paths.append(str(path))
        print(f"Algorithm {alg}")
        for r in rows:
            if r["trial"] == -1:
                print(f"  K={r['K']:4d}  success={r['sr']:.4f}  false alarm={r['far']:.4f}  "
                      f"miss={r['mr']:.4f}  decode={r['wall_s'] * 1e3:.1f} ms")
    for metric in ("sr", "far", "mr"):
        cli(["plot", "--in", *paths, "--metric", metric, "--out", str(out / f"{metric}.png")])


if __name__ == "__main__":
    main()
