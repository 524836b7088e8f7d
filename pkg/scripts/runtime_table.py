"""Mean and median decode time per frame against the number of devices.

Algorithm 1 runs with K_max = K on the full 4096-sample frame; Algorithm 2
decodes 4 slots of 1024 samples with the default per-slot budget.  Prints a
table and a least-squares line for Algorithm 1.
"""

import argparse

import numpy as np

from rmaccess.harness import ExperimentConfig, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--K", default="40,60,80,100,120")
    ap.add_argument("--trials", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()

    ks = tuple(int(k) for k in a.K.split(","))
    med, mean = {}, {}
    for alg in (1, 2):
        cfg = ExperimentConfig(m=12, p=2, algorithm=alg, message_passing=False, k_sweep=ks,
                               trials=a.trials, seed=a.seed, list_plan="4")
        rows = run_experiment(cfg)
        med[alg] = [np.median([r["wall_s"] for r in rows if r["K"] == k and r["trial"] >= 0])
                    for k in ks]
        mean[alg] = [r["wall_s"] for r in rows if r["trial"] == -1]

    print(f"{'K':>5} {'alg1 mean':>10} {'alg1 med':>10} {'alg2 mean':>10} {'alg2 med':>10} "
          f"{'ratio':>6}")
    for i, k in enumerate(ks):
        print(f"{k:5d} {mean[1][i] * 1e3:8.1f}ms {med[1][i] * 1e3:8.1f}ms "
              f"{mean[2][i] * 1e3:8.1f}ms {med[2][i] * 1e3:8.1f}ms {med[2][i] / med[1][i]:6.2f}")
    t = np.array(med[1])
    k = np.array(ks, float)
    slope, icpt = np.polyfit(k, t, 1)
    fit = slope * k + icpt
    r2 = 1 - np.sum((t - fit) ** 2) / np.sum((t - t.mean()) ** 2)
    print(f"alg1 median time ~ {slope * 1e3:.3f} ms/device + {icpt * 1e3:.2f} ms, R^2 = {r2:.3f}")


if __name__ == "__main__":
    main()
