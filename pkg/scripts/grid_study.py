"""M x h grid of test ISE on one mechanism; writes a long-format CSV for plotting.

    python scripts/grid_study.py --mechanism single_relevant --backend tree --out grid.csv
"""

import argparse
import csv
import itertools

from condensity import experiments

DEFAULT_MS = [1, 10, 20, 40, 80, 160, 320]
DEFAULT_HS = [1e-4, 1e-3, 1e-2, 1e-1]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--mechanism", default="single_relevant")
    p.add_argument("--backend", default="tree", choices=["tree", "mlp"])
    p.add_argument("--m-list", type=int, nargs="+", default=DEFAULT_MS)
    p.add_argument("--h-list", type=float, nargs="+", default=DEFAULT_HS)
    p.add_argument("--seeds", type=int, nargs="+", default=[0])
    p.add_argument("--n-train", type=int, default=10_000)
    p.add_argument("--out", default="grid.csv")
    args = p.parse_args()

    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mechanism", "backend", "M", "h", "seed", "ise", "ise_original_units", "rounds_trained"])
        for M, h, seed in itertools.product(args.m_list, args.h_list, args.seeds):
            r = experiments.run(args.mechanism, args.backend, M=M, h=h, seed=seed, n_train=args.n_train)
            w.writerow([r.mechanism, r.backend, M, h, seed, repr(r.ise), repr(r.ise_original_units), r.rounds_trained])
            fh.flush()
            print(f"M={M:4d} h={h:g} seed={seed}: ISE {r.ise_original_units:.4f}")


if __name__ == "__main__":
    main()
