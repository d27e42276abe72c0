"""Tree and MLP estimators on the three 20-covariate mechanisms (M=100, h=0.01).

Prints ISE (up to a constant, original units; lower is better) averaged over
seeds, next to the reference NN values.

    python scripts/proof_of_concept.py --seeds 0 1 2 --backends tree mlp
"""

import argparse

import numpy as np

from condensity import experiments


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--backends", nargs="+", default=["tree", "mlp"], choices=["tree", "mlp"])
    p.add_argument("--mechanisms", nargs="+", default=list(experiments.REFERENCE_NN_ISE))
    args = p.parse_args()

    print(f"{'backend':8s} " + " ".join(f"{m:>18s}" for m in args.mechanisms))
    for backend in args.backends:
        cells = []
        for mech in args.mechanisms:
            vals = [experiments.run(mech, backend, seed=s).ise_original_units for s in args.seeds]
            cells.append(f"{np.mean(vals):>10.4f} ±{np.std(vals):.4f}")
        print(f"{backend:8s} " + " ".join(cells))
    print(f"{'ref NN':8s} " + " ".join(f"{experiments.REFERENCE_NN_ISE[m]:>18.4f}" for m in args.mechanisms))


if __name__ == "__main__":
    main()
