"""Six-method AUC/F1 comparison on planted two-faction graphs.

    python3 scripts/planted_comparison.py --seeds 0 1 2 3 4
    python3 scripts/planted_comparison.py --noise 0.05 --tune
"""
import argparse
import time

import numpy as np

from signed_bipartite.evaluation import (METHODS, auc, generate_planted_graph, grid_search,
                                         make_config, run_experiment)
from signed_bipartite.graph import SplitSpec, split_edges


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--buyers", type=int, default=200)
    ap.add_argument("--sellers", type=int, default=100)
    ap.add_argument("--density", type=float, default=0.1)
    ap.add_argument("--noise", type=float, default=0.1)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--methods", nargs="+", default=list(METHODS), choices=METHODS)
    ap.add_argument("--tune", action="store_true", help="pick hyperparameters on validation first")
    args = ap.parse_args()

    rows = {m: [] for m in args.methods}
    ceiling = []
    start = time.perf_counter()
    for seed in args.seeds:
        g, fb, fs = generate_planted_graph(args.buyers, args.sellers, args.density, args.noise,
                                           seed=seed, return_factions=True)
        spec = SplitSpec(seed=seed)
        test = split_edges(g, spec).test
        ceiling.append(auc(np.where(fb[test.buyers] == fs[test.sellers], 1, -1), test.signs))
        for method in args.methods:
            if args.tune:
                config, _ = grid_search(g, method, split_spec=spec)
            else:
                config = make_config(method, seed=seed)
            rep = run_experiment(g, method, config, spec).report
            rows[method].append((rep.auc, rep.f1))

    print(f"{'method':<10}{'median AUC':>12}{'median F1':>12}   per-seed AUC")
    for method, vals in rows.items():
        a = np.array(vals)
        per = " ".join(f"{x:.3f}" for x in a[:, 0])
        print(f"{method:<10}{np.median(a[:, 0]):>12.3f}{np.median(a[:, 1]):>12.3f}   {per}")
    print(f"{'oracle':<10}{np.median(ceiling):>12.3f}{'':>12}   "
          + " ".join(f"{x:.3f}" for x in ceiling))
    print(f"elapsed {time.perf_counter() - start:.1f}s")


if __name__ == "__main__":
    main()
