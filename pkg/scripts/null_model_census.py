"""Butterfly census of an edge list (or a planted graph) against sign-shuffled nulls.

    python3 scripts/null_model_census.py --input data/senate.tsv --shuffles 200
    python3 scripts/null_model_census.py --planted 50 50 0.3 0.0
"""
import argparse
import sys

import numpy as np

from signed_bipartite.evaluation import generate_planted_graph
from signed_bipartite.graph import read_edge_list
from signed_bipartite.motifs import (CLASSES, count_butterflies, expected_fractions,
                                     expected_fractions_permutation, shuffle_signs,
                                     write_census_report)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--input")
    src.add_argument("--planted", nargs=4, metavar=("NB", "NS", "DENSITY", "NOISE"))
    ap.add_argument("--shuffles", type=int, default=200)
    ap.add_argument("--mode", choices=("permute", "resample"), default="permute")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if args.input:
        g = read_edge_list(args.input)
    else:
        nb, ns, dens, noise = args.planted
        g = generate_planted_graph(int(nb), int(ns), float(dens), float(noise), seed=args.seed)
    census = count_butterflies(g)
    write_census_report(census, sys.stdout, "table")

    if args.shuffles <= 0 or census.total == 0:
        return
    rng = np.random.default_rng(args.seed)
    runs = np.array([[count_butterflies(shuffle_signs(g, rng, args.mode)).fractions[c]
                      for c in CLASSES] for _ in range(args.shuffles)])
    mean = runs.mean(axis=0)
    se = runs.std(axis=0, ddof=1) / np.sqrt(len(runs))
    binom = expected_fractions(g.positive_fraction)
    perm = expected_fractions_permutation(g.n_positive, g.n_edges)
    print(f"\n{args.shuffles} {args.mode} shuffles")
    print(f"{'class':<6}{'mean':>10}{'E% binom':>11}{'z':>7}{'E% perm':>11}{'z':>7}")
    for n, c in enumerate(CLASSES):
        zb = (mean[n] - binom[c]) / se[n] if se[n] else float("nan")
        zp = (mean[n] - perm[c]) / se[n] if se[n] else float("nan")
        print(f"{c:<6}{mean[n]:>10.5f}{binom[c]:>11.5f}{zb:>7.2f}{perm[c]:>11.5f}{zp:>7.2f}")


if __name__ == "__main__":
    main()
