"""Independent reference computations used by the tests.

Nothing here calls into the package's counting or solving code.
"""
import itertools

import numpy as np

# Representatives as printed for the seven classes, cycle order (b_i, s_j, b_k, s_l).
CLASS_REPRESENTATIVES = {
    "A": (1, 1, 1, 1), "B": (1, -1, -1, 1), "C": (1, 1, -1, -1), "D": (1, -1, 1, -1),
    "E": (-1, -1, -1, -1), "F": (1, 1, 1, -1), "G": (1, -1, -1, -1),
}


def _orbit(seq):
    # cycle edges e1=(bi,sj) e2=(sj,bk) e3=(bk,sl) e4=(sl,bi); swapping the two
    # buyers or the two sellers permutes the edges but never mixes node types
    e1, e2, e3, e4 = seq
    return {(e1, e2, e3, e4), (e2, e1, e4, e3), (e4, e3, e2, e1), (e3, e4, e1, e2)}


ORBIT_TO_CLASS = {}
for _label, _rep in CLASS_REPRESENTATIVES.items():
    for _s in _orbit(_rep):
        ORBIT_TO_CLASS[_s] = _label


def butterfly_census_by_orbits(M):
    """Class counts by looping over every 4-cycle and matching its symmetry orbit."""
    M = np.asarray(M)
    nb, ns = M.shape
    counts = dict.fromkeys(CLASS_REPRESENTATIVES, 0)
    for i, k in itertools.combinations(range(nb), 2):
        for j, l in itertools.combinations(range(ns), 2):
            seq = (M[i, j], M[k, j], M[k, l], M[i, l])
            if all(seq):
                counts[ORBIT_TO_CLASS[tuple(int(x) for x in seq)]] += 1
    return counts


def caterpillar_paths(M, i, j):
    """Simple paths b_i - s_k - b_l - s_j by sign triple, lexicographic (+ before -)."""
    M = np.asarray(M)
    nb, ns = M.shape
    order = list(itertools.product((1, -1), repeat=3))
    out = dict.fromkeys(order, 0)
    for k in range(ns):
        if k == j or M[i, k] == 0:
            continue
        for l in range(nb):
            if l == i or M[l, k] == 0 or M[l, j] == 0:
                continue
            out[(int(M[i, k]), int(M[l, k]), int(M[l, j]))] += 1
    return [out[p] for p in order]


def balance_minus_unbalance(M, i, j):
    counts = caterpillar_paths(M, i, j)
    order = list(itertools.product((1, -1), repeat=3))
    return sum(c if p.count(-1) % 2 == 0 else -c for c, p in zip(counts, order))


def dense_rwr(A, c):
    """(1 - c)(I - cA)^-1 by a dense direct solve."""
    A = np.asarray(A, dtype=float)
    n = len(A)
    return np.linalg.solve(np.eye(n) - c * A, (1 - c) * np.eye(n))


def central_difference(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2 * h)
    return g


def random_signed_matrix(rng, n_buyers, n_sellers, density, positive_fraction):
    linked = rng.random((n_buyers, n_sellers)) < density
    signs = np.where(rng.random((n_buyers, n_sellers)) < positive_fraction, 1, -1)
    return (linked * signs).astype(int)
