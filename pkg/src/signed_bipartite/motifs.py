"""Signed butterfly census, signed caterpillar profiles and the balance-suggestion matrix.

Butterfly classes follow the sign sequence around the cycle
``(b_i, s_j, b_k, s_l)``::

    A (+,+,+,+)  B (+,-,-,+)  C (+,+,-,-)  D (+,-,+,-)  E (-,-,-,-)   balanced
    F (+,+,+,-)  G (+,-,-,-)                                        unbalanced

With two negative links, B puts both on one buyer, C both on one seller and
D gives every node one link of each sign.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateNullError, DomainError
from .graph import BUYER, SELLER, SignedBipartiteGraph

CLASSES = ("A", "B", "C", "D", "E", "F", "G")
BALANCED_CLASSES = ("A", "B", "C", "D", "E")
UNBALANCED_CLASSES = ("F", "G")
CLASS_SIGNS = {
    "A": "(+,+,+,+)", "B": "(+,-,-,+)", "C": "(+,+,-,-)", "D": "(+,-,+,-)",
    "E": "(-,-,-,-)", "F": "(+,+,+,-)", "G": "(+,-,-,-)",
}
# sign assignments of a labelled 4-cycle falling in each class, and their negative count
CLASS_MULTIPLICITY = {"A": 1, "B": 2, "C": 2, "D": 2, "E": 1, "F": 4, "G": 4}
CLASS_NEGATIVES = {"A": 0, "B": 2, "C": 2, "D": 2, "E": 4, "F": 1, "G": 3}

# (sigma1, sigma2, sigma3) in lexicographic order, + before -
CATERPILLAR_PATTERNS = tuple(itertools.product((1, -1), repeat=3))


def pattern_label(pattern) -> str:
    return "".join("+" if s > 0 else "-" for s in pattern)


@dataclass(frozen=True)
class ButterflyCensus:
    class_counts: dict
    positive_fraction: float
    fractions: dict = field(default_factory=dict)
    expected_fractions: dict = field(default_factory=dict)
    surprise: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.class_counts.values())

    @property
    def balanced_total(self) -> int:
        return sum(self.class_counts[c] for c in BALANCED_CLASSES)

    @property
    def unbalanced_total(self) -> int:
        return sum(self.class_counts[c] for c in UNBALANCED_CLASSES)

    @property
    def balanced_fraction(self) -> float:
        return self.balanced_total / self.total if self.total else float("nan")

    def counts_tuple(self) -> tuple:
        return tuple(self.class_counts[c] for c in CLASSES)

    def records(self) -> list[dict]:
        rows = [{"class": c, "signs": CLASS_SIGNS[c], "count": self.class_counts[c],
                 "fraction": self.fractions[c], "expected_fraction": self.expected_fractions[c],
                 "surprise": self.surprise[c]} for c in CLASSES]
        eb = sum(self.expected_fractions[c] for c in BALANCED_CLASSES)
        total = self.total
        for name, count, expected in (("Balanced", self.balanced_total, eb),
                                      ("Unbalanced", self.unbalanced_total, 1.0 - eb)):
            rows.append({"class": name, "signs": "", "count": count,
                         "fraction": count / total if total else float("nan"),
                         "expected_fraction": expected, "surprise": float("nan")})
        return rows


def expected_fractions(positive_fraction: float) -> dict:
    """Class shares when every link is independently positive with the given probability."""
    p = float(positive_fraction)
    if not (0.0 <= p <= 1.0) or math.isnan(p):
        raise DomainError(f"positive fraction must lie in [0, 1], got {positive_fraction}")
    q = 1.0 - p
    return {c: CLASS_MULTIPLICITY[c] * p ** (4 - CLASS_NEGATIVES[c]) * q ** CLASS_NEGATIVES[c]
            for c in CLASSES}


def expected_fractions_permutation(n_positive: int, n_edges: int) -> dict:
    """Class shares when a fixed multiset of signs is permuted over the links (needs 4+ links)."""
    if n_edges < 4 or not 0 <= n_positive <= n_edges:
        raise DomainError("need at least 4 links and 0 <= n_positive <= n_edges")
    m_neg = n_edges - n_positive

    def falling(n, k):
        return math.prod(range(n - k + 1, n + 1)) if k else 1

    denom = falling(n_edges, 4)
    return {c: CLASS_MULTIPLICITY[c] * falling(n_positive, 4 - CLASS_NEGATIVES[c])
            * falling(m_neg, CLASS_NEGATIVES[c]) / denom for c in CLASSES}


def shuffle_signs(graph: SignedBipartiteGraph, rng: np.random.Generator,
                  mode: str = "permute") -> SignedBipartiteGraph:
    """Null-model copy of ``graph``: same links, signs permuted or resampled i.i.d."""
    if mode == "permute":
        signs = rng.permutation(graph.signs)
    elif mode == "resample":
        signs = np.where(rng.random(graph.n_edges) < graph.positive_fraction, 1, -1)
    else:
        raise DomainError(f"unknown shuffle mode {mode!r}")
    return SignedBipartiteGraph(graph.n_buyers, graph.n_sellers, graph.buyers, graph.sellers,
                                signs, graph.buyer_ids, graph.seller_ids)


def surprise(observed_count, total_count, expected_fraction) -> float:
    """Standard deviations by which ``observed_count`` departs from its binomial expectation."""
    if total_count <= 0:
        raise DomainError("total count must be positive")
    e = float(expected_fraction)
    if e <= 0.0 or e >= 1.0:
        raise DegenerateNullError(f"expected fraction {e} leaves the null variance at zero")
    mean = total_count * e
    return (observed_count - mean) / math.sqrt(total_count * e * (1.0 - e))


def _finish_census(counts: dict, p: float) -> ButterflyCensus:
    counts = {c: int(counts[c]) for c in CLASSES}
    total = sum(counts.values())
    # an edgeless graph has no sign ratio; the symmetric null keeps E% well defined
    exp = expected_fractions(0.5 if math.isnan(p) else p)
    fr, s = {}, {}
    for c in CLASSES:
        fr[c] = counts[c] / total if total else 0.0
        try:
            s[c] = surprise(counts[c], total, exp[c]) if total else float("nan")
        except DegenerateNullError:
            s[c] = float("nan")
    return ButterflyCensus(counts, p, fr, exp, s)


def _c2(m: sp.spmatrix) -> int:
    d = m.data.astype(np.int64)
    return int((d * (d - 1) // 2).sum())


def _total(m: sp.spmatrix) -> int:
    return int(m.sum(dtype=np.int64))


def wedge_costs(graph: SignedBipartiteGraph) -> dict:
    """Wedges visited when pairing buyers (via sellers) or sellers (via buyers)."""
    deg_s = np.bincount(graph.sellers, minlength=graph.n_sellers).astype(np.int64)
    deg_b = np.bincount(graph.buyers, minlength=graph.n_buyers).astype(np.int64)
    return {BUYER: int((deg_s * (deg_s - 1) // 2).sum()),
            SELLER: int((deg_b * (deg_b - 1) // 2).sum())}


def count_butterflies(graph: SignedBipartiteGraph, pair_side: str | None = None) -> ButterflyCensus:
    """Census of the 7 signed butterfly classes by common-neighbour aggregation.

    For every unordered node pair on ``pair_side`` the common neighbours are
    tallied by their sign pattern; the class counts follow from pair
    combinations of those tallies. ``pair_side`` defaults to the side with
    fewer wedges.
    """
    if pair_side is None:
        costs = wedge_costs(graph)
        pair_side = BUYER if costs[BUYER] <= costs[SELLER] else SELLER
    if pair_side == BUYER:
        P, N = graph.positive_part, graph.negative_part
    elif pair_side == SELLER:
        P, N = graph.positive_part.T.tocsr(), graph.negative_part.T.tocsr()
    else:
        raise DomainError(f"unknown side {pair_side!r}")

    same_pos = sp.triu(P @ P.T, k=1).tocsr()
    same_neg = sp.triu(N @ N.T, k=1).tocsr()
    # mixed[i, k]: common neighbours with i positive and k negative; zero diagonal
    mixed = (P @ N.T).tocsr()
    mixed_sym = sp.triu(mixed + mixed.T, k=1).tocsr()
    mixed_cross = sp.triu(mixed.multiply(mixed.T), k=1)

    one_node_double_neg = _c2(mixed)       # one paired node carries both negatives
    shared_neighbour_neg = _total(same_pos.multiply(same_neg))
    counts = {
        "A": _c2(same_pos),
        "E": _c2(same_neg),
        "D": _total(mixed_cross),
        "F": _total(same_pos.multiply(mixed_sym)),
        "G": _total(same_neg.multiply(mixed_sym)),
    }
    if pair_side == BUYER:
        counts["B"], counts["C"] = one_node_double_neg, shared_neighbour_neg
    else:
        counts["B"], counts["C"] = shared_neighbour_neg, one_node_double_neg
    return _finish_census(counts, graph.positive_fraction)


def classify_butterflies(s_ij, s_kj, s_kl, s_il) -> np.ndarray:
    """Vectorised class index (into CLASSES) for cycles b_i-s_j-b_k-s_l-b_i."""
    s = [np.asarray(x) < 0 for x in (s_ij, s_kj, s_kl, s_il)]
    neg = s[0].astype(int) + s[1] + s[2] + s[3]
    buyer_pair = (s[0] & s[3]) | (s[1] & s[2])
    seller_pair = (s[0] & s[1]) | (s[2] & s[3])
    out = np.full(neg.shape, 3)             # D: opposite negatives
    out[(neg == 2) & buyer_pair] = 1
    out[(neg == 2) & seller_pair] = 2
    out[neg == 0] = 0
    out[neg == 4] = 4
    out[neg == 1] = 5
    out[neg == 3] = 6
    return out


def enumerate_butterflies_bruteforce(graph: SignedBipartiteGraph) -> ButterflyCensus:
    """Check every (b_i, s_j, b_k, s_l) with i<k, j<l; for small graphs only."""
    M = graph.dense()
    counts = np.zeros(len(CLASSES), dtype=np.int64)
    jj, ll = np.triu_indices(graph.n_sellers, k=1)
    for i, k in itertools.combinations(range(graph.n_buyers), 2):
        s_ij, s_kj, s_kl, s_il = M[i, jj], M[k, jj], M[k, ll], M[i, ll]
        closed = (s_ij != 0) & (s_kj != 0) & (s_kl != 0) & (s_il != 0)
        if closed.any():
            cls = classify_butterflies(s_ij[closed], s_kj[closed], s_kl[closed], s_il[closed])
            counts += np.bincount(cls, minlength=len(CLASSES))
    return _finish_census(dict(zip(CLASSES, counts.tolist())), graph.positive_fraction)


# -- caterpillars ----------------------------------------------------------------

@dataclass(frozen=True)
class CaterpillarProfile:
    """Simple paths b_i - s_k - b_l - s_j by sign pattern, in CATERPILLAR_PATTERNS order."""

    counts: tuple

    @property
    def balanced_path_total(self) -> int:
        return sum(c for c, p in zip(self.counts, CATERPILLAR_PATTERNS) if p.count(-1) % 2 == 0)

    @property
    def unbalanced_path_total(self) -> int:
        return sum(c for c, p in zip(self.counts, CATERPILLAR_PATTERNS) if p.count(-1) % 2 == 1)

    @property
    def net_balance(self) -> int:
        return self.balanced_path_total - self.unbalanced_path_total

    def as_dict(self) -> dict:
        return {pattern_label(p): c for p, c in zip(CATERPILLAR_PATTERNS, self.counts)}


_PATTERN_INDEX = {p: n for n, p in enumerate(CATERPILLAR_PATTERNS)}


def count_caterpillars(graph: SignedBipartiteGraph, buyer: int, seller: int) -> CaterpillarProfile:
    graph.check_pair(buyer, seller)
    counts = [0] * 8
    seller_adj = graph.seller_adjacency
    lookup = graph.sign_lookup
    for k, s1 in graph.buyer_adjacency[buyer]:
        if k == seller:
            continue
        for l, s2 in seller_adj[k]:
            if l == buyer:
                continue
            s3 = lookup.get((l, seller))
            if s3 is not None:
                counts[_PATTERN_INDEX[(s1, s2, s3)]] += 1
    return CaterpillarProfile(tuple(counts))


def caterpillar_counts(graph: SignedBipartiteGraph, buyers, sellers) -> np.ndarray:
    """Batch caterpillar profiles, shape (n_pairs, 8), via sign-split triple products.

    Backtracking walks through the (buyer, seller) link itself are removed
    explicitly so linked pairs count simple paths only.
    """
    buyers = np.asarray(buyers, dtype=np.int64)
    sellers = np.asarray(sellers, dtype=np.int64)
    out = np.zeros((len(buyers), 8), dtype=np.int64)
    if len(buyers) == 0:
        return out
    if buyers.min() < 0 or buyers.max() >= graph.n_buyers or \
            sellers.min() < 0 or sellers.max() >= graph.n_sellers:
        raise DomainError("pair index out of range")
    part = {1: graph.positive_part, -1: graph.negative_part}
    bpos, bneg = graph.degree_table[BUYER]
    spos, sneg = graph.degree_table[SELLER]
    bdeg = {1: bpos[buyers], -1: bneg[buyers]}
    sdeg = {1: spos[sellers], -1: sneg[sellers]}
    b_ij = np.asarray(graph.biadjacency[buyers, sellers]).ravel()
    for s1, s2 in itertools.product((1, -1), repeat=2):
        two_step = (part[s1] @ part[s2].T).tocsr()
        for s3 in (1, -1):
            full = np.asarray((two_step @ part[s3]).tocsr()[buyers, sellers]).ravel()
            via_target_seller = (b_ij == s1) * (s2 == s3) * sdeg[s2]
            via_source_buyer = (b_ij == s3) * (s1 == s2) * bdeg[s1]
            both = (b_ij == s1) & (s1 == s2) & (s2 == s3)
            out[:, _PATTERN_INDEX[(s1, s2, s3)]] = full - via_target_seller - via_source_buyer + both
    return out


# -- balance suggestions -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BalanceSuggestionMatrix:
    """Net balanced-butterfly gain for non-linked pairs joined by a length-3 path."""

    n_buyers: int
    n_sellers: int
    buyers: np.ndarray
    sellers: np.ndarray
    values: np.ndarray

    def __len__(self):
        return len(self.values)

    def get(self, buyer: int, seller: int) -> int:
        return self.as_dict().get((buyer, seller), 0)

    def as_dict(self) -> dict:
        d = self.__dict__.get("_dict")
        if d is None:
            d = dict(zip(zip(self.buyers.tolist(), self.sellers.tolist()), self.values.tolist()))
            self.__dict__["_dict"] = d
        return d

    def dense(self) -> np.ndarray:
        m = np.zeros((self.n_buyers, self.n_sellers), dtype=np.int64)
        m[self.buyers, self.sellers] = self.values
        return m


def balance_suggestion_matrix(graph: SignedBipartiteGraph) -> BalanceSuggestionMatrix:
    """``B Bᵀ B`` on the non-linked pairs, without forming the complement mask."""
    B = graph.biadjacency
    absB = abs(B)
    if graph.n_buyers <= graph.n_sellers:
        three = (B @ B.T) @ B
        reach = (absB @ absB.T) @ absB
    else:
        three = B @ (B.T @ B)
        reach = absB @ (absB.T @ absB)
    reach = reach.tocsr()
    reach.data[:] = 1
    reach = (reach - reach.multiply(absB)).tocoo()
    reach.eliminate_zeros()
    order = np.lexsort((reach.col, reach.row))
    rows = reach.row[order].astype(np.int64)
    cols = reach.col[order].astype(np.int64)
    vals = np.asarray(three.tocsr()[rows, cols]).ravel().astype(np.int64) if len(rows) \
        else np.zeros(0, np.int64)
    for a in (rows, cols, vals):
        a.setflags(write=False)
    return BalanceSuggestionMatrix(graph.n_buyers, graph.n_sellers, rows, cols, vals)


# -- reports -------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        return "nan" if math.isnan(x) else f"{x:.6g}"
    return str(x)


def write_census_report(census: ButterflyCensus, stream: TextIO, fmt: str = "records") -> None:
    cols = ["class", "signs", "count", "fraction", "expected_fraction", "surprise"]
    rows = census.records()
    if fmt == "records":
        stream.write("\t".join(cols) + "\n")
        for r in rows:
            stream.write("\t".join(_fmt(r[c]) for c in cols) + "\n")
        return
    if fmt != "table":
        raise DomainError(f"unknown format {fmt!r}")
    header = f"{'class':<12}{'count':>14}{'%':>10}{'E%':>10}{'s':>10}"
    stream.write(header + "\n" + "-" * len(header) + "\n")
    for r in rows:
        name = f"{r['class']} {r['signs']}".strip()
        stream.write(f"{name:<12}{r['count']:>14}{_fmt(r['fraction']):>10}"
                     f"{_fmt(r['expected_fraction']):>10}{_fmt(r['surprise']):>10}\n")
    stream.write(f"positive link fraction: {_fmt(census.positive_fraction)}\n")


def write_suggestions(graph: SignedBipartiteGraph, s_hat: BalanceSuggestionMatrix,
                      stream: TextIO) -> None:
    stream.write("buyer_id\tseller_id\tnet_gain\n")
    for i, j, v in zip(s_hat.buyers.tolist(), s_hat.sellers.tolist(), s_hat.values.tolist()):
        stream.write(f"{graph.buyer_ids[i]}\t{graph.seller_ids[j]}\t{v}\n")
