"""Signed bipartite graph container, edge-list ingestion and train/val/test splitting.

Buyers index the rows of the biadjacency matrix ``B`` and sellers its columns;
``B[i, j]`` is +1, -1 or 0 (no link).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, NamedTuple, Sequence, TextIO

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, DuplicateEdgeError, ParseError, SplitError

BUYER = "buyer"
SELLER = "seller"
SIDES = (BUYER, SELLER)


def _frozen(a, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype).reshape(-1)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SignedBipartiteGraph:
    """Immutable signed bipartite network.

    Edges are stored as three parallel arrays in insertion order. Node ids are
    the external string labels, position ``k`` of ``buyer_ids`` naming buyer
    index ``k``.
    """

    n_buyers: int
    n_sellers: int
    buyers: np.ndarray
    sellers: np.ndarray
    signs: np.ndarray
    buyer_ids: tuple = field(default=())
    seller_ids: tuple = field(default=())

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "buyers", _frozen(self.buyers, np.int64))
        set_(self, "sellers", _frozen(self.sellers, np.int64))
        set_(self, "signs", _frozen(self.signs, np.int8))
        if not (len(self.buyers) == len(self.sellers) == len(self.signs)):
            raise DomainError("edge arrays must have equal length")
        if self.n_buyers < 0 or self.n_sellers < 0:
            raise DomainError("node counts must be non-negative")
        if len(self.buyers):
            if self.buyers.min() < 0 or self.buyers.max() >= self.n_buyers:
                raise DomainError("buyer index out of range")
            if self.sellers.min() < 0 or self.sellers.max() >= self.n_sellers:
                raise DomainError("seller index out of range")
            if not np.all(np.abs(self.signs) == 1):
                raise DomainError("edge signs must be +1 or -1")
            keys = self.buyers * max(self.n_sellers, 1) + self.sellers
            if len(np.unique(keys)) != len(keys):
                raise DuplicateEdgeError("duplicate (buyer, seller) pair")
        if not self.buyer_ids:
            set_(self, "buyer_ids", tuple(f"b{i}" for i in range(self.n_buyers)))
        if not self.seller_ids:
            set_(self, "seller_ids", tuple(f"s{j}" for j in range(self.n_sellers)))
        set_(self, "buyer_ids", tuple(self.buyer_ids))
        set_(self, "seller_ids", tuple(self.seller_ids))
        if len(self.buyer_ids) != self.n_buyers or len(self.seller_ids) != self.n_sellers:
            raise DomainError("id tables must match node counts")

    # -- construction helpers ---------------------------------------------
    @classmethod
    def from_edges(cls, edges: Iterable[tuple[int, int, int]], n_buyers=None, n_sellers=None,
                   buyer_ids=(), seller_ids=()) -> "SignedBipartiteGraph":
        edges = list(edges)
        arr = np.array(edges, dtype=np.int64).reshape(-1, 3)
        if n_buyers is None:
            n_buyers = int(arr[:, 0].max()) + 1 if len(arr) else 0
        if n_sellers is None:
            n_sellers = int(arr[:, 1].max()) + 1 if len(arr) else 0
        return cls(n_buyers, n_sellers, arr[:, 0], arr[:, 1], arr[:, 2], buyer_ids, seller_ids)

    @classmethod
    def from_matrix(cls, matrix) -> "SignedBipartiteGraph":
        """Build from a dense biadjacency matrix with entries in {-1, 0, 1}."""
        m = np.asarray(matrix)
        if m.ndim != 2:
            raise DomainError("biadjacency matrix must be 2-D")
        rows, cols = np.nonzero(m)
        return cls(m.shape[0], m.shape[1], rows, cols, m[rows, cols])

    def _replace_edges(self, buyers, sellers, signs) -> "SignedBipartiteGraph":
        return SignedBipartiteGraph(self.n_buyers, self.n_sellers, buyers, sellers, signs,
                                    self.buyer_ids, self.seller_ids)

    def edge_subgraph(self, mask) -> "SignedBipartiteGraph":
        """Keep the edges selected by ``mask``; every node is retained."""
        mask = np.asarray(mask)
        return self._replace_edges(self.buyers[mask], self.sellers[mask], self.signs[mask])

    def with_edge(self, buyer: int, seller: int, sign: int) -> "SignedBipartiteGraph":
        return self._replace_edges(np.append(self.buyers, buyer), np.append(self.sellers, seller),
                                   np.append(self.signs, sign))

    def negated(self) -> "SignedBipartiteGraph":
        return self._replace_edges(self.buyers, self.sellers, -self.signs.astype(np.int64))

    # -- views ---------------------------------------------------------------
    @property
    def n_edges(self) -> int:
        return len(self.signs)

    @property
    def n_positive(self) -> int:
        return int(np.count_nonzero(self.signs > 0))

    @property
    def n_negative(self) -> int:
        return int(np.count_nonzero(self.signs < 0))

    @property
    def positive_fraction(self) -> float:
        return self.n_positive / self.n_edges if self.n_edges else float("nan")

    def edges(self) -> Iterator[tuple[int, int, int]]:
        for i, j, s in zip(self.buyers.tolist(), self.sellers.tolist(), self.signs.tolist()):
            yield i, j, s

    def edge_set(self) -> set:
        return set(self.edges())

    @cached_property
    def sign_lookup(self) -> dict:
        return {(i, j): s for i, j, s in self.edges()}

    def sign_of(self, buyer: int, seller: int) -> int:
        """Sign of the link, 0 when absent."""
        return self.sign_lookup.get((buyer, seller), 0)

    def has_edge(self, buyer: int, seller: int) -> bool:
        return (buyer, seller) in self.sign_lookup

    @cached_property
    def biadjacency(self) -> sp.csr_matrix:
        """``B`` as an int64 CSR matrix of shape (n_buyers, n_sellers)."""
        return sp.csr_matrix((self.signs.astype(np.int64), (self.buyers, self.sellers)),
                             shape=(self.n_buyers, self.n_sellers))

    @cached_property
    def positive_part(self) -> sp.csr_matrix:
        m = self.signs > 0
        return sp.csr_matrix((np.ones(m.sum(), np.int64), (self.buyers[m], self.sellers[m])),
                             shape=(self.n_buyers, self.n_sellers))

    @cached_property
    def negative_part(self) -> sp.csr_matrix:
        m = self.signs < 0
        return sp.csr_matrix((np.ones(m.sum(), np.int64), (self.buyers[m], self.sellers[m])),
                             shape=(self.n_buyers, self.n_sellers))

    def dense(self) -> np.ndarray:
        return self.biadjacency.toarray()

    @cached_property
    def buyer_adjacency(self) -> list:
        adj = [[] for _ in range(self.n_buyers)]
        for i, j, s in self.edges():
            adj[i].append((j, s))
        return [sorted(a) for a in adj]

    @cached_property
    def seller_adjacency(self) -> list:
        adj = [[] for _ in range(self.n_sellers)]
        for i, j, s in self.edges():
            adj[j].append((i, s))
        return [sorted(a) for a in adj]

    @cached_property
    def degree_table(self) -> dict:
        """Per-side arrays of (positive, negative) degrees."""
        pos = self.signs > 0
        neg = ~pos
        nb, ns = self.n_buyers, self.n_sellers
        return {
            BUYER: (np.bincount(self.buyers[pos], minlength=nb),
                    np.bincount(self.buyers[neg], minlength=nb)),
            SELLER: (np.bincount(self.sellers[pos], minlength=ns),
                     np.bincount(self.sellers[neg], minlength=ns)),
        }

    def side_size(self, side: str) -> int:
        if side == BUYER:
            return self.n_buyers
        if side == SELLER:
            return self.n_sellers
        raise DomainError(f"unknown side {side!r}; expected one of {SIDES}")

    def check_pair(self, buyer: int, seller: int) -> None:
        if not (0 <= buyer < self.n_buyers):
            raise DomainError(f"buyer index {buyer} out of range [0, {self.n_buyers})")
        if not (0 <= seller < self.n_sellers):
            raise DomainError(f"seller index {seller} out of range [0, {self.n_sellers})")

    def __repr__(self):
        return (f"SignedBipartiteGraph(n_buyers={self.n_buyers}, n_sellers={self.n_sellers}, "
                f"n_edges={self.n_edges}, positive={self.n_positive})")


def signed_degrees(graph: SignedBipartiteGraph, side: str, index: int) -> tuple[int, int]:
    n = graph.side_size(side)
    if not (0 <= index < n):
        raise DomainError(f"{side} index {index} out of range [0, {n})")
    pos, neg = graph.degree_table[side]
    return int(pos[index]), int(neg[index])


# -- edge-list files ------------------------------------------------------------

def _fields(line: str) -> list[str]:
    return line.split("\t") if "\t" in line else line.split()


def parse_edge_list(stream: TextIO | Iterable[str]) -> SignedBipartiteGraph:
    """Read ``buyer<TAB>seller<TAB>sign`` lines; ``#`` lines and blank lines are skipped.

    Ids are mapped to dense indices in order of first appearance.
    """
    if isinstance(stream, str):
        stream = stream.splitlines()
    buyer_index: dict[str, int] = {}
    seller_index: dict[str, int] = {}
    seen: dict[tuple[int, int], int] = {}
    rows, cols, signs = [], [], []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = [p.strip() for p in _fields(line)]
        if len(parts) != 3 or not parts[0] or not parts[1]:
            raise ParseError(f"expected 3 fields, got {len(parts)}: {line!r}", lineno)
        try:
            sign = int(parts[2])
        except ValueError:
            raise ParseError(f"sign is not an integer: {parts[2]!r}", lineno) from None
        if sign not in (1, -1):
            raise DomainError(f"line {lineno}: sign must be 1 or -1, got {sign}")
        i = buyer_index.setdefault(parts[0], len(buyer_index))
        j = seller_index.setdefault(parts[1], len(seller_index))
        if (i, j) in seen:
            raise DuplicateEdgeError(
                f"duplicate pair ({parts[0]}, {parts[1]}), first seen on line {seen[(i, j)]}", lineno)
        seen[(i, j)] = lineno
        rows.append(i)
        cols.append(j)
        signs.append(sign)
    return SignedBipartiteGraph(len(buyer_index), len(seller_index), rows, cols, signs,
                                tuple(buyer_index), tuple(seller_index))


def read_edge_list(path) -> SignedBipartiteGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh)


def write_edge_list(graph: SignedBipartiteGraph, stream: TextIO) -> None:
    for i, j, s in graph.edges():
        stream.write(f"{graph.buyer_ids[i]}\t{graph.seller_ids[j]}\t{s}\n")


# -- splitting --------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.85
    validation_fraction: float = 0.05
    test_fraction: float = 0.10
    seed: int = 0

    def __post_init__(self):
        fr = (self.train_fraction, self.validation_fraction, self.test_fraction)
        if not all(0.0 < f < 1.0 for f in fr):
            raise SplitError(f"split fractions must lie in (0, 1), got {fr}")
        if abs(sum(fr) - 1.0) > 1e-12:
            raise SplitError(f"split fractions must sum to 1, got {sum(fr)!r}")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "SplitSpec":
        try:
            parts = [float(x) for x in text.split(",")]
        except ValueError:
            raise SplitError(f"cannot parse split {text!r}") from None
        if len(parts) != 3:
            raise SplitError(f"split needs three fractions, got {text!r}")
        return cls(*parts, seed=seed)


@dataclass(frozen=True, eq=False)
class EdgeList:
    """Held-out edges, indices refer to the parent graph's nodes."""

    buyers: np.ndarray
    sellers: np.ndarray
    signs: np.ndarray

    def __len__(self):
        return len(self.signs)

    def __iter__(self):
        return zip(self.buyers.tolist(), self.sellers.tolist(), self.signs.tolist())

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.buyers.tolist(), self.sellers.tolist()))


class Split(NamedTuple):
    train: SignedBipartiteGraph
    validation: EdgeList
    test: EdgeList


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def partition_sizes(n_edges: int, spec: SplitSpec) -> tuple[int, int, int]:
    n_val = _round_half_up(n_edges * spec.validation_fraction)
    n_test = _round_half_up(n_edges * spec.test_fraction)
    return n_edges - n_val - n_test, n_val, n_test


def split_edges(graph: SignedBipartiteGraph, spec: SplitSpec) -> Split:
    """Uniform, unstratified random split; the train graph keeps every node."""
    if graph.n_edges < 10:
        raise SplitError(f"need at least 10 edges to split, got {graph.n_edges}")
    n_train, n_val, n_test = partition_sizes(graph.n_edges, spec)
    if min(n_train, n_val, n_test) < 1:
        raise SplitError(f"split sizes {(n_train, n_val, n_test)} leave a partition empty")
    order = np.random.default_rng(spec.seed).permutation(graph.n_edges)
    label = np.zeros(graph.n_edges, dtype=np.int8)
    label[order[:n_test]] = 2
    label[order[n_test:n_test + n_val]] = 1

    def held(code):
        m = label == code
        return EdgeList(graph.buyers[m], graph.sellers[m], graph.signs[m])

    return Split(graph.edge_subgraph(label == 0), held(1), held(2))


def write_split_manifest(graph: SignedBipartiteGraph, split: Split, stream: TextIO) -> None:
    stream.write("buyer_id\tseller_id\tpartition\n")
    parts = [("train", zip(split.train.buyers.tolist(), split.train.sellers.tolist())),
             ("val", split.validation.pairs()), ("test", split.test.pairs())]
    for name, pairs in parts:
        for i, j in pairs:
            stream.write(f"{graph.buyer_ids[i]}\t{graph.seller_ids[j]}\t{name}\n")


def pair_indices(graph: SignedBipartiteGraph, id_pairs: Sequence[tuple[str, str]]):
    """Map external (buyer_id, seller_id) pairs to indices; unknown ids map to -1."""
    bmap = {b: k for k, b in enumerate(graph.buyer_ids)}
    smap = {s: k for k, s in enumerate(graph.seller_ids)}
    return [(bmap.get(b, -1), smap.get(s, -1)) for b, s in id_pairs]
