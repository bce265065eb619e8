"""Signed random walk with restart over the bipartite graph plus one-mode projections (SBRW, LazyRW)."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DomainError, NonConvergenceError
from .graph import BUYER, SELLER, SignedBipartiteGraph


@dataclass(frozen=True, eq=False)
class ProjectionGraph:
    side: str
    weights: sp.csr_matrix          # symmetric signed integer weights, zero diagonal
    delta_p: float
    delta_n: float

    @property
    def n_edges(self) -> int:
        return self.weights.nnz // 2


def build_projection(graph: SignedBipartiteGraph, side: str, delta_p: float = 0,
                     delta_n: float = 0) -> ProjectionGraph:
    """Agreements minus disagreements over common neighbours, for same-side node pairs.

    Weights strictly between ``delta_n`` and ``delta_p`` are dropped.
    """
    if delta_p < 0 or delta_n > 0:
        raise DomainError(f"need delta_p >= 0 >= delta_n, got ({delta_p}, {delta_n})")
    B = graph.biadjacency
    if side == BUYER:
        W = B @ B.T
    elif side == SELLER:
        W = B.T @ B
    else:
        raise DomainError(f"unknown side {side!r}")
    W = W.tolil()
    W.setdiag(0)
    W = W.tocsr()
    keep = (W.data >= delta_p) | (W.data <= delta_n)
    W.data[~keep] = 0
    W.eliminate_zeros()
    return ProjectionGraph(side, W, delta_p, delta_n)


def row_normalize(m: sp.spmatrix) -> sp.csr_matrix:
    """Divide each row by its absolute sum; empty rows stay empty."""
    m = sp.csr_matrix(m, dtype=np.float64)
    sums = np.asarray(abs(m).sum(axis=1)).ravel()
    inv = np.divide(1.0, sums, out=np.zeros_like(sums), where=sums > 0)
    return (sp.diags(inv) @ m).tocsr()


@dataclass(frozen=True, eq=False)
class PropagationSystem:
    transition: sp.csr_matrix       # row-normalised signed matrix over buyers then sellers
    n_buyers: int
    n_sellers: int
    omega: float
    restart: float                  # c, the probability of continuing the walk

    @property
    def size(self) -> int:
        return self.n_buyers + self.n_sellers


def assemble_system(graph: SignedBipartiteGraph, P_B, P_S, omega: float = 2.0,
                    c: float = 0.85) -> PropagationSystem:
    """Stack normalised projections and bipartite links into one signed transition matrix.

    ``P_B`` and ``P_S`` are ``ProjectionGraph`` objects or plain sparse matrices
    (the identity gives the lazy walk). Nodes without bipartite links get an
    all-zero row.
    """
    if not omega > 0:
        raise DomainError(f"omega must be positive, got {omega}")
    if not 0 < c < 1:
        raise DomainError(f"restart retention c must lie in (0, 1), got {c}")
    PB = P_B.weights if isinstance(P_B, ProjectionGraph) else sp.csr_matrix(P_B)
    PS = P_S.weights if isinstance(P_S, ProjectionGraph) else sp.csr_matrix(P_S)
    nb, ns = graph.n_buyers, graph.n_sellers
    if PB.shape != (nb, nb) or PS.shape != (ns, ns):
        raise DomainError("projection shapes do not match the graph")
    B = graph.biadjacency
    # both off-diagonal blocks are row-normalised so omega weighs real links
    # against projection links on every row
    A = sp.bmat([[row_normalize(PB), omega * row_normalize(B)],
                 [omega * row_normalize(B.T), row_normalize(PS)]], format="csr")
    linked = np.concatenate([np.diff(B.indptr), np.diff(B.tocsc().indptr)]) > 0
    A = sp.diags(linked.astype(np.float64)) @ A
    return PropagationSystem(row_normalize(A), nb, ns, float(omega), float(c))


def lazy_system(graph: SignedBipartiteGraph, c: float = 0.85) -> PropagationSystem:
    return assemble_system(graph, sp.identity(graph.n_buyers), sp.identity(graph.n_sellers),
                           1.0, c)


def sbrw_system(graph: SignedBipartiteGraph, omega: float = 2.0, c: float = 0.85,
                delta_p: float = 0, delta_n: float = 0) -> PropagationSystem:
    return assemble_system(graph, build_projection(graph, BUYER, delta_p, delta_n),
                           build_projection(graph, SELLER, delta_p, delta_n), omega, c)


@dataclass(frozen=True, eq=False)
class RwScores:
    """Columns ``columns`` of ``Y = (1 - c)(I - c Â)^-1``."""

    values: np.ndarray              # shape (n, len(columns))
    columns: np.ndarray
    n_buyers: int
    n_sellers: int
    iterations: int = 0
    update_norms: tuple = field(default=(), repr=False)

    def column_of(self, node: int) -> int:
        pos = np.searchsorted(self.columns, node)
        if pos >= len(self.columns) or self.columns[pos] != node:
            raise DomainError(f"node {node} was not propagated")
        return int(pos)

    def buyer_seller(self, buyers, sellers) -> np.ndarray:
        buyers = np.asarray(buyers, dtype=np.int64)
        sellers = np.asarray(sellers, dtype=np.int64)
        cols = np.searchsorted(self.columns, self.n_buyers + sellers)
        return self.values[buyers, cols]


def propagate(system: PropagationSystem, tolerance: float = 1e-8, max_iterations: int = 1000,
              columns=None, method: str = "iterative") -> RwScores:
    """Solve ``Y = (1 - c) I + c Â Y`` for the requested columns (seller columns by default).

    ``method="iterative"`` runs the fixed-point map until the max-norm update
    drops below ``tolerance``; ``"direct"`` uses a sparse LU factorisation.
    """
    n, c = system.size, system.restart
    cols = np.arange(system.n_buyers, n) if columns is None else np.unique(np.asarray(columns))
    if len(cols) and (cols.min() < 0 or cols.max() >= n):
        raise DomainError("column index out of range")
    E = np.zeros((n, len(cols)))
    E[cols, np.arange(len(cols))] = 1.0 - c
    A = system.transition
    if method == "direct":
        if n == 0:
            return RwScores(E, cols, system.n_buyers, system.n_sellers)
        lu = spla.splu(sp.csc_matrix(sp.identity(n) - c * A))
        return RwScores(lu.solve(E), cols, system.n_buyers, system.n_sellers)
    if method != "iterative":
        raise DomainError(f"unknown method {method!r}")
    Y = E.copy()
    norms = []
    for it in range(1, max_iterations + 1):
        Y_next = E + c * (A @ Y)
        delta = float(np.abs(Y_next - Y).max()) if Y.size else 0.0
        norms.append(delta)
        Y = Y_next
        if delta < tolerance:
            return RwScores(Y, cols, system.n_buyers, system.n_sellers, it, tuple(norms))
    raise NonConvergenceError(
        f"no convergence to {tolerance} in {max_iterations} iterations (last update {norms[-1]:.3g})")


def predict_rw(scores: RwScores, buyer: int, seller: int) -> tuple[float, int]:
    if not (0 <= buyer < scores.n_buyers) or not (0 <= seller < scores.n_sellers):
        raise DomainError(f"pair ({buyer}, {seller}) out of range")
    value = float(scores.values[buyer, scores.column_of(scores.n_buyers + seller)])
    return value, 1 if value >= 0 else -1


@dataclass(frozen=True)
class RwConfig:
    omega: float = 2.0
    restart: float = 0.85
    delta_p: float = 0
    delta_n: float = 0
    tolerance: float = 1e-8
    max_iterations: int = 1000

    def as_dict(self):
        return asdict(self)
