"""Low-rank sign prediction with a squared hinge loss (MF) and balance-suggested implicit links (MFwBT)."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numba
import numpy as np

from .errors import ConfigError, DomainError, TrainingError
from .graph import SignedBipartiteGraph
from .motifs import BalanceSuggestionMatrix

SIGN_TARGETS = "sign"
RAW_TARGETS = "raw"


@dataclass(frozen=True)
class MfConfig:
    dim: int = 10
    l2_penalty: float = 1e-3
    learning_rate: float = 0.05
    epochs: int = 100
    seed: int = 0
    alpha: float = 0.0
    beta: float = 0.0
    k_pos: int = 0
    k_neg: int = 0
    implicit_target_mode: str = SIGN_TARGETS

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError("dim must be >= 1")
        if min(self.l2_penalty, self.alpha, self.beta) < 0:
            raise ConfigError("l2_penalty, alpha and beta must be non-negative")
        if self.k_pos < 0 or self.k_neg < 0:
            raise ConfigError("k_pos and k_neg must be non-negative")
        if self.learning_rate <= 0 or self.epochs < 0:
            raise ConfigError("learning_rate must be positive and epochs non-negative")
        if self.implicit_target_mode not in (SIGN_TARGETS, RAW_TARGETS):
            raise ConfigError(f"implicit_target_mode must be 'sign' or 'raw'")

    def as_dict(self):
        return asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class EmbeddingPair:
    """Latent factors, columns of ``U`` (d x n_buyers) and ``V`` (d x n_sellers)."""

    U: np.ndarray
    V: np.ndarray

    @property
    def dim(self) -> int:
        return self.U.shape[0]

    def scores(self, buyers, sellers) -> np.ndarray:
        buyers = np.asarray(buyers, dtype=np.int64)
        sellers = np.asarray(sellers, dtype=np.int64)
        return np.einsum("ij,ij->j", self.U[:, buyers], self.V[:, sellers])


def predict_mf(embeddings: EmbeddingPair, buyer: int, seller: int) -> tuple[float, int]:
    if not (0 <= buyer < embeddings.U.shape[1]) or not (0 <= seller < embeddings.V.shape[1]):
        raise DomainError(f"pair ({buyer}, {seller}) out of range")
    score = float(embeddings.U[:, buyer] @ embeddings.V[:, seller])
    return score, 1 if score >= 0 else -1


class ImplicitLinks(NamedTuple):
    buyers: np.ndarray
    sellers: np.ndarray
    gains: np.ndarray

    def pairs(self) -> set:
        return set(zip(self.buyers.tolist(), self.sellers.tolist()))


def select_implicit_links(suggestions: BalanceSuggestionMatrix, k_pos: int, k_neg: int):
    """The ``k_pos`` largest positive and ``k_neg`` smallest negative suggestions.

    Ties are broken by (buyer, seller) order; requests beyond what is available
    are truncated.
    """
    b, s, v = suggestions.buyers, suggestions.sellers, suggestions.values

    def pick(mask, key, k):
        idx = np.flatnonzero(mask)
        order = np.lexsort((s[idx], b[idx], key[idx]))[:k]
        idx = idx[order]
        return ImplicitLinks(b[idx], s[idx], v[idx])

    return pick(v > 0, -v, k_pos), pick(v < 0, v, k_neg)


# -- objective pieces ----------------------------------------------------------------

def squared_hinge(margin):
    return np.maximum(0.0, 1.0 - margin) ** 2


def example_loss(u, v, target, weight, reg_u, reg_v) -> float:
    """Loss of one training example: weighted squared hinge plus its share of the L2 term."""
    return weight * float(squared_hinge(target * (u @ v))) + reg_u * (u @ u) + reg_v * (v @ v)


def example_gradient(u, v, target, weight, reg_u, reg_v):
    slack = 1.0 - target * (u @ v)
    g = -2.0 * weight * target * slack if slack > 0 else 0.0
    return g * v + 2.0 * reg_u * u, g * u + 2.0 * reg_v * v


class _Examples(NamedTuple):
    buyers: np.ndarray
    sellers: np.ndarray
    targets: np.ndarray
    weights: np.ndarray


def _explicit_examples(graph: SignedBipartiteGraph) -> _Examples:
    n = graph.n_edges
    return _Examples(graph.buyers.copy(), graph.sellers.copy(),
                     graph.signs.astype(np.float64), np.ones(n))


def _concat(*parts: _Examples) -> _Examples:
    return _Examples(*(np.concatenate(cols) for cols in zip(*parts)))


def objective(emb: EmbeddingPair, examples: _Examples, l2_penalty: float) -> float:
    scores = emb.scores(examples.buyers, examples.sellers)
    hinge = examples.weights * squared_hinge(examples.targets * scores)
    return float(hinge.sum() + l2_penalty * ((emb.U ** 2).sum() + (emb.V ** 2).sum()))


def _init(n_buyers, n_sellers, dim, rng):
    bound = 0.5 / np.sqrt(dim)
    U = rng.uniform(-bound, bound, size=(n_buyers, dim))
    V = rng.uniform(-bound, bound, size=(n_sellers, dim))
    return U, V


@numba.njit(cache=True)
def _sgd_epoch(U, V, bi, sj, tt, ww, reg_u, reg_v, lr, order):
    d = U.shape[1]
    for e in order:
        i, j, t = bi[e], sj[e], tt[e]
        dot = 0.0
        for k in range(d):
            dot += U[i, k] * V[j, k]
        slack = 1.0 - t * dot
        g = -2.0 * ww[e] * t * slack if slack > 0.0 else 0.0
        ru, rv = 2.0 * reg_u[i], 2.0 * reg_v[j]
        for k in range(d):
            u, v = U[i, k], V[j, k]
            U[i, k] = u - lr * (g * v + ru * u)
            V[j, k] = v - lr * (g * u + rv * v)


def _sgd(n_buyers, n_sellers, ex: _Examples, config: MfConfig, history=None):
    rng = np.random.default_rng(config.seed)
    U, V = _init(n_buyers, n_sellers, config.dim, rng)
    # the L2 term of a node is split evenly across the examples touching it,
    # so the per-example losses sum to the full objective
    cb = np.bincount(ex.buyers, minlength=n_buyers).astype(np.float64)
    cs = np.bincount(ex.sellers, minlength=n_sellers).astype(np.float64)
    lam = config.l2_penalty
    reg_u = np.divide(lam, cb, out=np.zeros_like(cb), where=cb > 0)
    reg_v = np.divide(lam, cs, out=np.zeros_like(cs), where=cs > 0)
    bi, sj, tt, ww = ex
    for _ in range(config.epochs):
        _sgd_epoch(U, V, bi, sj, tt, ww, reg_u, reg_v, config.learning_rate,
                   rng.permutation(len(bi)))
        if history is not None:
            history.append(objective(EmbeddingPair(U.T, V.T), ex, lam))
    if not (np.isfinite(U).all() and np.isfinite(V).all()):
        raise TrainingError("SGD diverged; lower the learning rate")
    return EmbeddingPair(np.ascontiguousarray(U.T), np.ascontiguousarray(V.T))


def train_mf(train_graph: SignedBipartiteGraph, config: MfConfig = MfConfig(),
             history: list | None = None) -> EmbeddingPair:
    """SGD on the squared hinge loss over the explicit links; implicit settings are ignored."""
    if train_graph.n_edges == 0:
        raise TrainingError("cannot factorize an empty edge set")
    return _sgd(train_graph.n_buyers, train_graph.n_sellers, _explicit_examples(train_graph),
                config, history)


def implicit_examples(suggestions: BalanceSuggestionMatrix, config: MfConfig) -> _Examples:
    pos, neg = select_implicit_links(suggestions, config.k_pos, config.k_neg)
    parts = []
    for links, weight in ((pos, config.alpha), (neg, config.beta)):
        if weight == 0 or len(links.gains) == 0:
            continue
        gains = links.gains.astype(np.float64)
        targets = np.sign(gains) if config.implicit_target_mode == SIGN_TARGETS else gains
        parts.append(_Examples(links.buyers, links.sellers, targets, np.full(len(gains), weight)))
    return _concat(*parts) if parts else None


def train_mf_wbt(train_graph: SignedBipartiteGraph, suggestions: BalanceSuggestionMatrix,
                 config: MfConfig = MfConfig(), history: list | None = None) -> EmbeddingPair:
    """MF plus weighted implicit links, all examples shuffled together each epoch.

    Zero-weight implicit sets are dropped from the stream, so alpha = beta = 0
    reproduces ``train_mf`` exactly.
    """
    if train_graph.n_edges == 0:
        raise TrainingError("cannot factorize an empty edge set")
    ex = _explicit_examples(train_graph)
    extra = implicit_examples(suggestions, config)
    if extra is not None:
        ex = _concat(ex, extra)
    return _sgd(train_graph.n_buyers, train_graph.n_sellers, ex, config, history)


def initial_embeddings(n_buyers: int, n_sellers: int, config: MfConfig) -> EmbeddingPair:
    U, V = _init(n_buyers, n_sellers, config.dim, np.random.default_rng(config.seed))
    return EmbeddingPair(U.T, V.T)


# -- files ------------------------------------------------------------------------------

def save_embeddings(emb: EmbeddingPair, path, config: MfConfig) -> None:
    """JSON header line, then U and V as little-endian float64, row-major."""
    header = {"d": emb.dim, "n_B": emb.U.shape[1], "n_S": emb.V.shape[1],
              "seed": config.seed, "config_digest": config.digest()}
    with open(path, "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode())
        fh.write(np.ascontiguousarray(emb.U, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(emb.V, dtype="<f8").tobytes())


def load_embeddings(path) -> tuple[EmbeddingPair, dict]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        d, nb, ns = header["d"], header["n_B"], header["n_S"]
        U = np.frombuffer(fh.read(8 * d * nb), dtype="<f8").reshape(d, nb)
        V = np.frombuffer(fh.read(8 * d * ns), dtype="<f8").reshape(d, ns)
    return EmbeddingPair(U.copy(), V.copy()), header


def export_embeddings_text(emb: EmbeddingPair, graph: SignedBipartiteGraph, stream) -> None:
    for ids, M in ((graph.buyer_ids, emb.U), (graph.seller_ids, emb.V)):
        for name, col in zip(ids, M.T):
            stream.write(name + "\t" + "\t".join(repr(float(x)) for x in col) + "\n")
