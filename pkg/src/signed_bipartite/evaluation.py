"""Metrics, the six-method experiment runner, validation grid search and a planted-faction generator."""
from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Callable

import numpy as np
from scipy.stats import rankdata

from .classifier import CATERPILLAR, DEGREE, EXTRACTORS, ClassifierConfig, fit_sign_classifier
from .errors import ConfigError, DegenerateMetricError, DomainError, TrainingError
from .factorization import MfConfig, train_mf, train_mf_wbt
from .graph import BUYER, SELLER, EdgeList, SignedBipartiteGraph, SplitSpec, split_edges
from .motifs import balance_suggestion_matrix
from .randomwalk import RwConfig, lazy_system, propagate, sbrw_system

METHODS = ("SCd", "SCsc", "MF", "MFwBT", "LazyRW", "SBRW")


# -- metrics ------------------------------------------------------------------------------

def _check_labels(y):
    n_pos = int(np.count_nonzero(y > 0))
    if n_pos == 0 or n_pos == len(y):
        raise DegenerateMetricError("metric needs at least one positive and one negative label")
    return n_pos, len(y) - n_pos


def auc(scores, true_signs) -> float:
    """Mann-Whitney AUC; tied scores count one half."""
    scores = np.asarray(scores, dtype=np.float64)
    y = np.asarray(true_signs)
    n_pos, n_neg = _check_labels(y)
    ranks = rankdata(scores)
    u = ranks[y > 0].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def f1(predicted_signs, true_signs) -> float:
    """Binary F1 of the positive class; 0 when precision + recall is 0."""
    pred = np.asarray(predicted_signs)
    y = np.asarray(true_signs)
    _check_labels(y)
    tp = int(np.count_nonzero((pred > 0) & (y > 0)))
    fp = int(np.count_nonzero((pred > 0) & (y < 0)))
    fn = int(np.count_nonzero((pred < 0) & (y > 0)))
    if tp == 0:
        return 0.0
    precision, recall = tp / (tp + fp), tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


# -- records -------------------------------------------------------------------------------

@dataclass(frozen=True)
class PredictionRecord:
    buyer_id: str
    seller_id: str
    true_sign: int
    score: float
    predicted_sign: int
    method: str


@dataclass(frozen=True)
class MetricsReport:
    method: str
    dataset: str
    auc: float | None             # None for a grid point whose training diverged
    f1: float | None
    seed: int
    hyperparameters: dict
    n_evaluated: int = 0
    n_fallback: int = 0
    partition: str = "test"

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass(frozen=True)
class ExperimentResult:
    report: MetricsReport
    predictions: list = field(repr=False)


# -- methods -------------------------------------------------------------------------------

CONFIG_TYPES = {"SCd": ClassifierConfig, "SCsc": ClassifierConfig, "MF": MfConfig,
                "MFwBT": MfConfig, "LazyRW": RwConfig, "SBRW": RwConfig}

DEFAULT_OVERRIDES = {
    # mid-sized implicit sets; (1000, 10000) suits graphs far larger than desk scale
    "MFwBT": {"alpha": 0.5, "beta": 0.5, "k_pos": 1000, "k_neg": 1000},
    "LazyRW": {"omega": 1.0},
}


def check_method(method: str) -> None:
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")


def make_config(method: str, overrides: dict | None = None, seed: int | None = None):
    """Method config from defaults plus ``overrides``; ``alpha_beta`` sets alpha = beta."""
    check_method(method)
    cls = CONFIG_TYPES[method]
    values = dict(DEFAULT_OVERRIDES.get(method, {}))
    for key, val in (overrides or {}).items():
        if key == "alpha_beta" and cls is MfConfig:
            values["alpha"] = values["beta"] = val
        else:
            values[key] = val
    if seed is not None and "seed" in {f.name for f in fields(cls)}:
        values.setdefault("seed", seed)
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown hyperparameter(s) for {method}: {', '.join(unknown)}")
    if method == "LazyRW" and (values["omega"] != 1 or values.get("delta_p", 0)
                               or values.get("delta_n", 0)):
        raise ConfigError("LazyRW has no projections and a fixed omega of 1")
    try:
        return cls(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


Scorer = Callable[[np.ndarray, np.ndarray], np.ndarray]


def fit_method(method: str, train: SignedBipartiteGraph, config) -> Scorer:
    """Fit on ``train`` and return a scorer; score >= 0 predicts a positive link."""
    check_method(method)
    if method in ("SCd", "SCsc"):
        schema = DEGREE if method == "SCd" else CATERPILLAR
        model = fit_sign_classifier(train, schema, **config.as_dict())
        extract = EXTRACTORS[schema]
        return lambda b, s: model.decision_function(extract(train, b, s))
    if method == "MF":
        emb = train_mf(train, config)
        return emb.scores
    if method == "MFwBT":
        emb = train_mf_wbt(train, balance_suggestion_matrix(train), config)
        return emb.scores
    if method == "LazyRW":
        system = lazy_system(train, config.restart)
    else:
        system = sbrw_system(train, config.omega, config.restart, config.delta_p, config.delta_n)
    y = propagate(system, config.tolerance, config.max_iterations)
    return y.buyer_seller


def score_pairs(method, train, config, pairs: EdgeList):
    scorer = fit_method(method, train, config)
    bpos, bneg = train.degree_table[BUYER]
    spos, sneg = train.degree_table[SELLER]
    b, s = pairs.buyers, pairs.sellers
    cold = ((bpos[b] + bneg[b]) == 0) | ((spos[s] + sneg[s]) == 0)
    scores = np.zeros(len(b))
    warm = ~cold
    if warm.any():
        scores[warm] = scorer(b[warm], s[warm])
    majority = 1 if train.n_positive >= train.n_negative else -1
    predicted = np.where(scores >= 0, 1, -1)
    predicted[cold] = majority
    return scores, predicted, int(cold.sum())


def evaluate_pairs(method, train, config, pairs: EdgeList, dataset="", seed=0,
                   partition="test") -> ExperimentResult:
    scores, predicted, n_cold = score_pairs(method, train, config, pairs)
    truth = pairs.signs.astype(int)
    report = MetricsReport(method, dataset, auc(scores, truth), f1(predicted, truth), seed,
                           config.as_dict(), len(truth), n_cold, partition)
    records = [PredictionRecord(train.buyer_ids[i], train.seller_ids[j], int(t), float(sc),
                                int(p), method)
               for i, j, t, sc, p in zip(pairs.buyers.tolist(), pairs.sellers.tolist(),
                                         truth.tolist(), scores.tolist(), predicted.tolist())]
    return ExperimentResult(report, records)


def run_experiment(graph: SignedBipartiteGraph, method: str, config=None,
                   split_spec: SplitSpec = SplitSpec(), dataset: str = "") -> ExperimentResult:
    """Split, fit on the training links only, and score every test link."""
    check_method(method)
    if config is None:
        config = make_config(method, seed=split_spec.seed)
    split = split_edges(graph, split_spec)
    return evaluate_pairs(method, split.train, config, split.test, dataset, split_spec.seed)


def run_repeated(graph, method, config, split_spec: SplitSpec, repeats: int, dataset=""):
    """Independent splits with seeds ``seed, seed+1, ...``; returns reports and mean (AUC, F1)."""
    reports = [run_experiment(graph, method, config, replace(split_spec, seed=split_spec.seed + r),
                              dataset).report for r in range(repeats)]
    return reports, (float(np.mean([r.auc for r in reports])),
                     float(np.mean([r.f1 for r in reports])))


# -- grid search ---------------------------------------------------------------------------

DEFAULT_GRIDS = {
    "SCd": {"l2_penalty": [1e-4, 1e-3, 1e-2]},
    "SCsc": {"l2_penalty": [1e-4, 1e-3, 1e-2]},
    "MF": {"l2_penalty": [1e-4, 1e-3, 1e-2]},
    "MFwBT": {"k_pos": [0, 1000, 10000], "k_neg": [0, 1000, 10000],
              "alpha_beta": [0.0, 0.25, 0.5, 1.0]},
    "LazyRW": {"restart": [0.5, 0.65, 0.85, 0.95]},
    "SBRW": {"omega": [1, 2, 3, 5], "delta_p": [0, 25, 50, 75, 100],
             "delta_n": [0, -25, -50, -75, -100]},
}


def grid_points(grids: dict) -> list[dict]:
    if not grids or any(len(v) == 0 for v in grids.values()):
        raise ConfigError("grid search needs a non-empty grid")
    keys = list(grids)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grids[k] for k in keys))]


def grid_search(graph: SignedBipartiteGraph, method: str, grids: dict | None = None,
                split_spec: SplitSpec = SplitSpec(), base: dict | None = None, dataset: str = ""):
    """Pick the grid point with the best validation AUC; earlier points win ties.

    A point whose training diverges is reported with null metrics and never
    selected.
    """
    check_method(method)
    grids = DEFAULT_GRIDS[method] if grids is None else grids
    split = split_edges(graph, split_spec)
    best, best_auc, reports = None, -np.inf, []
    for point in grid_points(grids):
        config = make_config(method, {**(base or {}), **point}, seed=split_spec.seed)
        try:
            rep = evaluate_pairs(method, split.train, config, split.validation, dataset,
                                 split_spec.seed, "validation").report
        except TrainingError:
            reports.append(MetricsReport(method, dataset, None, None, split_spec.seed,
                                         config.as_dict(), 0, 0, "validation"))
            continue
        reports.append(rep)
        if rep.auc > best_auc:
            best, best_auc = config, rep.auc
    if best is None:
        raise TrainingError(f"training diverged at every grid point for {method}")
    return best, reports


# -- synthetic ground truth ------------------------------------------------------------------

def generate_planted_graph(n_buyers: int, n_sellers: int, density: float, noise_rate: float,
                           seed: int = 0, return_factions: bool = False):
    """Two hidden factions; same-faction links are positive, cross-faction negative.

    Each pair is linked with probability ``density`` and each sign is flipped
    with probability ``noise_rate``.
    """
    if n_buyers < 0 or n_sellers < 0:
        raise DomainError("node counts must be non-negative")
    if not 0 < density <= 1:
        raise DomainError(f"density must lie in (0, 1], got {density}")
    # 0.5 is allowed: every sign becomes a fair coin, the null-model control
    if not 0 <= noise_rate <= 0.5:
        raise DomainError(f"noise_rate must lie in [0, 0.5], got {noise_rate}")
    rng = np.random.default_rng(seed)
    fb = rng.integers(0, 2, n_buyers)
    fs = rng.integers(0, 2, n_sellers)
    linked = rng.random((n_buyers, n_sellers)) < density
    sign = np.where(fb[:, None] == fs[None, :], 1, -1)
    flip = rng.random((n_buyers, n_sellers)) < noise_rate
    sign = np.where(flip, -sign, sign)
    rows, cols = np.nonzero(linked)
    g = SignedBipartiteGraph(n_buyers, n_sellers, rows, cols, sign[rows, cols])
    return (g, fb, fs) if return_factions else g


def write_predictions(records, stream) -> None:
    stream.write("buyer_id\tseller_id\ttrue_sign\tscore\tpredicted_sign\tmethod\n")
    for r in records:
        stream.write(f"{r.buyer_id}\t{r.seller_id}\t{r.true_sign}\t{r.score!r}\t"
                     f"{r.predicted_sign}\t{r.method}\n")
