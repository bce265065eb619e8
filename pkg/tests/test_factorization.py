import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from signed_bipartite.errors import ConfigError, DomainError, TrainingError
from signed_bipartite.factorization import (EmbeddingPair, MfConfig, _sgd_epoch, example_gradient,
                                            example_loss, export_embeddings_text,
                                            implicit_examples, load_embeddings, objective,
                                            predict_mf, save_embeddings, select_implicit_links,
                                            squared_hinge, train_mf, train_mf_wbt)
from signed_bipartite.graph import SignedBipartiteGraph
from signed_bipartite.motifs import BalanceSuggestionMatrix, balance_suggestion_matrix

from conftest import signed_matrices
from oracles import balance_minus_unbalance, central_difference


def _suggestions(entries, nb=3, ns=3):
    keys = sorted(entries)
    return BalanceSuggestionMatrix(nb, ns, np.array([k[0] for k in keys]),
                                   np.array([k[1] for k in keys]),
                                   np.array([entries[k] for k in keys]))


def test_select_extremes():
    pos, neg = select_implicit_links(_suggestions({(0, 0): 3, (0, 1): -2, (1, 0): 1}), 1, 1)
    assert pos.pairs() == {(0, 0)} and neg.pairs() == {(0, 1)}


def test_select_none():
    pos, neg = select_implicit_links(_suggestions({(0, 0): 3, (0, 1): -2}), 0, 0)
    assert len(pos.gains) == len(neg.gains) == 0


def test_select_tie_break_and_truncation():
    pos, _ = select_implicit_links(_suggestions({(1, 1): 2, (0, 0): 2}), 1, 0)
    assert pos.pairs() == {(0, 0)}
    pos, neg = select_implicit_links(_suggestions({(1, 1): 2, (0, 0): 2, (2, 0): 0}), 10, 10)
    assert len(pos.gains) == 2 and len(neg.gains) == 0


def test_hinge_value():
    assert squared_hinge(0.5) == 0.25
    assert squared_hinge(1.5) == 0.0


@pytest.mark.parametrize("sign", [1, -1])
def test_single_edge_margin(sign):
    g = SignedBipartiteGraph.from_edges([(0, 0, sign)])
    emb = train_mf(g, MfConfig(dim=1, l2_penalty=0.0, learning_rate=0.1, epochs=300))
    score, pred = predict_mf(emb, 0, 0)
    assert sign * score >= 1 - 1e-6 and pred == sign


def test_predict_mf():
    emb = EmbeddingPair(np.array([[0.5, 1.0]]), np.array([[0.5, 0.0]]))
    assert predict_mf(emb, 0, 0) == (0.25, 1)
    assert predict_mf(emb, 1, 1) == (0.0, 1)
    neg = EmbeddingPair(emb.U, -emb.V)
    assert predict_mf(neg, 0, 0)[1] == -1
    with pytest.raises(DomainError):
        predict_mf(emb, 2, 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([1.0, -1.0]), st.floats(0.5, 3.0),
       st.floats(0, 0.1))
def test_update_matches_finite_difference(seed, target, weight, reg):
    rng = np.random.default_rng(seed)
    d = 4
    u, v = rng.normal(size=d), rng.normal(size=d)
    if abs(1 - target * (u @ v)) <= 1e-3:
        return
    theta = np.concatenate([u, v])

    def loss(t):
        return example_loss(t[:d], t[d:], target, weight, reg, reg)

    numeric = central_difference(loss, theta)
    gu, gv = example_gradient(u, v, target, weight, reg, reg)
    analytic = np.concatenate([gu, gv])
    scale = max(np.linalg.norm(numeric), 1e-12)
    assert np.linalg.norm(analytic - numeric) / scale < 1e-5 or np.linalg.norm(numeric) < 1e-8

    # the compiled update applies exactly -lr times that gradient
    lr = 1e-3
    U, V = u[None, :].copy(), v[None, :].copy()
    _sgd_epoch(U, V, np.array([0]), np.array([0]), np.array([target]), np.array([weight]),
               np.array([reg]), np.array([reg]), lr, np.array([0]))
    assert np.allclose(U[0], u - lr * gu, rtol=1e-12, atol=1e-15)
    assert np.allclose(V[0], v - lr * gv, rtol=1e-12, atol=1e-15)


def _random_graph(seed, n=20, density=0.3):
    rng = np.random.default_rng(seed)
    return SignedBipartiteGraph.from_matrix(
        (rng.random((n, n)) < density) * np.where(rng.random((n, n)) < 0.6, 1, -1))


def test_reduction_bit_identical():
    g = _random_graph(0)
    s_hat = balance_suggestion_matrix(g)
    cfg = MfConfig(seed=5, k_pos=50, k_neg=50, alpha=0.0, beta=0.0)
    a, b = train_mf(g, cfg), train_mf_wbt(g, s_hat, cfg)
    assert np.array_equal(a.U, b.U) and np.array_equal(a.V, b.V)
    c = train_mf_wbt(g, s_hat, MfConfig(seed=5, k_pos=50, k_neg=50, alpha=0.5, beta=0.5))
    assert not np.array_equal(a.U, c.U)


def test_deterministic_given_seed():
    g = _random_graph(1)
    a, b = train_mf(g, MfConfig(seed=3)), train_mf(g, MfConfig(seed=3))
    assert np.array_equal(a.U, b.U)
    assert not np.array_equal(a.U, train_mf(g, MfConfig(seed=4)).U)


@pytest.mark.parametrize("seed", range(4))
def test_margin_property_on_consistent_toys(seed):
    # a rank-one sign pattern is conflict-free
    rng = np.random.default_rng(seed)
    x, y = rng.choice([-1, 1], 5), rng.choice([-1, 1], 5)
    mask = rng.random((5, 5)) < 0.6
    cells = np.argwhere(mask)[:20]
    g = SignedBipartiteGraph.from_edges([(i, j, int(x[i] * y[j])) for i, j in cells])
    emb = train_mf(g, MfConfig(dim=3, l2_penalty=0.0, learning_rate=0.05, epochs=2000, seed=seed))
    margins = g.signs * emb.scores(g.buyers, g.sellers)
    assert margins.min() >= 1 - 1e-3


def test_history_tracks_objective():
    g = _random_graph(2)
    hist = []
    cfg = MfConfig(epochs=30, seed=1)
    emb = train_mf(g, cfg, history=hist)
    assert len(hist) == 30 and hist[-1] < hist[0]
    from signed_bipartite.factorization import _explicit_examples
    assert hist[-1] == pytest.approx(objective(emb, _explicit_examples(g), cfg.l2_penalty))


@settings(max_examples=40, deadline=None)
@given(signed_matrices(max_buyers=7, max_sellers=7), st.integers(0, 20), st.integers(0, 20))
def test_implicit_set_soundness(M, k_pos, k_neg):
    g = SignedBipartiteGraph.from_matrix(M)
    pos, neg = select_implicit_links(balance_suggestion_matrix(g), k_pos, k_neg)
    for links, sign in ((pos, 1), (neg, -1)):
        for i, j, gain in zip(links.buyers, links.sellers, links.gains):
            assert M[i, j] == 0
            assert np.sign(balance_minus_unbalance(M, i, j)) == sign == np.sign(gain)


def test_implicit_targets_modes():
    s_hat = _suggestions({(0, 0): 3, (0, 1): -2, (1, 0): 1})
    ex = implicit_examples(s_hat, MfConfig(k_pos=2, k_neg=1, alpha=0.5, beta=2.0))
    assert ex.targets.tolist() == [1, 1, -1] and ex.weights.tolist() == [0.5, 0.5, 2.0]
    ex = implicit_examples(s_hat, MfConfig(k_pos=2, k_neg=1, alpha=0.5, beta=2.0,
                                           implicit_target_mode="raw"))
    assert ex.targets.tolist() == [3, 1, -2]
    assert implicit_examples(s_hat, MfConfig(k_pos=2)) is None


def test_config_validation():
    for bad in ({"dim": 0}, {"l2_penalty": -1}, {"k_pos": -1}, {"learning_rate": 0},
                {"implicit_target_mode": "log"}):
        with pytest.raises(ConfigError):
            MfConfig(**bad)
    assert MfConfig().digest() == MfConfig().digest() != MfConfig(dim=3).digest()


def test_empty_training_set():
    g = SignedBipartiteGraph.from_edges([], n_buyers=2, n_sellers=2)
    with pytest.raises(TrainingError):
        train_mf(g)


def test_divergence_reported():
    g = _random_graph(3)
    with pytest.raises(TrainingError):
        train_mf(g, MfConfig(learning_rate=50.0, epochs=20))


def test_embedding_files(tmp_path):
    g = _random_graph(4, n=6)
    cfg = MfConfig(dim=3, epochs=5)
    emb = train_mf(g, cfg)
    path = tmp_path / "emb.bin"
    save_embeddings(emb, path, cfg)
    loaded, header = load_embeddings(path)
    assert header == {"d": 3, "n_B": 6, "n_S": 6, "seed": 0, "config_digest": cfg.digest()}
    assert np.array_equal(loaded.U, emb.U) and np.array_equal(loaded.V, emb.V)
    buf = io.StringIO()
    export_embeddings_text(emb, g, buf)
    lines = buf.getvalue().splitlines()
    assert len(lines) == 12 and lines[0].split("\t")[0] == "b0"
    assert float(lines[0].split("\t")[1]) == emb.U[0, 0]
