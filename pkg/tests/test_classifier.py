import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from signed_bipartite.classifier import (CATERPILLAR, DEGREE, LogisticModel, class_weights,
                                         extract_caterpillar_features, extract_degree_features,
                                         fit_sign_classifier, predict_logistic, train_logistic,
                                         weighted_log_loss)
from signed_bipartite.errors import DegenerateLabelsError, DomainError
from signed_bipartite.graph import SignedBipartiteGraph

from conftest import signed_matrices
from oracles import caterpillar_paths, central_difference


def _degree_graph():
    # b0 has degrees (3, 1), s0 has (2, 2); the b0-s0 link is positive
    return SignedBipartiteGraph.from_edges([
        (0, 0, 1), (0, 1, 1), (0, 2, 1), (0, 3, -1),
        (1, 0, 1), (2, 0, -1), (3, 0, -1),
    ])


def test_degree_features_leave_one_out():
    g = _degree_graph()
    assert extract_degree_features(g, 0, 0).tolist() == [2, 1, 1, 2]
    # non-linked pair keeps raw degrees
    assert extract_degree_features(g, 1, 1).tolist() == [1, 0, 1, 0]


def test_degree_features_isolated_pair():
    g = SignedBipartiteGraph.from_edges([(0, 0, 1)], n_buyers=2, n_sellers=2)
    assert extract_degree_features(g, 1, 1).tolist() == [0, 0, 0, 0]
    with pytest.raises(DomainError):
        extract_degree_features(g, 2, 0)


def test_caterpillar_feature_order():
    g = SignedBipartiteGraph.from_edges([(0, 0, 1), (1, 0, 1), (1, 1, -1)])
    assert extract_caterpillar_features(g, 0, 1).tolist() == [0, 1, 0, 0, 0, 0, 0, 0]
    assert extract_caterpillar_features(g, 1, 1).tolist() == [0] * 8


@settings(max_examples=40, deadline=None)
@given(signed_matrices(max_buyers=6, max_sellers=6))
def test_caterpillar_feature_total(M):
    g = SignedBipartiteGraph.from_matrix(M)
    for i in range(M.shape[0]):
        for j in range(M.shape[1]):
            assert extract_caterpillar_features(g, i, j).sum() == sum(caterpillar_paths(M, i, j))


def test_class_weights():
    assert class_weights([1, -1, 1, -1]) == (1.0, 1.0)
    w_pos, w_neg = class_weights([1] * 98 + [-1] * 2)
    assert w_neg / w_pos == pytest.approx(49)
    with pytest.raises(DegenerateLabelsError):
        class_weights([1, 1, 1])
    with pytest.raises(DegenerateLabelsError):
        train_logistic([[1.0], [2.0]], [-1, -1])


def test_separable_pair():
    model = train_logistic([[1.0], [-1.0]], [1, -1])
    p_pos, s_pos = predict_logistic(model, [1.0])
    p_neg, s_neg = predict_logistic(model, [-1.0])
    assert p_pos > 0.5 and s_pos == 1 and s_neg == -1


def test_zero_model_ties_positive():
    model = LogisticModel(np.zeros(3), 0.0, np.zeros(3), np.ones(3), (1.0, 1.0))
    assert predict_logistic(model, [5, -2, 1]) == (0.5, 1)
    with pytest.raises(DomainError):
        predict_logistic(model, [1, 2])


def _problem(seed, n=40, k=4):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, k)) * rng.uniform(0.1, 50, size=k) + rng.normal(size=k) * 10
    y = np.where(X @ rng.normal(size=k) + rng.normal(size=n) > 0, 1, -1)
    y[:2] = [1, -1]
    return X, y


@pytest.mark.parametrize("seed", range(5))
def test_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(100 + seed)
    Z = rng.normal(size=(30, 5))
    y = np.where(rng.random(30) < 0.7, 1.0, -1.0)
    sw = np.where(y > 0, *class_weights(y))
    theta = rng.normal(size=6)

    def f(t):
        return weighted_log_loss(t[:5], t[5], Z, y, sw, 0.01)[0]

    _, gw, gb = weighted_log_loss(theta[:5], theta[5], Z, y, sw, 0.01)
    analytic = np.append(gw, gb)
    numeric = central_difference(f, theta)
    assert np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric) < 1e-5


def test_loss_never_increases():
    X, y = _problem(1)
    model = train_logistic(X, y, learning_rate=5.0, epochs=200)
    h = np.array(model.loss_history)
    assert np.all(np.diff(h) <= 0)
    model = train_logistic(X, y)
    assert np.all(np.diff(model.loss_history) <= 0)


def test_deterministic():
    X, y = _problem(2)
    a, b = train_logistic(X, y, seed=3), train_logistic(X, y, seed=3)
    assert np.array_equal(a.weights, b.weights) and a.bias == b.bias


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 3), st.floats(0.01, 100), st.floats(-100, 100))
def test_affine_rescaling_invariance(col, scale, shift):
    X, y = _problem(3)
    X2 = X.copy()
    X2[:, col] = X2[:, col] * scale + shift
    a, b = train_logistic(X, y), train_logistic(X2, y)
    rng = np.random.default_rng(0)
    for _ in range(5):
        x = X[rng.integers(len(X))] + rng.normal(size=X.shape[1])
        x2 = x.copy()
        x2[col] = x2[col] * scale + shift
        assert predict_logistic(a, x)[0] == pytest.approx(predict_logistic(b, x2)[0], abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 50))
def test_monotone_in_positive_weight(step):
    X, y = _problem(4)
    model = train_logistic(X, y)
    k = int(np.argmax(model.weights))
    assert model.weights[k] > 0
    x = X[0].copy()
    p0 = predict_logistic(model, x)[0]
    x[k] += step
    assert predict_logistic(model, x)[0] >= p0


def test_model_file_roundtrip(tmp_path):
    X, y = _problem(5)
    model = train_logistic(X, y, schema=DEGREE)
    path = tmp_path / "model.json"
    model.save(path)
    loaded = LogisticModel.load(path)
    assert loaded.schema == DEGREE
    assert np.allclose(loaded.decision_function(X), model.decision_function(X), atol=0, rtol=0)


def test_fit_sign_classifier_schema():
    rng = np.random.default_rng(0)
    g = SignedBipartiteGraph.from_matrix(
        (rng.random((15, 15)) < 0.4) * np.where(rng.random((15, 15)) < 0.6, 1, -1))
    m = fit_sign_classifier(g, CATERPILLAR, epochs=20)
    assert len(m.weights) == 8 and m.schema == CATERPILLAR
    with pytest.raises(DomainError):
        fit_sign_classifier(g, "triangles")
