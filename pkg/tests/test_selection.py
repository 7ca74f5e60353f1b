import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hiltta.core import make_rng
from hiltta.selection import (
    covering_radius,
    kcenter_bruteforce_oracle,
    kcenter_greedy,
    margin_weighted_embedding,
    margin_weights,
    select_for_annotation,
    weighted_embeddings,
)


def test_weight_fully_confident_is_zero():
    emb = margin_weighted_embedding(np.array([1.0, 0.0]), np.array([3.0, -2.0]))
    assert emb.weight == 0.0
    assert np.array_equal(emb.g, np.zeros(2))


def test_weight_maximal_uncertainty_keeps_feature():
    f = np.array([1.5, -0.5])
    emb = margin_weighted_embedding(np.array([0.5, 0.5]), f)
    assert emb.weight == 1.0
    assert np.array_equal(emb.g, f)


def test_weight_direct_arithmetic():
    emb = margin_weighted_embedding(np.array([0.7, 0.2, 0.1]), np.array([2.0, -1.0]))
    assert emb.weight == pytest.approx(0.5, abs=1e-12)
    assert np.allclose(emb.g, [1.0, -0.5])


def test_weight_needs_two_classes():
    with pytest.raises(ValueError):
        margin_weighted_embedding(np.array([1.0]), np.array([1.0]))


def _g1d(values):
    return np.asarray(values, dtype=np.float64)[:, None]


def test_kcenter_line_instance():
    g = _g1d([0.0, 1.0, 10.0])
    ids = np.array([0, 1, 2])
    picked = kcenter_greedy(g, ids, 2)
    assert picked == [2, 0]  # largest norm first, then farthest
    rows = [list(ids).index(i) for i in picked]
    assert covering_radius(g, rows) == pytest.approx(1.0)
    assert kcenter_bruteforce_oracle(g, 2) == pytest.approx(1.0)


def test_kcenter_k_equals_n():
    g = _g1d([3.0, -1.0, 2.0, 7.0])
    ids = np.array([10, 11, 12, 13])
    picked = kcenter_greedy(g, ids, 4)
    assert sorted(picked) == [10, 11, 12, 13]
    rows = [list(ids).index(i) for i in picked]
    assert covering_radius(g, rows) == 0.0


def test_kcenter_identical_points_tie_rule():
    g = np.ones((5, 3))
    ids = np.array([7, 3, 9, 1, 5])
    picked = kcenter_greedy(g, ids, 3)
    assert picked == [1, 3, 5]  # all ties resolve to smallest id


def test_kcenter_k_bounds():
    g = _g1d([1.0, 2.0])
    with pytest.raises(ValueError):
        kcenter_greedy(g, np.array([0, 1]), 3)
    assert kcenter_greedy(g, np.array([0, 1]), 0) == []


def test_oracle_examples_and_guards():
    assert kcenter_bruteforce_oracle(_g1d([0.0, 1.0]), 1) == pytest.approx(1.0)
    assert kcenter_bruteforce_oracle(_g1d([0.0, 1.0, 10.0]), 3) == 0.0
    with pytest.raises(ValueError):
        kcenter_bruteforce_oracle(np.zeros((20, 2)), 2)
    with pytest.raises(ValueError):
        kcenter_bruteforce_oracle(np.zeros((10, 2)), 6)


def test_greedy_within_two_approximation():
    rng = make_rng(30)
    for _ in range(200):
        n = int(rng.integers(3, 15))
        k = int(rng.integers(1, min(5, n + 1)))
        dim = int(rng.integers(1, 4))
        g = rng.standard_normal((n, dim)) * rng.uniform(0.5, 3.0)
        ids = np.arange(n)
        picked = kcenter_greedy(g, ids, k)
        rows = [list(ids).index(i) for i in picked]
        greedy_r = covering_radius(g, rows)
        opt_r = kcenter_bruteforce_oracle(g, k)
        assert greedy_r <= 2.0 * opt_r + 1e-12


def test_greedy_radius_monotone_in_k():
    rng = make_rng(31)
    g = rng.standard_normal((12, 3))
    ids = np.arange(12)
    last = np.inf
    for k in range(1, 13):
        rows = [list(ids).index(i) for i in kcenter_greedy(g, ids, k)]
        r = covering_radius(g, rows)
        assert r <= last + 1e-12
        last = r


@settings(max_examples=30)
@given(st.floats(0.1, 100.0))
def test_greedy_scale_equivariant(scale):
    rng = make_rng(32)
    g = rng.standard_normal((10, 2))
    ids = np.arange(10)
    assert kcenter_greedy(g, ids, 4) == kcenter_greedy(scale * g, ids, 4)


def test_first_pick_has_maximal_norm():
    rng = make_rng(33)
    for _ in range(25):
        g = rng.standard_normal((9, 3))
        ids = np.arange(9)
        first = kcenter_greedy(g, ids, 1)[0]
        norms = np.linalg.norm(g, axis=1)
        assert norms[first] == norms.max()


def test_margin_weights_batch():
    p = np.array([[0.7, 0.2, 0.1], [1.0, 0.0, 0.0]])
    assert np.allclose(margin_weights(p), [0.5, 0.0])
    f = np.array([[2.0, 0.0], [4.0, 4.0]])
    g = weighted_embeddings(p, f)
    assert np.allclose(g, [[1.0, 0.0], [0.0, 0.0]])


def test_strategies_shapes_and_determinism():
    rng = make_rng(34)
    n, c, h = 30, 4, 6
    logits = rng.standard_normal((n, c))
    probs = np.exp(logits) / np.exp(logits).sum(1, keepdims=True)
    feats = rng.standard_normal((n, h))
    ids = np.arange(100, 100 + n)
    for strat in ("kmargin", "entropy", "margin_only"):
        picked = select_for_annotation(strat, probs, feats, ids, 5, rng)
        assert len(picked) == 5 and len(set(picked)) == 5
        again = select_for_annotation(strat, probs, feats, ids, 5, rng)
        assert picked == again  # deterministic strategies ignore the rng
    r1 = select_for_annotation("random", probs, feats, ids, 5, make_rng(1, 2))
    r2 = select_for_annotation("random", probs, feats, ids, 5, make_rng(1, 2))
    assert r1 == r2


def test_entropy_strategy_picks_flattest():
    probs = np.array([[0.97, 0.01, 0.02], [1 / 3, 1 / 3, 1 / 3], [0.6, 0.3, 0.1]])
    feats = np.zeros((3, 2))
    ids = np.array([5, 6, 7])
    assert select_for_annotation("entropy", probs, feats, ids, 1, make_rng(0)) == [6]


def test_unknown_strategy_rejected():
    with pytest.raises(ValueError):
        select_for_annotation("badge", np.ones((2, 2)) / 2, np.ones((2, 2)), np.arange(2), 1, make_rng(0))
