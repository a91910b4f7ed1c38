import logging
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import invariants
import oracles
from conftest import make_blobs
from sscc.cascade import (
    SubsetEvaluation,
    enumerate_feature_subsets,
    evaluate_subset,
    fit,
    partition_node,
    select_best_subset,
)
from sscc.clustering import ClusteringResult
from sscc.dataset import Dataset, NoiseSpec, inject_label_noise
from sscc.scores import contingency
from sscc.tree import Hyperparameters, Leaf, Subtree


def test_enumerate_small():
    assert enumerate_feature_subsets(3, Hyperparameters()) == [(0, 1), (0, 2), (1, 2), (0, 1, 2)]


def test_enumerate_wine_size():
    assert len(enumerate_feature_subsets(13, Hyperparameters(subset_budget=0))) == 2**13 - 13 - 1


def test_enumerate_budget():
    hp = Hyperparameters(subset_budget=10, seed=3)
    a = enumerate_feature_subsets(13, hp)
    assert len(a) == 10 and len(set(a)) == 10
    assert tuple(range(13)) in a
    assert a == enumerate_feature_subsets(13, hp)
    assert a == sorted(a, key=lambda s: (len(s), s))


def test_enumerate_budget_sample_is_spread():
    subs = enumerate_feature_subsets(13, Hyperparameters(subset_budget=2000, seed=0))
    assert len(subs) == 2000
    sizes = {len(s) for s in subs}
    assert min(sizes) == 2 and max(sizes) == 13


def test_enumerate_size_policy():
    hp = Hyperparameters(subset_min_size=1, subset_max_size=1)
    assert enumerate_feature_subsets(3, hp) == [(0,), (1,), (2,)]
    with pytest.raises(ValueError):
        enumerate_feature_subsets(0, hp)
    with pytest.raises(ValueError):
        Hyperparameters(subset_min_size=3, subset_max_size=2)
    # a minimum above the feature count clamps to the full set
    assert enumerate_feature_subsets(2, Hyperparameters(subset_min_size=3)) == [(0, 1)]


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 9), st.integers(1, 40), st.integers(0, 1000))
def test_enumerate_sample_within_full_list(n, budget, seed):
    full = enumerate_feature_subsets(n, Hyperparameters(subset_budget=0))
    sub = enumerate_feature_subsets(n, Hyperparameters(subset_budget=budget, seed=seed))
    assert len(sub) == min(budget, len(full))
    assert set(sub) <= set(full)
    assert tuple(range(n)) in sub


def _fake(cs, size, sil=0.5, order=0):
    res = ClusteringResult(np.zeros(3, dtype=np.int64), np.zeros((2, size)), 2, 0.0, sil, tuple(range(size)))
    return SubsetEvaluation(tuple(range(size)), res, cs, order)


def test_select_best_tie_prefers_fewer_features():
    evals = [_fake(0.7, 2, order=0), _fake(0.9, 4, order=1), _fake(0.9, 2, order=2)]
    assert select_best_subset(evals) is evals[2]


def test_select_best_tie_silhouette_then_order():
    evals = [_fake(0.9, 2, 0.3, 0), _fake(0.9, 2, 0.6, 1), _fake(0.9, 2, 0.6, 2)]
    assert select_best_subset(evals) is evals[1]


def test_select_best_empty():
    with pytest.raises(ValueError):
        select_best_subset([])


def test_evaluate_subset_separated_blobs():
    data = make_blobs()
    ev = evaluate_subset(data.features, (0, 1), data.labels, Hyperparameters())
    assert ev.result.k == 2
    assert ev.completeness == 1.0


def test_evaluate_subset_random_labels_low_completeness():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(80, 2))
    y = rng.integers(0, 2, 80)
    ev = evaluate_subset(X, (0, 1), y, Hyperparameters())
    table = contingency(y, ev.result.assignments).counts.tolist()
    assert ev.completeness == pytest.approx(oracles.completeness(table), abs=1e-12)
    # H(C)/H(C,K) sits near 1/2 for balanced random labels on two clusters
    assert ev.completeness < 0.6 < Hyperparameters().lambda_cs


def test_evaluate_subset_k_capped_by_labels():
    # five tight groups but only two labels -> at most two clusters
    X = np.repeat(np.arange(5.0)[:, None] * 10, 6, axis=0) + np.random.default_rng(1).normal(scale=0.01, size=(30, 1))
    y = np.arange(30) % 2
    ev = evaluate_subset(np.hstack([X, X]), (0, 1), y, Hyperparameters())
    assert ev.result.k == 2


def _winner(labels, assign, cs):
    k = int(max(assign)) + 1
    res = ClusteringResult(np.asarray(assign), np.zeros((k, 1)), k, 0.0, 0.5, (0,))
    return SubsetEvaluation((0,), res, cs, 0)


def test_partition_cs_below_threshold():
    labels = np.array([0, 1, 0, 1])
    dec = partition_node(labels, _winner(labels, [0, 0, 1, 1], 0.6), Hyperparameters(lambda_cs=0.9), 0)
    assert dec.single_class and dec.cem is None


def test_partition_removes_low_cells_and_designates():
    # cluster 0: 9 A + 1 B (B entry 0.0449), cluster 1: 1 A + 4 B
    labels = np.array([0] * 9 + [1] + [0] + [1] * 4)
    assign = np.array([0] * 10 + [1] * 5)
    hp = Hyperparameters(lambda_cs=0.1, lambda_cem=0.85, lambda_ol=0.05, min_node_rows=3)
    dec = partition_node(labels, _winner(labels, assign, 0.5), hp, 0)
    c0, c1 = dec.clusters
    assert c0.removed.tolist() == [9]
    assert c0.action == "class" and c0.max_cem == pytest.approx(0.86423, abs=1e-5)
    assert c1.removed.size == 0
    assert c1.action == "recurse"


def test_partition_class_threshold():
    labels = np.array([0] * 20 + [1] * 20)
    assign = np.array([0] * 20 + [1] * 20)
    dec = partition_node(labels, _winner(labels, assign, 1.0), Hyperparameters(), 0)
    assert [c.action for c in dec.clusters] == ["class", "class"]


@pytest.mark.parametrize(
    "hp_kw,depth,why",
    [({"min_node_rows": 50}, 0, "min_node_rows"), ({"max_depth": 1}, 1, "max_depth")],
)
def test_partition_forced_leaf(hp_kw, depth, why):
    labels = np.array([0, 1] * 10 + [0] * 10 + [1] * 10)
    assign = np.array([0] * 20 + [1] * 20)
    hp = Hyperparameters(lambda_cs=0.01, lambda_cem=0.95, lambda_ol=0.0, **hp_kw)
    dec = partition_node(labels, _winner(labels, assign, 0.5), hp, depth)
    assert dec.clusters[0].action == "forced_leaf"
    assert why in dec.clusters[0].reason


def test_partition_single_label_after_removal():
    labels = np.array([0] * 30 + [1] + [1] * 10)
    assign = np.array([0] * 31 + [1] * 10)
    hp = Hyperparameters(lambda_cs=0.01, lambda_cem=0.99, lambda_ol=0.2)
    dec = partition_node(labels, _winner(labels, assign, 0.5), hp, 0)
    c0 = dec.clusters[0]
    assert c0.removed.tolist() == [30]
    assert c0.action == "forced_leaf" and "single label" in c0.reason


def test_fit_separated_blobs():
    data = make_blobs()
    tree, report = fit(data)
    root = tree.nodes[tree.root]
    assert len(tree.nodes) == 1 and root.k == 2
    assert root.completeness == 1.0
    assert len(tree.classes) == 2 and tree.removed == []
    assert all(isinstance(c, Leaf) for c in root.children)
    assert sorted(c.dominant_label for c in tree.classes) == [0, 1]
    assert all(invariants.check_all(tree, report, data).values())


def test_fit_normalizes_once():
    data = make_blobs()
    tree, _ = fit(data)
    np.testing.assert_allclose(tree.normalization.mean, data.features.mean(axis=0))
    np.testing.assert_allclose(tree.normalization.scale, data.features.std(axis=0))


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("algo", ["kmeans", "kmedoids"])
def test_fit_invariants_noisy_three_blobs(seed, algo):
    data = make_blobs(n_per=30, seed=seed, sep=5.0, n_blobs=3)
    noisy, _ = inject_label_noise(data, NoiseSpec(0.15, seed))
    hp = Hyperparameters(algorithm=algo, lambda_cem=0.8, lambda_cs=0.5, lambda_ol=0.05, seed=seed)
    tree, report = fit(noisy, hp)
    checks = invariants.check_all(tree, report, noisy)
    assert all(checks.values()), checks
    assert all(n.depth <= hp.max_depth for n in tree.nodes.values())


def test_fit_recurses_on_merged_labels():
    # labels 1 and 2 share one blob at level 0 and separate only on feature 2
    rng = np.random.default_rng(0)
    a = rng.normal(size=(40, 3))
    b = rng.normal(size=(40, 3)) + [12, 0, -3]
    c = rng.normal(size=(40, 3)) + [12, 0, 3]
    X = np.vstack([a, b, c])
    y = np.repeat([0, 1, 2], 40)
    data = Dataset(X, y, ["f0", "f1", "f2"], ["a", "b", "c"])
    hp = Hyperparameters(lambda_cs=0.5, lambda_cem=0.9, lambda_ol=0.01)
    tree, report = fit(data, hp)
    assert all(invariants.check_all(tree, report, data).values())
    assert len(tree.classes) == 3
    assert sorted(c.dominant_label for c in tree.classes) == [0, 1, 2]


def test_fit_reproducible():
    data, _ = inject_label_noise(make_blobs(n_blobs=3, sep=4.0), NoiseSpec(0.2, 1))
    hp = Hyperparameters(lambda_cs=0.4, lambda_cem=0.8, lambda_ol=0.05, seed=9)
    assert fit(data, hp)[0].to_json() == fit(data, hp)[0].to_json()


def test_fit_low_completeness_collapses_root():
    rng = np.random.default_rng(0)
    data = Dataset(rng.normal(size=(60, 2)), rng.integers(0, 2, 60), ["a", "b"], ["x", "y"])
    tree, report = fit(data, Hyperparameters(lambda_cs=0.99))
    root = tree.nodes[tree.root]
    assert root.k == 1 and len(tree.classes) == 1
    assert sum(tree.classes[0].composition) == 60
    assert all(invariants.check_all(tree, report, data).values())


def test_fit_single_label_warns(caplog):
    data = make_blobs().with_labels(np.zeros(100, dtype=np.int64))
    with caplog.at_level(logging.WARNING, logger="sscc.cascade"):
        tree, _ = fit(data)
    assert "single label" in caplog.text
    assert len(tree.classes) == 1


def test_fit_too_few_rows():
    with pytest.raises(ValueError):
        fit(make_blobs().take([0, 99]))


def test_hyperparameter_validation():
    with pytest.raises(ValueError):
        Hyperparameters(lambda_ol=0.95, lambda_cem=0.9)
    with pytest.raises(ValueError):
        Hyperparameters(algorithm="dbscan")
    assert replace(Hyperparameters(), seed=3).seed == 3


def test_report_text_and_dict():
    data = make_blobs()
    tree, report = fit(data)
    text = report.render_text()
    assert "blob0" in text and "blob1" in text
    d = report.to_dict()
    assert d["version"] == "sscc-report/1"
    assert [c["class_id"] for c in d["classes"]] == [c.class_id for c in tree.classes]
    assert {r["node_id"] for r in d["records"]} == set(tree.nodes)


def test_subtree_children_point_to_deeper_nodes():
    data, _ = inject_label_noise(make_blobs(n_blobs=4, sep=4.0, n_per=40), NoiseSpec(0.1, 0))
    tree, _ = fit(data, Hyperparameters(lambda_cs=0.3, lambda_cem=0.95, lambda_ol=0.02))
    for n in tree.nodes.values():
        for ch in n.children:
            if isinstance(ch, Subtree):
                assert tree.nodes[ch.node_id].depth == n.depth + 1


def test_fit_rows_coinciding_on_all_features():
    X = np.vstack([np.zeros((10, 2)), np.ones((10, 2))])
    y = np.array([0] * 5 + [1] * 5 + [1] * 10)
    data = Dataset(X, y, ["a", "b"], ["p", "q"])
    tree, report = fit(data, Hyperparameters(lambda_cs=0.1, lambda_cem=0.95, lambda_ol=0.0))
    assert all(invariants.check_all(tree, report, data).values())
    # the mixed block at the origin cannot be split further
    assert any("coincide" in c.reason for c in tree.classes)
    for n in tree.nodes.values():
        assert np.unique(n.centers, axis=0).shape[0] == n.k
