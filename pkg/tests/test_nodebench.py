import numpy as np
import pytest
from sklearn.metrics import accuracy_score, f1_score, precision_score, recall_score

from protgram.nodebench import (
    BENCH_CONFIG,
    NodeDataset,
    classification_metrics,
    karate_club,
    load_dataset,
    make_split,
    run_benchmark,
)
from dataclasses import replace


def test_karate_shape():
    ds = karate_club()
    assert (ds.num_nodes, ds.num_edges, ds.num_classes) == (34, 78, 4)
    a = ds.adjacency()
    assert np.array_equal(a, a.T) and a.sum() == 156
    np.testing.assert_array_equal(ds.feature_matrix(), np.eye(34))


def test_split_proportions(rng):
    for seed in range(5):
        labels = rng.integers(0, 3, size=200)
        train, val, test = make_split(labels, seed)
        assert abs(train.sum() - 20) <= 1 and abs(val.sum() - 20) <= 1
        assert not np.any(train & val) and not np.any(train & test)
        assert np.all(train | val | test)
    tr, va, te = karate_club().train_mask, karate_club().val_mask, karate_club().test_mask
    assert (tr.sum(), va.sum(), te.sum()) == (4, 4, 26)
    assert len(np.unique(karate_club().labels[tr])) == 4


def test_metrics_match_sklearn(rng):
    for _ in range(30):
        y = rng.integers(0, 3, size=25)
        p = rng.integers(0, 3, size=25)
        m = classification_metrics(y, p)
        kw = dict(average="macro", zero_division=0)
        assert m["accuracy"] == pytest.approx(accuracy_score(y, p))
        assert m["f1_macro"] == pytest.approx(f1_score(y, p, **kw))
        assert m["precision_macro"] == pytest.approx(precision_score(y, p, **kw))
        assert m["recall_macro"] == pytest.approx(recall_score(y, p, **kw))


def test_metrics_confusion_oracle():
    y = np.array([0, 0, 1, 1, 2, 2, 2])
    p = np.array([0, 1, 1, 1, 2, 0, 2])
    # per-class precision 1/2, 2/3, 1 ; recall 1/2, 1, 2/3
    m = classification_metrics(y, p)
    assert m["precision_macro"] == pytest.approx((0.5 + 2 / 3 + 1) / 3)
    assert m["recall_macro"] == pytest.approx((0.5 + 1 + 2 / 3) / 3)
    assert all(0 <= v <= 1 for v in m.values())


def write_ds(tmp_path, labels, edges="0\t1\n1\t2\n", features=None):
    d = tmp_path / "ds"
    d.mkdir(exist_ok=True)
    (d / "edges.tsv").write_text(edges)
    (d / "labels.tsv").write_text("".join(f"{i}\t{c}\n" for i, c in enumerate(labels)))
    if features is not None:
        (d / "features.tsv").write_text(features)
    return d


def test_loader_reads_and_defaults_identity(tmp_path):
    ds = load_dataset(write_ds(tmp_path, [0, 1, 0]))
    np.testing.assert_array_equal(ds.feature_matrix(), np.eye(3))
    assert ds.num_edges == 2


def test_loader_errors(tmp_path):
    with pytest.raises(ValueError, match="class"):
        load_dataset(write_ds(tmp_path, [0, 5, 0]))
    with pytest.raises(ValueError, match="outside"):
        load_dataset(write_ds(tmp_path, [0, 1, 0], edges="0\t7\n"))
    with pytest.raises(ValueError, match="feature"):
        load_dataset(write_ds(tmp_path, [0, 1, 0], features="0\t1.0\n1\t2.0\n"))
    with pytest.raises(FileNotFoundError):
        load_dataset(tmp_path / "missing")


def test_karate_beats_majority_baseline():
    ds = karate_club()
    majority = np.bincount(ds.labels[ds.test_mask]).max() / ds.test_mask.sum()
    res = run_benchmark(ds, BENCH_CONFIG, repeats=5)
    accs = [r["accuracy"] for r in res.runs]
    assert min(accs) > max(majority, 0.34)


def test_random_labels_are_near_chance():
    ds = karate_club()
    labels = np.random.default_rng(0).integers(0, 4, size=34)
    tr, va, te = make_split(labels, 0)
    rand = NodeDataset("rand", ds.edges, labels, None, tr, va, te, undirected=True)
    res = run_benchmark(rand, replace(BENCH_CONFIG, epochs=100), repeats=5)
    mean = res.summary()["accuracy"][0]
    assert abs(mean - 0.25) <= 0.15


def test_same_seeds_same_table():
    ds = karate_club()
    cfg = replace(BENCH_CONFIG, epochs=30)
    assert run_benchmark(ds, cfg, seeds=[3, 4]).runs == run_benchmark(ds, cfg, seeds=[3, 4]).runs
