"""Acceptance suite: one test per criterion, tolerances pinned here.

Run with ``pytest tests/test_acceptance.py``; the terminal summary
prints one PASS/FAIL line per criterion.
"""

import json
import random
import time

import mpmath
import numpy as np
import pytest

from helpers import annotation_fixture

from pgdetect.annotation import annotation_summary, write_labeled_dataset
from pgdetect.classifiers import TrainingHyperparams, TransformerClassifier, TransformerConfig, train_transformer
from pgdetect.classifiers.linear import loss_and_grad
from pgdetect.evaluation import (
    ConfusionMatrix,
    error_analysis,
    kfold_split,
    metrics,
    term_occurrence,
)
from pgdetect.experiment import ExperimentConfig, run_experiment, run_from_manifest
from pgdetect.features import SparseVector, fit_tfidf, transform, transform_many
from pgdetect.kernels import build_csr, pairwise_sq_dists
from pgdetect.sampling import SampleSpec, length_weighted_sample
from pgdetect.balance import smote_upsample
from pgdetect.stats import welch_t_test
from pgdetect.synthetic import generate_posts, to_labeled_dataset
from pgdetect.textprep import TokenSequence

mpmath.mp.dps = 50


# --------------------------------------------------------------- criterion 1


@pytest.mark.acceptance(1, "metric conventions vs brute-force recount")
def test_metric_convention_suite():
    start = time.perf_counter()
    # the three locked examples
    got = metrics(ConfusionMatrix(tp=2, fp=1, fn=2, tn=5))
    assert got["accuracy"] == 0.7
    assert abs(got["precision"] - 2 / 3) < 1e-12
    assert got["recall"] == 0.5
    assert abs(got["f1"] - 2 * (2 / 3) * 0.5 / (2 / 3 + 0.5)) < 1e-12
    # the zero rule, verbatim: no actual positives but predicted ones
    got = metrics(ConfusionMatrix(tp=0, fp=1, fn=0, tn=9))
    assert (got["precision"], got["recall"], got["f1"]) == (0.0, 0.0, 0.0)
    got = metrics(ConfusionMatrix(tp=0, fp=0, fn=0, tn=10))
    assert (got["precision"], got["recall"], got["f1"], got["accuracy"]) == (1.0, 1.0, 1.0, 1.0)

    rng = random.Random(10_000)
    for _ in range(1000):
        pairs = [
            (rng.random() < 0.35, rng.random() < 0.25)
            for _ in range(rng.randint(1, 50))
        ]
        cm = ConfusionMatrix.from_pairs([p for p, _ in pairs], [a for _, a in pairs])
        got = metrics(cm)
        # independent recount from the raw pairs
        tp = sum(1 for p, a in pairs if p and a)
        fp = sum(1 for p, a in pairs if p and not a)
        fn = sum(1 for p, a in pairs if not p and a)
        tn = sum(1 for p, a in pairs if not p and not a)
        accuracy = (tp + tn) / len(pairs)
        if tp + fn == 0:
            v = 0.0 if fp > 0 else 1.0
            want = {"accuracy": accuracy, "precision": v, "recall": v, "f1": v}
        elif tp == 0:
            want = {"accuracy": accuracy, "precision": 0.0, "recall": 0.0, "f1": 0.0}
        else:
            precision = tp / (tp + fp)
            recall = tp / (tp + fn)
            want = {
                "accuracy": accuracy,
                "precision": precision,
                "recall": recall,
                "f1": 2 * precision * recall / (precision + recall),
            }
        assert got == want  # exact equality
    assert time.perf_counter() - start < 1.0


# --------------------------------------------------------------- criterion 2


@pytest.mark.acceptance(2, "Welch t-test vs incomplete-beta oracle")
def test_welch_against_high_precision_oracle():
    start = time.perf_counter()
    res = welch_t_test([1, 2, 3, 4], [2, 3, 4, 5])
    assert abs(res.t - (-1.0954451150103321)) <= 1e-9
    assert abs(res.dof - 6.0) <= 1e-9

    rng = random.Random(77_000)
    for _ in range(100):
        na, nb = rng.randint(2, 50), rng.randint(2, 50)
        a = [rng.gauss(rng.uniform(-2, 2), rng.uniform(0.2, 4)) for _ in range(na)]
        b = [rng.gauss(rng.uniform(-2, 2), rng.uniform(0.2, 4)) for _ in range(nb)]
        if len(set(a)) == 1:
            a[0] += 1.0
        if len(set(b)) == 1:
            b[0] += 1.0
        got = welch_t_test(a, b)
        xa = [mpmath.mpf(v) for v in a]
        xb = [mpmath.mpf(v) for v in b]
        ma, mb = mpmath.fsum(xa) / na, mpmath.fsum(xb) / nb
        va = mpmath.fsum((v - ma) ** 2 for v in xa) / (na - 1)
        vb = mpmath.fsum((v - mb) ** 2 for v in xb) / (nb - 1)
        se2 = va / na + vb / nb
        t = (ma - mb) / mpmath.sqrt(se2)
        dof = se2**2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
        p = mpmath.betainc(dof / 2, mpmath.mpf(1) / 2, 0, dof / (dof + t**2), regularized=True)
        assert abs(got.t - float(t)) <= 1e-9
        assert abs(got.p - float(p)) <= 1e-9
    assert time.perf_counter() - start < 1.0


# --------------------------------------------------------------- criterion 3


@pytest.mark.acceptance(3, "k-fold partition properties")
def test_kfold_partition_properties():
    start = time.perf_counter()
    rng = random.Random(55)
    for _ in range(200):
        n = rng.randint(2, 400)
        k = rng.randint(2, min(12, n))
        seed = rng.randint(0, 2**62)
        folds = kfold_split(n, k=k, seed=seed)
        assert len(folds) == k
        flat = np.concatenate(folds)
        assert len(flat) == n  # disjoint + exhaustive
        assert set(flat.tolist()) == set(range(n))
        sizes = [len(f) for f in folds]
        assert max(sizes) - min(sizes) <= 1  # size-balanced
        again = kfold_split(n, k=k, seed=seed)  # seed-deterministic
        assert all(np.array_equal(a, b) for a, b in zip(folds, again))
    assert time.perf_counter() - start < 1.0


# --------------------------------------------------------------- criterion 4


@pytest.mark.acceptance(4, "TF-IDF hand oracle and norm invariant")
def test_tfidf_oracle_and_norm():
    import math

    model = fit_tfidf(["a b", "a c"])
    idf_rare = math.log(1.5) + 1.0
    assert abs(model.idf[model.vocabulary["a"]] - 1.0) <= 1e-6
    assert abs(model.idf[model.vocabulary["b"]] - idf_rare) <= 1e-6
    vec = transform(model, "a b")
    norm = math.sqrt(1.0 + idf_rare**2)
    assert abs(vec.values[0] - 1.0 / norm) <= 1e-6
    assert abs(vec.values[1] - idf_rare / norm) <= 1e-6

    rng = random.Random(4_000)
    words = [f"w{i}" for i in range(120)]
    corpus = [" ".join(rng.choices(words, k=rng.randint(1, 40))) for _ in range(300)]
    model = fit_tfidf(corpus)
    docs = [" ".join(rng.choices(words + ["oov1", "oov2"], k=rng.randint(0, 40))) for _ in range(1000)]
    for v in transform_many(model, docs):
        n = v.norm()
        assert n == 0.0 or abs(n - 1.0) <= 1e-12


# --------------------------------------------------------------- criterion 5


@pytest.mark.acceptance(5, "SMOTE segment/count/determinism properties")
def test_smote_properties():
    rng = np.random.default_rng(5_000)
    minority = [SparseVector.from_dense(rng.normal(size=12)) for _ in range(138)]
    before = [v.to_dense().copy() for v in minority]
    k, seed = 5, 999
    synth = smote_upsample(minority, 348, k=k, seed=seed)
    assert len(synth) == 210  # exact count
    assert synth == smote_upsample(minority, 348, k=k, seed=seed)  # determinism
    for v, orig in zip(minority, before):  # no mutation
        assert np.array_equal(v.to_dense(), orig)
    # every synthetic point is on a segment between minority points
    points = np.stack(before)
    dists = pairwise_sq_dists(points)
    np.fill_diagonal(dists, np.inf)
    neighbors = np.argsort(dists, axis=1, kind="stable")[:, :k]
    replay = np.random.default_rng(seed)
    for s in synth:
        i = int(replay.integers(0, len(minority)))
        j = int(neighbors[i, int(replay.integers(0, k))])
        u = float(replay.random())
        assert 0.0 <= u <= 1.0
        expected = points[i] + u * (points[j] - points[i])
        assert np.allclose(s.to_dense(), expected, atol=1e-12)


# --------------------------------------------------------------- criterion 6


@pytest.mark.acceptance(6, "annotation bookkeeping on the campaign fixture")
def test_annotation_bookkeeping():
    records = annotation_fixture()
    summary = annotation_summary(records)
    assert summary.per_label["non_target"] == 348
    assert summary.per_label["target"] == 138
    assert summary.per_label["inconclusive"] == 11
    assert summary.per_label["excluded_non_user_content"] == 7
    assert sum(summary.per_label.values()) == 504
    assert summary.per_subdomain["pathological_gambling"] == 114
    assert summary.per_subdomain["gambling_related_problems"] == 70
    assert summary.per_subdomain["cognitive_distortions"] == 23
    # overlap allowed: subdomains need not sum to the target count
    assert sum(summary.per_subdomain.values()) >= summary.per_label["target"]


# --------------------------------------------------------------- criterion 7


@pytest.mark.acceptance(7, "gradient checks vs central finite differences")
def test_gradient_checks():
    start = time.perf_counter()
    rel_tol = 1e-4
    floor = 1e-6  # below this, central differences are pure noise

    # linear loss
    rng = np.random.default_rng(7_100)
    dim = 18
    vectors = [
        SparseVector.from_dense(rng.normal(size=dim) * (rng.random(dim) > 0.4))
        for _ in range(15)
    ]
    y = (rng.random(15) > 0.5).astype(np.float64)
    y[:2] = [0.0, 1.0]
    indptr, indices, values = build_csr(vectors, dim)
    w = rng.normal(size=dim)
    b = 0.1
    _, grad_w, _ = loss_and_grad(indptr, indices, values, y, w, b, 0.01)
    h = 1e-6
    for coord in rng.choice(dim, size=20, replace=True):
        wp, wm = w.copy(), w.copy()
        wp[coord] += h
        wm[coord] -= h
        lp, _, _ = loss_and_grad(indptr, indices, values, y, wp, b, 0.01)
        lm, _, _ = loss_and_grad(indptr, indices, values, y, wm, b, 0.01)
        fd = (lp - lm) / (2 * h)
        assert abs(fd - grad_w[coord]) / max(abs(fd), abs(grad_w[coord]), floor) <= rel_tol

    # transformer loss
    config = TransformerConfig(vocab_size=18, layers=2, hidden=8, heads=2, ff_dim=16, max_len=8)
    model = TransformerClassifier(config, TrainingHyperparams(seed=3))
    ids = rng.integers(1, 18, size=(4, 8)).astype(np.int64)
    mask = np.ones((4, 8), dtype=np.int64)
    mask[0, 5:] = 0
    ids[0, 5:] = 0
    yb = np.array([0, 1, 0, 1])
    _, grads = model.loss_and_grads(ids, mask, yb)
    names = sorted(model.params)
    h = 1e-5
    checked = 0
    while checked < 20:
        name = names[int(rng.integers(len(names)))]
        tensor = model.params[name]
        idx = np.unravel_index(int(rng.integers(tensor.size)), tensor.shape)
        if name == "tok_emb" and grads[name][idx] == 0.0:
            continue
        orig = tensor[idx]
        tensor[idx] = orig + h
        lp, _ = model.loss_and_grads(ids, mask, yb)
        tensor[idx] = orig - h
        lm, _ = model.loss_and_grads(ids, mask, yb)
        tensor[idx] = orig
        fd = (lp - lm) / (2 * h)
        analytic = grads[name][idx]
        assert abs(fd - analytic) / max(abs(fd), abs(analytic), floor) <= rel_tol, name
        checked += 1
    assert time.perf_counter() - start < 30.0


# --------------------------------------------------------------- criterion 8


@pytest.mark.acceptance(8, "transformer overfit oracle (32 items)")
def test_overfit_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(8_000)
    config = TransformerConfig(vocab_size=30, layers=2, hidden=64, heads=2, max_len=16)
    n = 32
    ids = rng.integers(1, 30, size=(n, 16)).astype(np.int64)
    lengths = rng.integers(2, 17, size=n)
    mask = np.zeros((n, 16), dtype=np.int64)
    for i, ln in enumerate(lengths):
        mask[i, :ln] = 1
        ids[i, ln:] = 0
    labels = [i % 2 for i in range(n)]
    sequences = [
        TokenSequence(ids=tuple(map(int, r)), attention_mask=tuple(map(int, m)), max_len=16)
        for r, m in zip(ids, mask)
    ]
    hp = TrainingHyperparams(batch_size=32, learning_rate=1e-3, epochs=160, seed=5)
    assert hp.epochs <= 200
    model = train_transformer(sequences, labels, config, hp)
    scores = model.predict_scores(ids, mask)
    accuracy = float(((scores >= 0.5).astype(int) == np.array(labels)).mean())
    assert accuracy == 1.0
    for a, b in zip(model.history[:10], model.history[1:11]):
        assert b < a  # strict decrease over the first 10 epochs
    assert time.perf_counter() - start < 60.0


# --------------------------------------------------------------- criterion 9


@pytest.mark.acceptance(9, "end-to-end synthetic experiment (linear, 5-fold)")
def test_end_to_end_synthetic_experiment(tmp_path):
    start = time.perf_counter()
    posts = generate_posts(500, seed=42)
    dataset = to_labeled_dataset(posts)
    dataset_path = tmp_path / "dataset.jsonl"
    write_labeled_dataset(dataset, dataset_path)
    config = ExperimentConfig(
        dataset=str(dataset_path),
        preprocessing="lowercase_only",
        balance={"strategy": "imbalanced_348_138"},
        backend="linear",
        backend_config={"epochs": 300},
        folds=5,
        seed=7,
    )
    report = run_experiment(config, out_dir=tmp_path / "run")
    assert report.mean["f1"] >= 0.9

    texts = {it.post_id: it.text for it in dataset.items}
    fps = [
        texts[p["post_id"]]
        for p in report.predictions
        if p["predicted"] == "target" and p["label"] == "non_target"
    ]
    fns = [
        texts[p["post_id"]]
        for p in report.predictions
        if p["predicted"] == "non_target" and p["label"] == "target"
    ]
    tns = [
        texts[p["post_id"]]
        for p in report.predictions
        if p["predicted"] == "non_target" and p["label"] == "non_target"
    ]
    finance = ["geld", "verlust", "konto", "bank", "bankkonto", "kontoauszug"]
    analysis = error_analysis(
        {"false_positives": fps, "false_negatives": fns}, {"finance": finance}
    )
    fp_rate = analysis["false_positives"]["finance"]["rate"]
    tn_rate = term_occurrence(tns, finance)["rate"]
    assert fp_rate is not None, "expected at least one false positive"
    assert fp_rate > tn_rate  # the confound concentrates in false positives
    assert time.perf_counter() - start < 120.0


# -------------------------------------------------------------- criterion 10


@pytest.mark.acceptance(10, "manifest rerun is bit-identical")
def test_manifest_reproducibility(tmp_path):
    posts = generate_posts(120, seed=3)
    dataset_path = tmp_path / "dataset.jsonl"
    write_labeled_dataset(to_labeled_dataset(posts), dataset_path)
    config = ExperimentConfig(
        dataset=str(dataset_path),
        backend="linear",
        backend_config={"epochs": 100},
        folds=5,
        seed=31,
    )
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    run_experiment(config, out_dir=out1)
    run_from_manifest(out1 / "manifest.json", out_dir=out2)
    assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()
    assert (out1 / "predictions.jsonl").read_bytes() == (out2 / "predictions.jsonl").read_bytes()
    m1 = json.loads((out1 / "manifest.json").read_text())
    m2 = json.loads((out2 / "manifest.json").read_text())
    assert m1 == m2


# -------------------------------------------------------------- criterion 11


class _FakePost:
    def __init__(self, pid, length):
        self.id = pid
        self.word_token_count = length


@pytest.mark.acceptance(11, "length-matched sampling passes the Welch gate")
def test_length_matched_sampling_gate():
    base = np.random.default_rng(1_100)
    reference = np.clip(base.normal(296, 30, size=150).astype(int), 1, 512).tolist()
    lows = np.clip(base.normal(140, 25, size=400).astype(int), 1, 512)
    highs = np.clip(base.normal(300, 30, size=200).astype(int), 1, 512)
    pool = [_FakePost(f"p{i:05d}", int(n)) for i, n in enumerate(np.concatenate([lows, highs]))]
    passed = 0
    for seed in range(20):
        sample = length_weighted_sample(
            pool, SampleSpec(n=100, seed=seed, reference_lengths=reference)
        )
        lengths = [p.word_token_count for p in sample]
        if welch_t_test(lengths, reference).p >= 0.05:
            passed += 1
    assert passed >= 18, f"gate passed only {passed}/20 seeds"
