"""End-to-end acceptance checks, one test per criterion."""

from datetime import date, timedelta

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from acceptance_log import criterion
from moodcast import pipeline
from moodcast.baseline import naive_class_accuracy, predict_naive
from moodcast.cli import main
from moodcast.evaluation import ConfusionMatrix, accuracy, rmse
from moodcast.features import (
    GLOBAL_RANDOM,
    PER_USER_CHRONOLOGICAL,
    ClassificationExample,
    SplitSpec,
    holdout_size,
    split_holdout,
)
from moodcast.ingest import pivot_daily
from moodcast.preprocess import (
    PruneConfig,
    apply_scaling,
    forward_fill,
    inverse_scaling,
    is_complete,
    preprocess,
    prune_days,
)
from moodcast.rnn import RnnConfig, RnnModel, forward, loss_and_gradients
from moodcast.svm import SvmParams, dual_objective, kkt_violation, predict_many, train_binary_svm, train_multiclass
from moodcast.synth import SynthConfig, generate_dataset
from oracles import brute_force_svm_dual, finite_difference_grad, optimal_alpha_box, successive_difference_rmse
from published_tables import TEST_COLS, TEST_COUNTS, TEST_ROWS, TRAIN_COLS, TRAIN_COUNTS, TRAIN_ROWS
from strategies import tables

D0 = date(2014, 3, 1)


def test_criterion_01_metric_arithmetic():
    with criterion(1, "confusion-matrix accuracy reproduces the published counts", 1.0):
        test = ConfusionMatrix.from_rows(TEST_ROWS, TEST_COLS, TEST_COUNTS)
        assert accuracy(test) == (81, 100, 0.810)
        train = ConfusionMatrix.from_rows(TRAIN_ROWS, TRAIN_COLS, TRAIN_COUNTS)
        correct, total, _ = accuracy(train)
        assert (correct, total) == (467, 565)


def svm_instances():
    rng = np.random.default_rng(2024)
    # two-point 1-D instances over a grid of positions and costs
    for x0, x1 in [(-1.0, 1.0), (0.0, 2.0), (-3.0, -0.5), (0.3, 0.4), (5.0, -2.0)]:
        for C in (0.1, 1.0, 10.0):
            yield np.array([[x0], [x1]]), np.array([1.0, -1.0]), C
    for _ in range(25):
        n, d = int(rng.integers(2, 5)), int(rng.integers(1, 3))
        X = rng.normal(size=(n, d))
        y = rng.choice([-1.0, 1.0], size=n)
        y[0], y[1] = 1.0, -1.0
        yield X, y, float(rng.choice([0.1, 0.5, 1.0, 5.0]))


def test_criterion_02_svm_matches_brute_force():
    with criterion(2, "SMO dual solution matches the brute-force QP oracle", 10.0):
        count = 0
        for X, y, C in svm_instances():
            params = SvmParams(cost=C, epsilon=1e-10, scale=False)
            m = train_binary_svm(X, y, params)
            ref_alpha, ref_obj = brute_force_svm_dual(X, y, C)
            assert abs(dual_objective(m.alpha, X, y) - ref_obj) <= 1e-6
            # alpha is compared against the whole optimal face (a point when unique)
            lo, hi = optimal_alpha_box(X, y, C, ref_alpha)
            assert np.all(m.alpha >= lo - 1e-6) and np.all(m.alpha <= hi + 1e-6)
            if np.all(hi - lo < 1e-9):
                assert np.max(np.abs(m.alpha - ref_alpha)) <= 1e-6
            assert kkt_violation(m.alpha, X, y, np.full(len(y), C)) < params.epsilon
            assert abs(m.alpha @ y) < 1e-8
            count += 1
        assert count >= 35


def test_criterion_03_svm_analytic_case():
    with criterion(3, "two-point analytic SVM solution"):
        m = train_binary_svm(np.array([[-1.0], [1.0]]), np.array([-1.0, 1.0]), SvmParams(cost=1.0))
        assert np.max(np.abs(m.alpha - 0.5)) <= 1e-9
        assert abs(m.w[0] - 1.0) <= 1e-9 and abs(m.b) <= 1e-9
        flipped = train_binary_svm(np.array([[-1.0], [1.0]]), np.array([1.0, -1.0]), SvmParams(cost=1.0))
        assert abs(flipped.w[0] + 1.0) <= 1e-9 and abs(flipped.b) <= 1e-9


def test_criterion_04_separable_multiclass():
    with criterion(4, "separable 3-class data trains to >= 0.98 accuracy", 5.0):
        rng = np.random.default_rng(0)
        centers = np.array([[0.0, 0.0], [6.0, 0.0], [3.0, 6.0]])
        X = np.vstack([c + rng.uniform(-1.0, 1.0, size=(100, 2)) for c in centers])
        labels = np.repeat([1, 2, 3], 100)
        model = train_multiclass(X, labels)
        assert np.mean(np.array(predict_many(model, X)) == labels) >= 0.98


def test_criterion_05_rnn_gradient_check():
    with criterion(5, "BPTT gradients match central differences on 10 models", 30.0):
        rng = np.random.default_rng(505)
        worst = 0.0
        for _ in range(10):
            D, H, L = int(rng.integers(1, 4)), int(rng.integers(1, 5)), int(rng.integers(1, 6))
            m = RnnModel(rng.uniform(-1, 1, (D, H)), rng.uniform(-1, 1, (H, H)), rng.uniform(-0.5, 0.5, H),
                         rng.uniform(-1, 1, H), float(rng.uniform(-0.5, 0.5)))
            x, target = rng.random((L, D)), float(rng.random())
            _, grads = loss_and_gradients(m, x, target)
            b_out = np.array([m.b_out])
            params = {"W_in": m.W_in, "W_rec": m.W_rec, "b_h": m.b_h, "W_out": m.W_out, "b_out": b_out}

            def loss():
                m.b_out = float(b_out[0])
                return 0.5 * (forward(m, x)[0] - target) ** 2

            numeric = finite_difference_grad(loss, params)
            for name in params:
                a, n = np.ravel(grads[name]), np.ravel(numeric[name])
                rel = np.abs(a - n) / np.maximum(np.abs(a) + np.abs(n), 1e-8)
                worst = max(worst, float(rel.max()))
        assert worst < 1e-4, worst


def test_criterion_06_rnn_beats_persistence():
    with criterion(6, "per-user RNN beats persistence RMSE for >= 90% of 20 users", 300.0):
        synth_cfg = SynthConfig(n_users=20, min_days=30, max_days=40, persistence=0.3,
                                feature_effect=2.0, noise_sd=0.1, seed=7)
        table, _ = preprocess(pivot_daily(generate_dataset(synth_cfg)), PruneConfig())
        rnn_cfg = RnnConfig(epochs=1000, test_fraction=0.3)
        run = pipeline.train_rnn_stage(table, rnn_cfg)
        assert not run.skipped and len(run.models) == 20
        rows = pipeline.rnn_test_predictions(run.models, table, rnn_cfg)
        ours, naive = pipeline.rmse_by_user(rows, "rnn"), pipeline.rmse_by_user(rows, "naive")
        wins = sum(ours[u] < naive[u] for u in ours)
        print(f"RNN better for {wins}/{len(ours)} users")
        assert wins >= 0.9 * len(ours)


def test_criterion_07_full_runs_are_byte_identical(tmp_path):
    with criterion(7, "two seeded `all` runs give byte-identical outputs"):
        trees = []
        for name in ("first", "second"):
            out = tmp_path / name
            assert main(["all", "--out", str(out), "--seed", "2204", "--epochs", "300"]) == 0
            trees.append({p.relative_to(out).as_posix(): p.read_bytes()
                          for p in sorted(out.rglob("*")) if p.is_file()})
        assert trees[0].keys() == trees[1].keys()
        for key in ("manifest.json", "reports/report.json", "reports/report.txt", "models/svm.json"):
            assert key in trees[0]
        assert any(k.startswith("models/rnn/AS14.") for k in trees[0])
        assert trees[0] == trees[1]


@settings(max_examples=100, deadline=None, database=None)
@given(tables(fillable=True))
def _fill_properties(t):
    once = forward_fill(t)
    assert is_complete(once)
    assert forward_fill(once) == once


@settings(max_examples=100, deadline=None, database=None)
@given(st.floats(-100, 100), st.floats(1e-3, 100), st.floats(0, 1))
def _scaling_round_trip(lo, width, frac):
    hi = lo + width
    x = min(hi, lo + frac * width)
    assert abs(inverse_scaling(apply_scaling(x, lo, hi), lo, hi) - x) <= 1e-12


@settings(max_examples=100, deadline=None, database=None)
@given(tables(), st.floats(0, 1), st.data())
def _prune_properties(t, day_cov, data):
    cfg = PruneConfig(0.0, day_cov)
    full, _ = prune_days(t, cfg)
    for user, per_user in full.days.items():
        assert len(per_user) <= len(t.days[user])
    drop = data.draw(st.sampled_from(t.users))
    rest, _ = prune_days(t.subset(u for u in t.users if u != drop), cfg)
    for user in rest.days:
        assert rest.days[user] == full.days[user]


def test_criterion_08_preprocessing_properties():
    with criterion(8, "fill/scale/prune property suite on 100 random tables each", 30.0):
        _fill_properties()
        _scaling_round_trip()
        _prune_properties()


def test_criterion_09_split_arithmetic():
    with criterion(9, "holdout sizes: 18 -> 5 per user, 1000 -> 100 global"):
        assert holdout_size(18, 0.3) == 5
        assert holdout_size(1000, 0.1) == 100
        per_user = [ClassificationExample((0.0,), 6, "u", D0 + timedelta(days=i)) for i in range(18)]
        _, test = split_holdout(per_user, SplitSpec(0.3, PER_USER_CHRONOLOGICAL))
        assert len(test) == 5
        pool = [ClassificationExample((0.0,), 6, f"u{i % 27}", D0) for i in range(1000)]
        train, test = split_holdout(pool, SplitSpec(0.1, GLOBAL_RANDOM, seed=1))
        assert (len(train), len(test)) == (900, 100)


def test_criterion_10_persistence_oracle():
    with criterion(10, "persistence RMSE equals successive-difference oracle on 100 series"):
        rng = np.random.default_rng(10)
        for _ in range(100):
            values = list(rng.uniform(1, 10, size=int(rng.integers(2, 60))))
            series = [(D0 + timedelta(days=i), v) for i, v in enumerate(values)]
            preds = predict_naive(series)
            ours = rmse([p.actual for p in preds], [p.predicted for p in preds])
            assert abs(ours - successive_difference_rmse(values)) <= 1e-12
        const = [(D0 + timedelta(days=i), 6.8) for i in range(12)]
        preds = predict_naive(const)
        assert rmse([p.actual for p in preds], [p.predicted for p in preds]) == 0.0
        assert naive_class_accuracy([const]) == 1.0
