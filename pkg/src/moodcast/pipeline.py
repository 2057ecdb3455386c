"""Stage functions shared by the CLI and the acceptance suite.

Everything here is pure computation over in-memory tables; file layout
lives in :mod:`moodcast.cli`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import date

import numpy as np

from . import baseline, evaluation, features, preprocess, rnn, svm
from .features import PER_USER_CHRONOLOGICAL, SplitSpec
from .ingest import MOOD, UserDayTable

logger = logging.getLogger(__name__)


@dataclass
class SvmRun:
    model: svm.SvmModel
    feature_names: list[str]
    train: list[features.ClassificationExample]
    test: list[features.ClassificationExample]
    train_pred: list[int]
    test_pred: list[int]

    @property
    def train_matrix(self) -> evaluation.ConfusionMatrix:
        return evaluation.confusion_matrix([e.target_class for e in self.train], self.train_pred)

    @property
    def test_matrix(self) -> evaluation.ConfusionMatrix:
        return evaluation.confusion_matrix([e.target_class for e in self.test], self.test_pred)


def svm_examples(table: UserDayTable, window: int, split: SplitSpec, mood: str = MOOD):
    examples = features.build_classification_examples(table, window, mood)
    return features.split_holdout(examples, split)


def train_svm_stage(table: UserDayTable, window: int, split: SplitSpec,
                    params: svm.SvmParams, mood: str = MOOD) -> SvmRun:
    train, test = svm_examples(table, window, split, mood)
    X = np.array([e.features for e in train])
    model = svm.train_multiclass(X, [e.target_class for e in train], params)
    return evaluate_svm(model, table, window, split, mood)


def evaluate_svm(model: svm.SvmModel, table: UserDayTable, window: int, split: SplitSpec,
                 mood: str = MOOD) -> SvmRun:
    train, test = svm_examples(table, window, split, mood)
    return SvmRun(
        model=model,
        feature_names=features.feature_names(table, window, mood),
        train=train,
        test=test,
        train_pred=svm.predict_many(model, np.array([e.features for e in train])),
        test_pred=svm.predict_many(model, np.array([e.features for e in test])),
    )


@dataclass
class UserRnnData:
    scaling: preprocess.ScalingParams
    train: list[features.SequenceExample]
    test: list[features.SequenceExample]


@dataclass
class RnnRun:
    models: dict[str, rnn.RnnModel] = field(default_factory=dict)
    traces: dict[str, list[float]] = field(default_factory=dict)
    skipped: dict[str, str] = field(default_factory=dict)


def rnn_data(table: UserDayTable, config: rnn.RnnConfig, mood: str = MOOD
             ) -> tuple[dict[str, UserRnnData], dict[str, str]]:
    """Per-user scaling, sequences and chronological split.

    Users whose split would leave one side empty are skipped, with the reason.
    """
    spec = SplitSpec(config.test_fraction, PER_USER_CHRONOLOGICAL, config.seed)
    data, skipped = {}, {}
    for user in table.users:
        sub = table.subset([user])
        scaling = preprocess.fit_scaling(sub)
        seqs = features.build_sequence_examples(sub, scaling, config.seq_len, mood)[user]
        try:
            train, test = features.split_holdout(seqs, spec)
        except features.SplitError as exc:
            skipped[user] = str(exc)
            continue
        data[user] = UserRnnData(scaling, train, test)
    if skipped:
        logger.warning("RNN skips %d user(s): %s", len(skipped), ", ".join(skipped))
    return data, skipped


def train_rnn_stage(table: UserDayTable, config: rnn.RnnConfig, mood: str = MOOD) -> RnnRun:
    data, skipped = rnn_data(table, config, mood)
    run = RnnRun(skipped=skipped)
    for user, d in data.items():
        model, trace = rnn.train_rnn(d.train, config, scaling=d.scaling,
                                     variables=table.variables, mood=mood)
        run.models[user] = model
        run.traces[user] = trace
    return run


@dataclass(frozen=True)
class PredictionRow:
    user_id: str
    target_date: date
    actual: float
    predicted: float
    model: str


def rnn_test_predictions(models: dict[str, rnn.RnnModel], table: UserDayTable,
                         config: rnn.RnnConfig, mood: str = MOOD) -> list[PredictionRow]:
    """RNN and like-for-like persistence predictions on each user's test targets."""
    data, _ = rnn_data(table, config, mood)
    mood_col = table.variables.index(mood)
    rows = []
    for user, d in data.items():
        if user not in models:
            raise KeyError(f"no trained RNN for user {user}")
        model = models[user]
        for ex in d.test:
            actual = d.scaling.unscale(mood, ex.target)
            rows.append(PredictionRow(user, ex.target_date, actual,
                                      rnn.predict_mood(model, ex.inputs), "rnn"))
            # last input row is the previous retained day; its mood is the persistence forecast
            rows.append(PredictionRow(user, ex.target_date, actual,
                                      d.scaling.unscale(mood, ex.inputs[-1][mood_col]), "naive"))
    return rows


def rmse_by_user(rows: list[PredictionRow], model: str) -> dict[str, float]:
    grouped: dict[str, tuple[list[float], list[float]]] = {}
    for r in rows:
        if r.model == model:
            a, p = grouped.setdefault(r.user_id, ([], []))
            a.append(r.actual)
            p.append(r.predicted)
    return {u: evaluation.rmse(a, p) for u, (a, p) in sorted(grouped.items())}


def mood_series(table: UserDayTable, mood: str = MOOD) -> dict[str, list[tuple[date, float]]]:
    return {
        user: [(day, cells[mood].mean) for day, cells in per_user.items() if mood in cells]
        for user, per_user in table.days.items()
    }


@dataclass
class BaselineRun:
    predictions: list[baseline.NaivePrediction]
    accuracy: float
    rmse: dict[str, float]


def baseline_stage(table: UserDayTable, mood: str = MOOD) -> BaselineRun:
    series = mood_series(table, mood)
    preds, per_user = [], {}
    for user, s in series.items():
        p = baseline.predict_naive(s, user)
        if p:
            per_user[user] = evaluation.rmse([x.actual for x in p], [x.predicted for x in p])
        preds.extend(p)
    return BaselineRun(preds, baseline.naive_class_accuracy(series.values()), per_user)
