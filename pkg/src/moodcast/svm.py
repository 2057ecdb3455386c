"""Linear soft-margin C-SVM trained on the dual with a pairwise (SMO) solver,
combined one-vs-one for multiclass mood prediction.

The dual is solved in its minimisation form

    min_a  0.5 a'Qa - e'a   s.t.  y'a = 0,  0 <= a_i <= C_i,

with ``Q_ij = y_i y_j <x_i, x_j>``. Each iteration picks the maximal-violating
pair with second-order working-set selection and solves the two-variable
subproblem in closed form.
"""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
TAU = 1e-12


class SvmError(ValueError):
    pass


@dataclass(frozen=True)
class SvmParams:
    """Defaults reproduce the C-classification setting used for mood classes."""

    scale: bool = True
    svm_type: str = "C-classification"
    kernel: str = "linear"
    degree: int = 3  # inert for the linear kernel
    gamma: float = 1.0  # inert
    coef0: float = 0.0  # inert
    cost: float = 1.0
    class_weights: dict[int, float] = field(default_factory=dict)  # missing class -> 1
    epsilon: float = 0.1  # KKT violation tolerance
    max_iter: int = 10_000_000

    def __post_init__(self) -> None:
        if self.cost <= 0:
            raise ValueError("cost must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.kernel != "linear":
            raise ValueError("only the linear kernel is supported")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["class_weights"] = {str(k): v for k, v in sorted(self.class_weights.items())}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> SvmParams:
        d = dict(d)
        d["class_weights"] = {int(k): float(v) for k, v in d.get("class_weights", {}).items()}
        return cls(**d)


@dataclass
class BinarySvm:
    """Decision ``w.x + b``; positive side is class ``lo``."""

    lo: int
    hi: int
    alpha: np.ndarray
    w: np.ndarray
    b: float
    support: list[int]
    iterations: int = 0
    kkt_violation: float = 0.0

    def decision(self, x: np.ndarray) -> np.ndarray | float:
        return x @ self.w + self.b


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    sd: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> Standardizer:
        mean = X.mean(axis=0)
        sd = X.std(axis=0, ddof=1) if len(X) > 1 else np.zeros(X.shape[1])
        sd = np.where(np.isfinite(sd), sd, 0.0)
        return cls(mean, sd)

    def transform(self, X: np.ndarray) -> np.ndarray:
        # zero-variance features pass through unchanged
        active = self.sd > 0
        out = np.array(X, dtype=float, copy=True)
        out[..., active] = (out[..., active] - self.mean[active]) / self.sd[active]
        return out


def dual_objective(alpha: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    """Dual objective in maximisation form, sum(a) - 0.5 a'Qa."""
    v = (alpha * y) @ X
    return float(alpha.sum() - 0.5 * v @ v)


def _violation_bounds(alpha, G, y, C):
    """(max over I_up, min over I_low) of -y_t G_t."""
    score = -y * G
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    m = score[up].max() if up.any() else -np.inf
    M = score[low].min() if low.any() else np.inf
    return m, M, up, low, score


def kkt_violation(alpha: np.ndarray, X: np.ndarray, y: np.ndarray, C: np.ndarray) -> float:
    """Maximal KKT violation m(a) - M(a); zero (or negative) at the optimum."""
    Q = (y[:, None] * y[None, :]) * (X @ X.T)
    m, M, *_ = _violation_bounds(alpha, Q @ alpha - 1.0, y, C)
    if not (np.isfinite(m) and np.isfinite(M)):
        return 0.0
    return float(max(0.0, m - M))


def solve_dual(
    X: np.ndarray, y: np.ndarray, C: np.ndarray, epsilon: float, max_iter: int = 10_000_000
) -> tuple[np.ndarray, float, int, float]:
    """Returns (alpha, b, iterations, final violation)."""
    n = len(y)
    K = X @ X.T
    Q = (y[:, None] * y[None, :]) * K
    QD = np.diag(Q).copy()
    alpha = np.zeros(n)
    G = -np.ones(n)

    it = 0
    gap = 0.0
    while True:
        m, M, up, low, score = _violation_bounds(alpha, G, y, C)
        gap = m - M
        if gap < epsilon or it >= max_iter:
            if it >= max_iter:
                logger.warning("SMO hit max_iter=%d with violation %.3g", max_iter, gap)
            break
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        # second-order choice of j among I_low with -y_j G_j < -y_i G_i
        cand = low & (score < m)
        b_ij = m - score
        a_ij = QD[i] + QD - 2.0 * y[i] * y * Q[i]
        a_ij = np.where(a_ij > 0, a_ij, TAU)
        gain = np.where(cand, -(b_ij * b_ij) / a_ij, np.inf)
        j = int(np.argmin(gain))

        ai, aj = alpha[i], alpha[j]
        Ci, Cj = C[i], C[j]
        if y[i] != y[j]:
            quad = QD[i] + QD[j] + 2.0 * Q[i, j]
            quad = quad if quad > 0 else TAU
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ni, nj = ai + delta, aj + delta
            if diff > 0:
                if nj < 0:
                    nj, ni = 0.0, diff
            elif ni < 0:
                ni, nj = 0.0, -diff
            if diff > Ci - Cj:
                if ni > Ci:
                    ni, nj = Ci, Ci - diff
            elif nj > Cj:
                nj, ni = Cj, Cj + diff
        else:
            quad = QD[i] + QD[j] - 2.0 * Q[i, j]
            quad = quad if quad > 0 else TAU
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            ni, nj = ai - delta, aj + delta
            if total > Ci:
                if ni > Ci:
                    ni, nj = Ci, total - Ci
            elif nj < 0:
                nj, ni = 0.0, total
            if total > Cj:
                if nj > Cj:
                    nj, ni = Cj, total - Cj
            elif ni < 0:
                ni, nj = 0.0, total
        G += Q[:, i] * (ni - ai) + Q[:, j] * (nj - aj)
        alpha[i], alpha[j] = ni, nj
        it += 1

    return alpha, _bias(alpha, G, y, C), it, max(0.0, float(gap))


def _bias(alpha, G, y, C) -> float:
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = yG[free].mean()
    else:
        # midpoint of the feasible interval for rho
        at_upper = alpha >= C
        at_lower = alpha <= 0
        ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
        lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
        ub = yG[ub_mask].min() if ub_mask.any() else np.inf
        lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
        rho = 0.5 * (ub + lb) if np.isfinite(ub) and np.isfinite(lb) else (ub if np.isfinite(ub) else lb)
    return float(-rho)


def train_binary_svm(
    X: np.ndarray,
    y: np.ndarray,
    params: SvmParams = SvmParams(),
    *,
    costs: np.ndarray | None = None,
    lo: int = 1,
    hi: int = -1,
) -> BinarySvm:
    """Fit one binary machine on labels in {-1, +1}.

    ``X`` is used as given (standardisation happens in :func:`train_multiclass`).
    ``costs`` overrides the per-point upper bounds (defaults to ``params.cost``).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if len(X) != len(y):
        raise SvmError("X and y lengths differ")
    if not np.all(np.isfinite(X)):
        raise SvmError("non-finite feature value")
    if not set(np.unique(y)) <= {-1.0, 1.0}:
        raise SvmError("labels must be -1 or +1")
    if len(np.unique(y)) < 2:
        raise SvmError("binary training needs both labels")
    C = np.full(len(y), params.cost) if costs is None else np.asarray(costs, dtype=float)
    alpha, b, iters, viol = solve_dual(X, y, C, params.epsilon, params.max_iter)
    w = (alpha * y) @ X
    support = np.flatnonzero(alpha > 0).tolist()
    return BinarySvm(lo, hi, alpha, w, b, support, iters, viol)


@dataclass
class SvmModel:
    classes: list[int]
    machines: list[BinarySvm]
    params: SvmParams
    scaler: Standardizer | None
    n_features: int

    def _prepare(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.n_features:
            raise SvmError(f"expected {self.n_features} features, got {X.shape[-1]}")
        return self.scaler.transform(X) if self.scaler is not None else X

    def decision_values(self, x: np.ndarray) -> list[float]:
        z = self._prepare(x)
        return [float(m.decision(z)) for m in self.machines]

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "kind": "svm-ovo-linear",
            "classes": self.classes,
            "n_features": self.n_features,
            "params": self.params.to_dict(),
            "standardization": None if self.scaler is None else {
                "mean": self.scaler.mean.tolist(), "sd": self.scaler.sd.tolist(),
            },
            "machines": [
                {
                    "classes": [m.lo, m.hi],
                    "w": m.w.tolist(),
                    "b": m.b,
                    "alpha": m.alpha.tolist(),
                    "support": m.support,
                }
                for m in self.machines
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> SvmModel:
        if d.get("format_version") != FORMAT_VERSION:
            raise SvmError(f"unsupported model format {d.get('format_version')!r}")
        std = d["standardization"]
        scaler = None if std is None else Standardizer(np.array(std["mean"]), np.array(std["sd"]))
        machines = [
            BinarySvm(m["classes"][0], m["classes"][1], np.array(m["alpha"]),
                      np.array(m["w"]), float(m["b"]), list(m["support"]))
            for m in d["machines"]
        ]
        return cls(list(d["classes"]), machines, SvmParams.from_dict(d["params"]), scaler,
                   int(d["n_features"]))


def train_multiclass(
    X: np.ndarray, labels: Sequence[int], params: SvmParams = SvmParams()
) -> SvmModel:
    """One binary machine per class pair, on standardised features if ``params.scale``."""
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if X.ndim != 2 or len(X) != len(labels):
        raise SvmError("X must be (n, d) with one label per row")
    classes = sorted(set(labels.tolist()))
    if len(classes) < 2:
        raise SvmError(f"need at least two classes, got {classes}")
    scaler = Standardizer.fit(X) if params.scale else None
    Z = scaler.transform(X) if scaler is not None else X

    machines = []
    for lo, hi in itertools.combinations(classes, 2):
        mask = (labels == lo) | (labels == hi)
        y = np.where(labels[mask] == lo, 1.0, -1.0)
        costs = np.where(
            y > 0, params.cost * params.class_weights.get(lo, 1.0),
            params.cost * params.class_weights.get(hi, 1.0),
        )
        machines.append(train_binary_svm(Z[mask], y, params, costs=costs, lo=lo, hi=hi))
    return SvmModel(classes, machines, params, scaler, X.shape[1])


def vote(classes: Sequence[int], machines: Sequence[BinarySvm], decisions: Sequence[float]) -> int:
    """Majority vote; ties go to the larger summed |decision| of won duels,
    then to the smaller label."""
    votes = dict.fromkeys(classes, 0)
    strength = dict.fromkeys(classes, 0.0)
    for m, d in zip(machines, decisions):
        winner = m.lo if d > 0 else m.hi
        votes[winner] += 1
        strength[winner] += abs(d)
    return min(classes, key=lambda c: (-votes[c], -strength[c], c))


def predict_svm(model: SvmModel, features: Sequence[float]) -> int:
    x = np.asarray(features, dtype=float)
    if x.ndim != 1:
        raise SvmError("predict_svm takes a single feature vector")
    return vote(model.classes, model.machines, model.decision_values(x))


def predict_many(model: SvmModel, X: np.ndarray) -> list[int]:
    Z = model._prepare(np.asarray(X, dtype=float))
    D = np.column_stack([m.decision(Z) for m in model.machines])
    return [vote(model.classes, model.machines, row.tolist()) for row in D]

