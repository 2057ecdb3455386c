"""Seeded synthetic sensing logs with learnable next-day mood dynamics.

Each user has latent daily sensor levels drawn uniformly in each variable's
range. Mood follows a clamped autoregression with a feature-driven term::

    mood[t+1] = clip(a * mood[t] + (1 - a) * center + b * g(levels[t]) + noise, 1, 10)
    g(levels) = sum_k w_k * (2 * (levels_k - lo_k) / (hi_k - lo_k) - 1)

with per-user weights ``w`` (``sum |w_k| = 1``, so ``g`` lies in [-1, 1]).
Several observations are emitted per variable and day, symmetric around the
daily level, so the daily mean equals the level when nothing is missing.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from datetime import date, datetime, timedelta
from typing import IO, Sequence

import numpy as np

from .ingest import MOOD, ObservationRecord
from .seeding import derive_seed

MOOD_RANGE = (1.0, 10.0)


@dataclass(frozen=True)
class VariableSpec:
    name: str
    lo: float
    hi: float
    obs_per_day: int = 3
    missing_rate: float = 0.05

    def __post_init__(self) -> None:
        if not self.hi > self.lo:
            raise ValueError(f"{self.name}: empty range")
        if not 0.0 <= self.missing_rate <= 1.0:
            raise ValueError(f"{self.name}: missing_rate outside [0, 1]")
        if self.obs_per_day < 1:
            raise ValueError(f"{self.name}: obs_per_day must be positive")


DEFAULT_VARIABLES = (
    VariableSpec("activity", 0.0, 1.0),
    VariableSpec("circumplex.arousal", -2.0, 2.0),
    VariableSpec("circumplex.valence", -2.0, 2.0),
    VariableSpec("screen", 0.0, 600.0),
    VariableSpec("call", 0.0, 10.0),
    VariableSpec("sms", 0.0, 10.0, missing_rate=0.9),  # too sparse to survive pruning
)


@dataclass(frozen=True)
class SynthConfig:
    n_users: int = 27
    min_days: int = 9
    max_days: int = 21
    variables: tuple[VariableSpec, ...] = DEFAULT_VARIABLES
    mood_obs_per_day: int = 5
    mood_missing_rate: float = 0.05
    persistence: float = 0.5  # a
    feature_effect: float = 1.5  # b
    noise_sd: float = 0.3
    center: tuple[float, float] = (7.0, 8.0)  # per-user center drawn uniformly here
    spread: float = 0.5  # intra-day spread, fraction of the distance to the range edge
    start: date = date(2014, 2, 26)
    max_start_offset: int = 20
    seed: int = 2204

    def __post_init__(self) -> None:
        if self.n_users < 1 or not 1 <= self.min_days <= self.max_days:
            raise ValueError("need n_users >= 1 and 1 <= min_days <= max_days")
        if not 0.0 <= self.mood_missing_rate <= 1.0:
            raise ValueError("mood_missing_rate outside [0, 1]")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be non-negative")
        if not self.center[0] <= self.center[1]:
            raise ValueError("center range reversed")
        if not 0.0 <= self.spread <= 1.0:
            raise ValueError("spread outside [0, 1]")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["start"] = self.start.isoformat()
        d["center"] = list(self.center)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> SynthConfig:
        d = dict(d)
        if "variables" in d:
            d["variables"] = tuple(VariableSpec(**v) for v in d["variables"])
        if "start" in d:
            d["start"] = date.fromisoformat(d["start"])
        if "center" in d:
            d["center"] = tuple(d["center"])
        return cls(**d)


@dataclass(frozen=True)
class UserDynamics:
    user_id: str
    persistence: float
    feature_effect: float
    center: float
    initial_mood: float
    weights: dict[str, float] = field(default_factory=dict)
    n_days: int = 0
    start: date = date(2014, 2, 26)

    def drive(self, levels: dict[str, float], variables: Sequence[VariableSpec]) -> float:
        return sum(
            self.weights[v.name] * (2.0 * (levels[v.name] - v.lo) / (v.hi - v.lo) - 1.0)
            for v in variables
        )

    def next_mood(self, mood: float, levels: dict[str, float],
                  variables: Sequence[VariableSpec], noise: float = 0.0) -> float:
        """Next-day mood given today's mood and latent levels (noise-free by default)."""
        raw = (self.persistence * mood + (1.0 - self.persistence) * self.center
               + self.feature_effect * self.drive(levels, variables) + noise)
        return float(min(MOOD_RANGE[1], max(MOOD_RANGE[0], raw)))


def user_ids(n: int) -> list[str]:
    return [f"AS14.{i:02d}" for i in range(1, n + 1)]


def ground_truth(config: SynthConfig) -> dict[str, UserDynamics]:
    """Per-user dynamics; drawn from their own stream so noise settings don't move them."""
    rng = np.random.default_rng(derive_seed(config.seed, "synth-params"))
    truth = {}
    for uid in user_ids(config.n_users):
        w = rng.normal(size=len(config.variables))
        w = w / np.abs(w).sum()
        center = float(rng.uniform(*config.center))
        truth[uid] = UserDynamics(
            user_id=uid,
            persistence=config.persistence,
            feature_effect=config.feature_effect,
            center=center,
            initial_mood=center,
            weights={v.name: float(x) for v, x in zip(config.variables, w)},
            n_days=int(rng.integers(config.min_days, config.max_days + 1)),
            start=config.start + timedelta(days=int(rng.integers(0, config.max_start_offset + 1))),
        )
    return truth


def _observations(level: float, lo: float, hi: float, n: int, spread: float) -> np.ndarray:
    half = spread * min(level - lo, hi - level)
    return level + half * np.linspace(-1.0, 1.0, n) if n > 1 else np.array([level])


def _stamps(day: date, n: int) -> list[datetime]:
    base = datetime(day.year, day.month, day.day, 8, 0, 0)
    step = 14 * 60 // max(n, 1)
    return [base + timedelta(minutes=step * k) for k in range(n)]


def simulate_user(dyn: UserDynamics, config: SynthConfig, rng: np.random.Generator):
    """Latent (day, mood, levels) rows for one user."""
    rows = []
    mood = dyn.initial_mood
    for d in range(dyn.n_days):
        levels = {v.name: float(rng.uniform(v.lo, v.hi)) for v in config.variables}
        rows.append((dyn.start + timedelta(days=d), mood, levels))
        noise = float(rng.normal(0.0, config.noise_sd)) if config.noise_sd > 0 else 0.0
        mood = dyn.next_mood(mood, levels, config.variables, noise)
    return rows


def generate_dataset(config: SynthConfig = SynthConfig()) -> list[ObservationRecord]:
    """Raw long-format records, deterministic in ``config.seed``."""
    truth = ground_truth(config)
    rng = np.random.default_rng(derive_seed(config.seed, "synth"))
    records: list[ObservationRecord] = []
    for uid, dyn in truth.items():
        for day, mood, levels in simulate_user(dyn, config, rng):
            day_records = []
            series = [(MOOD, mood, *MOOD_RANGE, config.mood_obs_per_day, config.mood_missing_rate)]
            series += [(v.name, levels[v.name], v.lo, v.hi, v.obs_per_day, v.missing_rate)
                       for v in config.variables]
            for name, level, lo, hi, n, rate in series:
                values = _observations(level, lo, hi, n, config.spread)
                missing = rng.random(n) < rate
                for ts, value, gone in zip(_stamps(day, n), values, missing):
                    day_records.append(
                        ObservationRecord(uid, ts, name, None if gone else float(value))
                    )
            day_records.sort(key=lambda r: (r.timestamp, r.variable))
            records.extend(day_records)
    return records


def write_raw_csv(records: Sequence[ObservationRecord], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["id", "time", "variable", "value"])
    for r in records:
        value = "NA" if r.value is None else repr(r.value)
        writer.writerow([r.user_id, r.timestamp.isoformat(sep=" "), r.variable, value])


def ground_truth_json(config: SynthConfig) -> str:
    truth = {
        uid: {**asdict(d), "start": d.start.isoformat()}
        for uid, d in ground_truth(config).items()
    }
    return json.dumps({"config": config.to_dict(), "users": truth}, indent=1, sort_keys=True) + "\n"
