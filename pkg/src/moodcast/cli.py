"""Command-line entry point.

Output tree under ``--out``::

    manifest.json        config echo, seeds, input fingerprint, versions, outputs
    tables/              raw (synth), wide daily tables, preprocessing summary
    models/              svm.json, rnn/<user>.json, rnn/index.json
    reports/             report.json, report.txt, baseline.json
    plots/               CSV series (predictions, training traces, daily mood)

Precedence: built-in defaults < ``--config`` JSON < command-line flags.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import logging
import platform
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__, evaluation, pipeline, preprocess, synth
from .features import GLOBAL_RANDOM, SplitSpec
from .ingest import MOOD, ParseError, parse_records, pivot_daily
from .preprocess import PruneConfig
from .rnn import RnnConfig, RnnModel
from .seeding import derive_seed
from .svm import SvmModel, SvmParams

logger = logging.getLogger("moodcast")

SCHEMA_VERSION = 1
COMMANDS = ("synth", "preprocess", "train-svm", "train-rnn", "baseline", "evaluate", "all")

RAW = "tables/raw.csv"
TRUTH = "tables/ground_truth.json"
WIDE = "tables/daily_wide.csv"
IMPUTED = "tables/daily_imputed.csv"
COUNTS = "tables/daily_counts.csv"
PREP_SUMMARY = "tables/preprocess.json"
SVM_MODEL = "models/svm.json"
RNN_INDEX = "models/rnn/index.json"
BASELINE = "reports/baseline.json"


class PipelineError(RuntimeError):
    pass


@dataclass
class PipelineConfig:
    seed: int = 2204
    input: str | None = None
    out: str = "out"
    synth: synth.SynthConfig = field(default_factory=synth.SynthConfig)
    prune: PruneConfig = field(default_factory=PruneConfig)
    window: int = 5
    svm: SvmParams = field(default_factory=SvmParams)
    svm_test_fraction: float = 0.1
    svm_split_mode: str = GLOBAL_RANDOM
    rnn: RnnConfig = field(default_factory=RnnConfig)
    strict: bool = True

    @property
    def seeds(self) -> dict[str, int]:
        return {
            "global": self.seed,
            "synth": derive_seed(self.seed, "synth"),
            "split": derive_seed(self.seed, "split"),
            "rnn": self.seed,
        }

    def synth_config(self) -> synth.SynthConfig:
        return replace(self.synth, seed=self.seeds["synth"])

    def rnn_config(self) -> RnnConfig:
        return replace(self.rnn, seed=self.seeds["rnn"])

    def svm_split(self) -> SplitSpec:
        return SplitSpec(self.svm_test_fraction, self.svm_split_mode, self.seeds["split"])

    def to_dict(self) -> dict:
        """Everything that affects results; the output location is left out so
        that runs into different directories stay byte-identical."""
        synth_d = self.synth.to_dict()
        synth_d.pop("seed")  # derived from the global seed
        rnn_d = asdict(self.rnn)
        rnn_d.pop("seed")
        return {
            "schema_version": SCHEMA_VERSION,
            "seed": self.seed,
            "input": self.input,
            "synth": synth_d,
            "prune": asdict(self.prune),
            "window": self.window,
            "svm": {**self.svm.to_dict(), "test_fraction": self.svm_test_fraction,
                    "split_mode": self.svm_split_mode},
            "rnn": rnn_d,
            "strict": self.strict,
        }

    @classmethod
    def from_dict(cls, d: dict) -> PipelineConfig:
        d = dict(d)
        version = d.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise PipelineError(f"unsupported config schema_version {version}")
        cfg = cls()
        known = {"seed", "input", "out", "synth", "prune", "window", "svm", "rnn", "strict"}
        unknown = set(d) - known
        if unknown:
            raise PipelineError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if "synth" in d:
            cfg.synth = synth.SynthConfig.from_dict(d.pop("synth"))
        if "prune" in d:
            cfg.prune = PruneConfig(**d.pop("prune"))
        if "svm" in d:
            s = dict(d.pop("svm"))
            cfg.svm_test_fraction = float(s.pop("test_fraction", cfg.svm_test_fraction))
            cfg.svm_split_mode = s.pop("split_mode", cfg.svm_split_mode)
            cfg.svm = SvmParams.from_dict(s)
        if "rnn" in d:
            cfg.rnn = RnnConfig(**d.pop("rnn"))
        for key, value in d.items():
            setattr(cfg, key, value)
        SplitSpec(cfg.svm_test_fraction, cfg.svm_split_mode)  # validate
        return cfg


def sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class Workspace:
    """Buffers outputs and writes them only once a command has succeeded."""

    def __init__(self, root: Path) -> None:
        self.root = root
        self.pending: dict[str, str] = {}

    def path(self, rel: str) -> Path:
        return self.root / rel

    def read(self, rel: str, what: str) -> str:
        if rel in self.pending:
            return self.pending[rel]
        p = self.path(rel)
        if not p.exists():
            raise PipelineError(f"missing {what}: {p} (run the producing command first)")
        return p.read_text(encoding="utf-8")

    def put(self, rel: str, text: str) -> None:
        self.pending[rel] = text

    def commit(self) -> dict[str, str]:
        hashes = {}
        for rel, text in sorted(self.pending.items()):
            p = self.path(rel)
            p.parent.mkdir(parents=True, exist_ok=True)
            data = text.encode("utf-8")
            p.write_bytes(data)
            hashes[rel] = sha256(data)
        self.pending.clear()
        return hashes


def _csv(writer, *args) -> str:
    buf = io.StringIO()
    writer(*args, buf)
    return buf.getvalue()


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def raw_input_text(cfg: PipelineConfig, ws: Workspace) -> tuple[str, str]:
    """Raw CSV text and a label for where it came from."""
    if cfg.input is not None:
        p = Path(cfg.input)
        if not p.exists():
            raise PipelineError(f"input file not found: {p}")
        return p.read_text(encoding="utf-8"), str(p)
    return ws.read(RAW, "raw input (give --input or run `synth`)"), RAW


def cmd_synth(cfg: PipelineConfig, ws: Workspace) -> None:
    sc = cfg.synth_config()
    ws.put(RAW, _csv(synth.write_raw_csv, synth.generate_dataset(sc)))
    ws.put(TRUTH, synth.ground_truth_json(sc))


def cmd_preprocess(cfg: PipelineConfig, ws: Workspace) -> None:
    text, source = raw_input_text(cfg, ws)
    records = parse_records(io.StringIO(text), strict=cfg.strict)
    raw_table = pivot_daily(records)
    coverage = preprocess.variable_coverage(raw_table)
    table, emptied = preprocess.preprocess(raw_table, cfg.prune)
    ws.put(WIDE, _csv(preprocess.write_wide_csv, table))
    ws.put(IMPUTED, _csv(lambda t, s: preprocess.write_wide_csv(t, s, "imputed"), table))
    ws.put(COUNTS, _csv(lambda t, s: preprocess.write_wide_csv(t, s, "count"), table))
    ws.put(PREP_SUMMARY, _dump({
        "source": source,
        "n_records": len(records),
        "variable_coverage": coverage,
        "retained_variables": table.variables,
        "dropped_variables": [v for v in raw_table.variables if v not in table.variables],
        "users_without_days": emptied,
        "days_per_user": {u: len(d) for u, d in table.days.items()},
    }))
    rows = [(u, d, cells[MOOD].mean) for u, per in table.days.items() for d, cells in per.items()]
    buf = io.StringIO()
    buf.write("user,date,mood\n")
    for u, d, m in rows:
        buf.write(f"{u},{d.isoformat()},{m!r}\n")
    ws.put("plots/daily_mood.csv", buf.getvalue())


def load_table(ws: Workspace) -> preprocess.UserDayTable:
    return preprocess.read_wide_csv(
        io.StringIO(ws.read(WIDE, "daily table (run `preprocess`)")),
        io.StringIO(ws.read(COUNTS, "daily counts (run `preprocess`)")),
    )


def cmd_train_svm(cfg: PipelineConfig, ws: Workspace) -> None:
    table = load_table(ws)
    run = pipeline.train_svm_stage(table, cfg.window, cfg.svm_split(), cfg.svm)
    doc = run.model.to_dict()
    doc["feature_names"] = run.feature_names
    ws.put(SVM_MODEL, _dump(doc))


def cmd_train_rnn(cfg: PipelineConfig, ws: Workspace) -> None:
    table = load_table(ws)
    rc = cfg.rnn_config()
    run = pipeline.train_rnn_stage(table, rc)
    for user, model in run.models.items():
        ws.put(f"models/rnn/{user}.json", model.to_json(rc) + "\n")
        ws.put(f"plots/traces/{user}.csv", _csv(evaluation.write_trace, run.traces[user]))
    ws.put(RNN_INDEX, _dump({
        "users": sorted(run.models),
        "skipped": run.skipped,
        "config": asdict(rc),
        "final_train_mse": {u: t[-1] for u, t in sorted(run.traces.items())},
    }))


def cmd_baseline(cfg: PipelineConfig, ws: Workspace) -> None:
    table = load_table(ws)
    run = pipeline.baseline_stage(table)
    rows = [(p.user_id, p.target_date, p.actual, p.predicted, "naive") for p in run.predictions]
    ws.put("plots/naive_predictions.csv", _csv(evaluation.write_prediction_series, rows))
    ws.put(BASELINE, _dump({"class_accuracy": run.accuracy, "rmse_all_days": run.rmse}))


def cmd_evaluate(cfg: PipelineConfig, ws: Workspace) -> None:
    table = load_table(ws)
    svm_doc = json.loads(ws.read(SVM_MODEL, "SVM model (run `train-svm`)"))
    index = json.loads(ws.read(RNN_INDEX, "RNN model index (run `train-rnn`)"))
    models = {
        u: RnnModel.from_dict(json.loads(ws.read(f"models/rnn/{u}.json", f"RNN model for {u}")))
        for u in index["users"]
    }
    rc = cfg.rnn_config()
    svm_run = pipeline.evaluate_svm(SvmModel.from_dict(svm_doc), table, cfg.window, cfg.svm_split())
    rows = pipeline.rnn_test_predictions(models, table, rc)
    try:
        bench = json.loads(ws.read(BASELINE, "baseline"))["class_accuracy"]
    except PipelineError:
        bench = None
    fingerprint = sha256(raw_input_text(cfg, ws)[0].encode("utf-8"))
    report = evaluation.build_report(
        train_matrix=svm_run.train_matrix,
        test_matrix=svm_run.test_matrix,
        benchmark_accuracy=bench,
        rnn_rmse=pipeline.rmse_by_user(rows, "rnn"),
        naive_rmse=pipeline.rmse_by_user(rows, "naive"),
        provenance={
            "seeds": cfg.seeds,
            "config": cfg.to_dict(),
            "input_sha256": fingerprint,
            "svm_features": svm_doc.get("feature_names", []),
            "svm_examples": {"train": len(svm_run.train), "test": len(svm_run.test)},
            "rnn_skipped_users": index.get("skipped", {}),
        },
    )
    ws.put("reports/report.json", report.to_json())
    ws.put("reports/report.txt", report.to_text())
    ws.put("plots/predictions.csv", _csv(
        evaluation.write_prediction_series,
        [(r.user_id, r.target_date, r.actual, r.predicted, r.model) for r in rows],
    ))
    svm_rows = [(e.user_id, e.target_date, e.target_class, p, "svm")
                for e, p in zip(svm_run.test, svm_run.test_pred)]
    ws.put("plots/svm_test_predictions.csv", _csv(evaluation.write_prediction_series, svm_rows))


HANDLERS = {
    "synth": cmd_synth,
    "preprocess": cmd_preprocess,
    "train-svm": cmd_train_svm,
    "train-rnn": cmd_train_rnn,
    "baseline": cmd_baseline,
    "evaluate": cmd_evaluate,
}


def run(command: str, cfg: PipelineConfig) -> dict[str, str]:
    """Run one command (``all`` chains them); returns written files and their hashes."""
    ws = Workspace(Path(cfg.out))
    if command == "all":
        steps = ["preprocess", "train-svm", "train-rnn", "baseline", "evaluate"]
        if cfg.input is None:
            steps.insert(0, "synth")
    else:
        steps = [command]
    for step in steps:
        logger.info("running %s", step)
        HANDLERS[step](cfg, ws)
    source = ws.pending.get(RAW) if cfg.input is None else None
    if source is None:
        try:
            source = raw_input_text(cfg, ws)[0]
        except PipelineError:
            source = ""
    outputs = ws.commit()
    manifest = {
        "command": command,
        "steps": steps,
        "config": cfg.to_dict(),
        "seeds": cfg.seeds,
        "input_sha256": sha256(source.encode("utf-8")) if source else None,
        "versions": {
            "moodcast": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "outputs": outputs,
    }
    ws.put("manifest.json", _dump(manifest))
    ws.commit()
    return outputs


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="moodcast", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, help="pipeline config JSON")
    parser.add_argument("--input", help="raw long-format CSV (default: synthesized data)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="global seed")
    parser.add_argument("--epochs", type=int, help="RNN epochs per user")
    parser.add_argument("--users", type=int, help="number of synthetic users")
    parser.add_argument("--lenient", action="store_true", help="skip malformed input rows")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    if args.config is not None:
        try:
            cfg = PipelineConfig.from_dict(json.loads(args.config.read_text(encoding="utf-8")))
        except (OSError, ValueError, TypeError) as exc:
            raise PipelineError(f"cannot load config {args.config}: {exc}") from exc
    else:
        cfg = PipelineConfig()
    if args.input is not None:
        cfg.input = args.input
    if args.out is not None:
        cfg.out = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    if args.epochs is not None:
        cfg.rnn = replace(cfg.rnn, epochs=args.epochs)
    if args.users is not None:
        cfg.synth = replace(cfg.synth, n_users=args.users)
    if args.lenient:
        cfg.strict = False
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        outputs = run(args.command, cfg)
    except (PipelineError, ParseError, ValueError, KeyError, RuntimeError) as exc:
        print(f"moodcast {args.command}: error: {exc}", file=sys.stderr)
        return 1
    print(f"moodcast {args.command}: wrote {len(outputs) + 1} file(s) to {cfg.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
