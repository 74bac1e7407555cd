"""Command-line entry point: the full pipeline as batch subcommands.

Every run resolves an experiment spec (flags override config-file values
which override defaults), prints it with the seed for reproducibility,
and never prompts.  Exit codes: 0 success, 1 runtime failure, 2 usage or
validation error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from baitscore import baseline as baseline_mod
from baitscore import cues as cues_mod
from baitscore import media as media_mod
from baitscore import model as model_mod
from baitscore import text as text_mod
from baitscore.data import (
    JUDGMENT_SCALE,
    JUDGMENT_SCALE_THIRDS,
    IngestError,
    class_ratio,
    load_dataset,
    parse_truth,
    serialize_instances,
    serialize_truth,
)
from baitscore.metrics import MetricsError, full_report

log = logging.getLogger(__name__)

DEFAULT_SEED = 7

_DOMAIN_ERRORS = (
    IngestError,
    MetricsError,
    model_mod.ModelError,
    baseline_mod.BaselineError,
    media_mod.MediaError,
    cues_mod.LexiconError,
    ValueError,
)


class UsageError(ValueError):
    """Validation failure that should exit 2, like a bad flag value."""


# ---------------------------------------------------------------------------
# argparse plumbing


def _positive_int(value: str) -> int:
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {value!r}")
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {n}")
    return n


def _nonneg_float(value: str) -> float:
    try:
        x = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {value!r}")
    if x < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {x}")
    return x


def _fraction(value: str) -> float:
    x = _nonneg_float(value)
    if x >= 1.0:
        raise argparse.ArgumentTypeError(f"expected a fraction in [0, 1), got {x}")
    return x


def _unit_interval(value: str) -> float:
    x = _nonneg_float(value)
    if x > 1.0:
        raise argparse.ArgumentTypeError(f"expected a value in [0, 1], got {x}")
    return x


def read_config(path: str | Path) -> dict[str, str]:
    """Flat key=value config file; '#' starts a comment; keys use either
    dashes or underscores."""
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}: line {lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if not key:
                raise UsageError(f"{path}: line {lineno}: empty key")
            if key in values:
                raise UsageError(f"{path}: line {lineno}: duplicate key {key!r}")
            values[key] = value.strip()
    return values


class Spec:
    """Resolved experiment parameters: flags > config file > defaults."""

    def __init__(self, args: argparse.Namespace):
        self.command = args.command
        config_path = getattr(args, "config", None)
        self.file_values = read_config(config_path) if config_path else {}
        self.resolved: dict = {"command": args.command}
        self._args = args
        self.seed = self.resolve("seed", int, DEFAULT_SEED)
        self.quiet = bool(
            getattr(args, "quiet", False) or self._from_file("quiet", _parse_bool, False)
        )

    def _from_file(self, key: str, cast, default):
        if key in self.file_values:
            raw = self.file_values[key]
            try:
                return cast(raw)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"config key {key!r}: {exc}") from exc
        return default

    def resolve(self, key: str, cast, default):
        """Flag value if given, else config-file value, else default."""
        cli_value = getattr(self._args, key, None)
        if cli_value is not None:
            value = cli_value
        else:
            value = self._from_file(key, cast, default)
        self.resolved[key] = value
        return value

    def banner(self) -> str:
        body = {k: _jsonable(v) for k, v in self.resolved.items()}
        return f"spec: {json.dumps(body, sort_keys=True)}\nseed: {self.seed}"


def _jsonable(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, tuple):
        return list(value)
    return value


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {value!r}")


def _scale_for(name: str) -> tuple[float, ...]:
    if name == "standard":
        return JUDGMENT_SCALE
    if name == "thirds":
        return JUDGMENT_SCALE_THIRDS
    raise UsageError(f"unknown judgment scale {name!r} (use 'standard' or 'thirds')")


def _parse_vectors(value: str) -> tuple[str, ...]:
    """Comma list of vector inputs; 'cues' covers both cue blocks and
    'image' is shorthand for image_vector."""
    names: list[str] = []
    for raw in value.split(","):
        item = raw.strip().replace("-", "_")
        if not item:
            continue
        if item == "cues":
            names.extend(["cues_tweet", "cues_article"])
        elif item in ("image", "images"):
            names.append("image_vector")
        elif item in model_mod.VECTOR_INPUTS:
            names.append(item)
        else:
            raise argparse.ArgumentTypeError(
                f"unknown vector input {item!r}; expected cues, image, or one of "
                f"{', '.join(model_mod.VECTOR_INPUTS)}"
            )
    seen = []
    for name in names:
        if name not in seen:
            seen.append(name)
    return tuple(seen)


def build_parser() -> argparse.ArgumentParser:
    # SUPPRESS keeps a subparser from clobbering values parsed before the
    # subcommand, so --seed/--config/--quiet work in either position
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="run seed (default 7)")
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="flat key=value config file")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS,
                        help="suppress the run-spec banner and progress logging")

    parser = argparse.ArgumentParser(
        prog="baitscore",
        description="Score social-media posts for clickbait and reproduce the "
                    "fusion-model experiments.",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common],
                       help="load and check a corpus, report statistics")
    p.add_argument("--instances", default=None, help="instances JSONL path")
    p.add_argument("--truth", default=None, help="truth JSONL path")
    p.add_argument("--name", default=None, help="dataset display name")
    p.add_argument("--judgment-scale", dest="judgment_scale",
                   choices=("standard", "thirds"), default=None)
    p.add_argument("--out-instances", dest="out_instances", default=None,
                   help="write a normalized instances copy")
    p.add_argument("--out-truth", dest="out_truth", default=None,
                   help="write a normalized truth copy")

    p = sub.add_parser("train", parents=[common], help="train a fusion model")
    p.add_argument("--instances", default=None)
    p.add_argument("--truth", default=None)
    p.add_argument("--arch", choices=(model_mod.CNN, model_mod.LSTM), default=None)
    p.add_argument("--text", dest="text", default=None,
                   choices=tuple(s.value for s in text_mod.DocumentSource),
                   help="document source for the sequence branch")
    p.add_argument("--vectors", type=_parse_vectors, default=None,
                   help="comma list: cues, image, or explicit block names")
    p.add_argument("--epochs", type=_positive_int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=_positive_int, default=None)
    p.add_argument("--seq-length", dest="seq_length", type=_positive_int, default=None)
    p.add_argument("--vocab-size", dest="vocab_size", type=_positive_int, default=None)
    p.add_argument("--embed-dim", dest="embed_dim", type=_positive_int, default=None)
    p.add_argument("--lstm-units", dest="lstm_units", type=_positive_int, default=None)
    p.add_argument("--dense-units", dest="dense_units", type=_positive_int, default=None)
    p.add_argument("--fusion-units", dest="fusion_units", type=_positive_int, default=None)
    p.add_argument("--learning-rate", dest="learning_rate", type=_nonneg_float, default=None)
    p.add_argument("--val-fraction", dest="val_fraction", type=_fraction, default=None)
    p.add_argument("--embeddings", default=None, help="pretrained embedding text file")
    p.add_argument("--image-vectors", dest="image_vectors", default=None)
    p.add_argument("--lexicons", default=None, help="cue lexicon directory")
    p.add_argument("--missing-image", dest="missing_image",
                   choices=("zeros", "error"), default=None)
    p.add_argument("--judgment-scale", dest="judgment_scale",
                   choices=("standard", "thirds"), default=None)
    p.add_argument("--out", default=None, help="model path prefix")

    p = sub.add_parser("predict", parents=[common], help="score posts with a model")
    p.add_argument("--model", default=None, help="model path prefix from train")
    p.add_argument("--instances", default=None)
    p.add_argument("--lexicons", default=None)
    p.add_argument("--image-vectors", dest="image_vectors", default=None)
    p.add_argument("--out", default=None, help="prediction JSONL path")

    p = sub.add_parser("selftrain", parents=[common],
                       help="pseudo-label an unlabelled corpus and merge")
    p.add_argument("--model", default=None)
    p.add_argument("--unlabelled", default=None, help="unlabelled instances JSONL")
    p.add_argument("--labelled-instances", dest="labelled_instances", default=None)
    p.add_argument("--labelled-truth", dest="labelled_truth", default=None)
    p.add_argument("--lexicons", default=None)
    p.add_argument("--image-vectors", dest="image_vectors", default=None)
    p.add_argument("--judgment-scale", dest="judgment_scale",
                   choices=("standard", "thirds"), default=None)
    p.add_argument("--out-instances", dest="out_instances", default=None)
    p.add_argument("--out-truth", dest="out_truth", default=None)
    p.add_argument("--report", default=None, help="write the JSON report here")

    p = sub.add_parser("evaluate", parents=[common],
                       help="score a prediction file against truth")
    p.add_argument("--pred", default=None, help="prediction JSONL path")
    p.add_argument("--truth", default=None, help="truth JSONL path")
    p.add_argument("--threshold", type=_unit_interval, default=None)
    p.add_argument("--judgment-scale", dest="judgment_scale",
                   choices=("standard", "thirds"), default=None)

    p = sub.add_parser("baseline", parents=[common],
                       help="fit or apply the boosted-stump baseline")
    p.add_argument("--instances", default=None, help="training instances JSONL")
    p.add_argument("--truth", default=None, help="training truth JSONL")
    p.add_argument("--model", default=None, help="skip fitting, load this model JSON")
    p.add_argument("--text", dest="text", default=None,
                   choices=tuple(s.value for s in text_mod.DocumentSource))
    p.add_argument("--cues", action="store_true", default=None,
                   help="append cue columns for tweet and article")
    p.add_argument("--estimators", type=_positive_int, default=None)
    p.add_argument("--lexicons", default=None)
    p.add_argument("--judgment-scale", dest="judgment_scale",
                   choices=("standard", "thirds"), default=None)
    p.add_argument("--out", default=None, help="write the fitted model JSON here")
    p.add_argument("--test-instances", dest="test_instances", default=None)
    p.add_argument("--test-truth", dest="test_truth", default=None)
    p.add_argument("--pred-out", dest="pred_out", default=None,
                   help="write test-set predictions JSONL here")

    p = sub.add_parser("analyze-media", parents=[common],
                       help="object-category proportion tables and figures")
    p.add_argument("--tags", default=None, help="object-tag JSONL path")
    p.add_argument("--vectors", default=None, help="image-vector JSONL to validate")
    p.add_argument("--truth", default=None, help="truth JSONL for classes and scores")
    p.add_argument("--pred", default=None, help="prediction JSONL for scores")
    p.add_argument("--category-map", dest="category_map", default=None)
    p.add_argument("--bins", type=_positive_int, default=None)
    p.add_argument("--min-confidence", dest="min_confidence", type=_unit_interval,
                   default=None)
    p.add_argument("--judgment-scale", dest="judgment_scale",
                   choices=("standard", "thirds"), default=None)
    p.add_argument("--out-dir", dest="out_dir", default=None)
    p.add_argument("--validate-only", dest="validate_only", action="store_true",
                   default=None, help="only load and validate the input files")

    return parser


# ---------------------------------------------------------------------------
# shared helpers


def _require(spec: Spec, key: str, help_name: str) -> str:
    value = spec.resolve(key, str, None)
    if value is None:
        raise UsageError(f"missing required {help_name} (flag --{key.replace('_', '-')})")
    return value


def _load_lexicons(path: str | None) -> cues_mod.CueLexicons:
    if path:
        return cues_mod.load_lexicons(path)
    return cues_mod.load_default_lexicons()


def _load_labelled(spec: Spec, instances_key: str, truth_key: str):
    instances = _require(spec, instances_key, "instances path")
    truth = _require(spec, truth_key, "truth path")
    scale = _scale_for(spec.resolve("judgment_scale", str, "standard"))
    return load_dataset(instances, truth, scale=scale)


def _emit(spec: Spec, text: str) -> None:
    if not spec.quiet:
        print(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_ingest(spec: Spec) -> int:
    instances = _require(spec, "instances", "instances path")
    truth = spec.resolve("truth", str, None)
    name = spec.resolve("name", str, None) or instances
    scale = _scale_for(spec.resolve("judgment_scale", str, "standard"))
    out_instances = spec.resolve("out_instances", str, None)
    out_truth = spec.resolve("out_truth", str, None)
    _emit(spec, spec.banner())

    dataset = load_dataset(instances, truth, name=name, scale=scale)
    print(f"name: {dataset.name}")
    print(f"posts: {len(dataset)}")
    if dataset.truths is not None:
        ratio = class_ratio(dataset)
        print(f"clickbait: {ratio.n_clickbait}")
        print(f"no-clickbait: {ratio.n_not}")
        print(f"ratio: {ratio.display()}")
    else:
        print("labelled: no")
    if out_instances:
        with open(out_instances, "w", encoding="utf-8") as f:
            for line in serialize_instances(dataset):
                f.write(line + "\n")
        log.info("wrote %s", out_instances)
    if out_truth:
        if dataset.truths is None:
            raise UsageError("--out-truth needs a labelled dataset")
        with open(out_truth, "w", encoding="utf-8") as f:
            for line in serialize_truth(dataset.truth_for(p) for p in dataset.posts):
                f.write(line + "\n")
        log.info("wrote %s", out_truth)
    return 0


def _build_train_config(spec: Spec) -> model_mod.ModelConfig:
    vectors = spec.resolve("vectors", _parse_vectors, ())
    defaults = model_mod.ModelConfig()
    try:
        return model_mod.ModelConfig(
            branch=spec.resolve("arch", str, defaults.branch),
            text_source=text_mod.DocumentSource.parse(
                spec.resolve("text", str, defaults.text_source.value)
            ),
            vector_inputs=tuple(vectors),
            seq_length=spec.resolve("seq_length", _positive_int, defaults.seq_length),
            vocab_size=spec.resolve("vocab_size", _positive_int, defaults.vocab_size),
            embed_dim=spec.resolve("embed_dim", _positive_int, defaults.embed_dim),
            lstm_units=spec.resolve("lstm_units", _positive_int, defaults.lstm_units),
            dense_units=spec.resolve("dense_units", _positive_int, defaults.dense_units),
            fusion_units=spec.resolve("fusion_units", _positive_int, defaults.fusion_units),
            epochs=spec.resolve("epochs", _positive_int, defaults.epochs),
            batch_size=spec.resolve("batch_size", _positive_int, defaults.batch_size),
            learning_rate=spec.resolve("learning_rate", float, defaults.learning_rate),
            val_fraction=spec.resolve("val_fraction", _fraction, defaults.val_fraction),
            missing_image=spec.resolve("missing_image", str, defaults.missing_image),
            seed=spec.seed,
        )
    except model_mod.ModelError as exc:
        raise UsageError(str(exc)) from exc


def cmd_train(spec: Spec) -> int:
    config = _build_train_config(spec)
    out_prefix = _require(spec, "out", "output model prefix")
    embeddings_path = spec.resolve("embeddings", str, None)
    image_vectors_path = spec.resolve("image_vectors", str, None)
    lexicon_dir = spec.resolve("lexicons", str, None)
    dataset = _load_labelled(spec, "instances", "truth")
    _emit(spec, spec.banner())

    vocab = model_mod.fit_vocabulary_for(config, [dataset])
    coverage = None
    matrix = None
    if embeddings_path:
        matrix, coverage = model_mod.load_pretrained_embeddings(
            embeddings_path, vocab, embed_dim=config.embed_dim, seed=config.seed,
            vocab_size=config.vocab_size,
        )
        _emit(spec, f"embedding coverage: {coverage:.4f}")

    lexicons = None
    if {"cues_tweet", "cues_article"} & set(config.vector_inputs):
        lexicons = _load_lexicons(lexicon_dir)
    image_store = None
    if "image_vector" in config.vector_inputs:
        if not image_vectors_path:
            raise UsageError("image_vector input needs --image-vectors")
        image_store = media_mod.load_image_vectors(image_vectors_path)

    pipeline = model_mod.FeaturePipeline(
        config=config, vocab=vocab, lexicons=lexicons, image_store=image_store
    )
    network = model_mod.build(config, matrix)
    trained = model_mod.train(network, dataset, pipeline, log_every=1)
    trained.embedding_coverage = coverage
    model_mod.save_model(trained, out_prefix)
    for entry in trained.history:
        val = f"  val_mse={entry.val_mse:.6f}" if entry.val_mse is not None else ""
        print(f"epoch {entry.epoch}: train_mse={entry.train_mse:.6f}{val}")
    print(f"model: {out_prefix}")
    return 0


def _load_trained(spec: Spec) -> model_mod.TrainedModel:
    prefix = _require(spec, "model", "model prefix")
    lexicon_dir = spec.resolve("lexicons", str, None)
    image_vectors_path = spec.resolve("image_vectors", str, None)
    with open(Path(prefix).with_suffix(".json"), encoding="utf-8") as f:
        config = model_mod.ModelConfig.from_json_obj(json.load(f)["config"])
    lexicons = None
    if {"cues_tweet", "cues_article"} & set(config.vector_inputs):
        lexicons = _load_lexicons(lexicon_dir)
    image_store = None
    if "image_vector" in config.vector_inputs:
        if not image_vectors_path:
            raise UsageError("this model needs --image-vectors")
        image_store = media_mod.load_image_vectors(image_vectors_path)
    return model_mod.load_model(prefix, lexicons=lexicons, image_store=image_store)


def cmd_predict(spec: Spec) -> int:
    out_path = _require(spec, "out", "output path")
    instances = _require(spec, "instances", "instances path")
    trained = _load_trained(spec)
    _emit(spec, spec.banner())
    dataset = load_dataset(instances)
    predictions = model_mod.predict(trained, dataset)
    model_mod.write_predictions(predictions, out_path)
    print(f"predictions: {out_path} ({len(predictions)} posts)")
    return 0


def cmd_selftrain(spec: Spec) -> int:
    unlabelled_path = _require(spec, "unlabelled", "unlabelled instances path")
    labelled_instances = spec.resolve("labelled_instances", str, None)
    labelled_truth = spec.resolve("labelled_truth", str, None)
    out_instances = spec.resolve("out_instances", str, None)
    out_truth = spec.resolve("out_truth", str, None)
    report_path = spec.resolve("report", str, None)
    trained = _load_trained(spec)
    _emit(spec, spec.banner())

    unlabelled = load_dataset(unlabelled_path, name="unlabelled")
    noisy = model_mod.pseudo_label(trained, unlabelled)
    noisy_ratio = class_ratio(noisy)
    report: dict = {
        "unlabelled_posts": len(noisy),
        "noisy_ratio": noisy_ratio.display(),
    }

    merged = noisy
    if labelled_instances or labelled_truth:
        if not (labelled_instances and labelled_truth):
            raise UsageError("--labelled-instances and --labelled-truth go together")
        scale = _scale_for(spec.resolve("judgment_scale", str, "standard"))
        labelled = load_dataset(labelled_instances, labelled_truth,
                                name="labelled", scale=scale)
        merged = model_mod.merge_noisy(labelled, noisy)
        report = model_mod.merge_report(labelled, noisy, merged)

    if out_instances:
        with open(out_instances, "w", encoding="utf-8") as f:
            for line in serialize_instances(merged):
                f.write(line + "\n")
    if out_truth:
        with open(out_truth, "w", encoding="utf-8") as f:
            for line in serialize_truth(merged.truth_for(p) for p in merged.posts):
                f.write(line + "\n")
    for key, value in report.items():
        print(f"{key}: {value}")
    if report_path:
        with open(report_path, "w", encoding="utf-8") as f:
            json.dump(report, f, indent=2)
            f.write("\n")
    return 0


def cmd_evaluate(spec: Spec) -> int:
    pred_path = _require(spec, "pred", "prediction path")
    truth_path = _require(spec, "truth", "truth path")
    threshold = spec.resolve("threshold", _unit_interval, 0.5)
    scale = _scale_for(spec.resolve("judgment_scale", str, "standard"))
    _emit(spec, spec.banner())

    predictions = model_mod.read_predictions(pred_path)
    with open(truth_path, encoding="utf-8") as f:
        truths = parse_truth(f, scale=scale)
    missing = [p.id for p in predictions if p.id not in truths]
    if missing:
        raise IngestError(
            f"{len(missing)} predictions lack truth (first: {missing[0]!r})"
        )
    extra = set(truths) - {p.id for p in predictions}
    if extra:
        raise IngestError(
            f"{len(extra)} truth records lack predictions (first: {sorted(extra)[0]!r})"
        )
    pred_scores = [p.clickbait_score for p in predictions]
    truth_means = [truths[p.id].truth_mean for p in predictions]
    report = full_report(pred_scores, truth_means, threshold=threshold)
    print(json.dumps(report.to_json_obj(), sort_keys=True))
    if not spec.quiet:
        print(report.table())
    return 0


def cmd_baseline(spec: Spec) -> int:
    model_path = spec.resolve("model", str, None)
    lexicon_dir = spec.resolve("lexicons", str, None)
    out_path = spec.resolve("out", str, None)
    test_instances = spec.resolve("test_instances", str, None)
    test_truth = spec.resolve("test_truth", str, None)
    pred_out = spec.resolve("pred_out", str, None)
    use_cues = bool(spec.resolve("cues", _parse_bool, False))
    estimators = spec.resolve("estimators", _positive_int, baseline_mod.DEFAULT_ESTIMATORS)
    text_source = text_mod.DocumentSource.parse(spec.resolve("text", str, "tweet"))
    scale = _scale_for(spec.resolve("judgment_scale", str, "standard"))
    _emit(spec, spec.banner())

    if model_path:
        model = baseline_mod.load_baseline(model_path)
    else:
        train_set = _load_labelled(spec, "instances", "truth")
        lexicons = _load_lexicons(lexicon_dir) if use_cues else None
        model = baseline_mod.fit_baseline(
            train_set,
            text_source=text_source,
            use_cues=use_cues,
            lexicons=lexicons,
            n_estimators=estimators,
            seed=spec.seed,
        )
        print(f"stumps: {len(model.ensemble.stumps)}")
    if out_path:
        baseline_mod.save_baseline(model, out_path)
        print(f"model: {out_path}")

    if test_instances:
        lexicons = _load_lexicons(lexicon_dir) if model.use_cues else None
        test_set = load_dataset(test_instances, test_truth, name="test", scale=scale)
        scores = baseline_mod.predict_baseline(model, test_set, lexicons)
        if pred_out:
            preds = [
                model_mod.Prediction(id=post.id, clickbait_score=float(s))
                for post, s in zip(test_set.posts, scores)
            ]
            model_mod.write_predictions(preds, pred_out)
            print(f"predictions: {pred_out}")
        if test_set.truths is not None:
            truth_means = [test_set.truth_for(p).truth_mean for p in test_set.posts]
            report = full_report(list(scores), truth_means)
            print(json.dumps(report.to_json_obj(), sort_keys=True))
            if not spec.quiet:
                print(report.table())
    return 0


def cmd_analyze_media(spec: Spec) -> int:
    tags_path = spec.resolve("tags", str, None)
    vectors_path = spec.resolve("vectors", str, None)
    truth_path = spec.resolve("truth", str, None)
    pred_path = spec.resolve("pred", str, None)
    cmap_path = spec.resolve("category_map", str, None)
    bins = spec.resolve("bins", _positive_int, 10)
    min_confidence = spec.resolve("min_confidence", _unit_interval,
                                  media_mod.DEFAULT_MIN_CONFIDENCE)
    out_dir = spec.resolve("out_dir", str, None)
    validate_only = bool(spec.resolve("validate_only", _parse_bool, False))
    scale = _scale_for(spec.resolve("judgment_scale", str, "standard"))
    _emit(spec, spec.banner())

    if not tags_path and not vectors_path:
        raise UsageError("nothing to do: pass --tags and/or --vectors")

    if vectors_path:
        store = media_mod.load_image_vectors(vectors_path)
        print(f"image vectors: {len(store)} ({store.dim}-dim)")

    if not tags_path:
        return 0
    cmap = media_mod.load_category_map(cmap_path)
    tags = media_mod.load_object_tags(tags_path)
    n_detections = sum(len(t.detections) for t in tags)
    print(f"object tags: {len(tags)} images, {n_detections} detections")
    if validate_only:
        print("validation: ok")
        return 0

    if not truth_path and not pred_path:
        raise UsageError("proportions need --truth or --pred for classes/scores")
    if out_dir is None:
        raise UsageError("--out-dir is required to write tables and figures")

    scores: dict[str, float] = {}
    if pred_path:
        for pred in model_mod.read_predictions(pred_path):
            scores[pred.id] = pred.clickbait_score
    else:
        with open(truth_path, encoding="utf-8") as f:
            for truth in parse_truth(f, scale=scale).values():
                scores[truth.id] = truth.truth_mean
    classes = {
        post_id: ("clickbait" if s >= 0.5 else "no-clickbait")
        for post_id, s in scores.items()
    }

    usable = [t for t in tags if t.id in scores]
    skipped = len(tags) - len(usable)
    if skipped:
        log.warning("%d tag records have no score/class and are skipped", skipped)
    if not usable:
        raise media_mod.MediaError("no tag records matched the provided ids")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = media_mod.category_proportions(usable, classes, cmap, min_confidence)
    (out / "proportions.csv").write_text(media_mod.proportions_csv(rows),
                                         encoding="utf-8")
    trend = media_mod.proportion_trend(usable, scores, cmap, bins, min_confidence)
    (out / "trend.csv").write_text(media_mod.trend_csv(trend), encoding="utf-8")

    from baitscore import plots

    plots.plot_proportions(rows, out / "proportions.png")
    plots.plot_trend(trend, out / "trend.png")
    for name in ("proportions.csv", "proportions.png", "trend.csv", "trend.png"):
        print(f"wrote: {out / name}")
    if trend.empty_bins:
        centers = ", ".join(f"{c:.3g}" for c in trend.empty_bins)
        print(f"empty bins omitted: {centers}")
    return 0


# ---------------------------------------------------------------------------
# entry point


_COMMANDS = {
    "ingest": cmd_ingest,
    "train": cmd_train,
    "predict": cmd_predict,
    "selftrain": cmd_selftrain,
    "evaluate": cmd_evaluate,
    "baseline": cmd_baseline,
    "analyze-media": cmd_analyze_media,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if getattr(args, "quiet", False) else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        spec = Spec(args)
        return _COMMANDS[args.command](spec)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
