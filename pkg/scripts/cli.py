"""Command-line interface for language models, decoding, scansion and evaluation.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

import sys
from pathlib import Path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

import argparse
import json
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from config.run_config import RunConfig
from config.settings import settings, validate_settings
from models.ctc.decoder import decode
from models.ctc.emission import read_emission, write_emission
from models.lm.arpa import read_arpa, write_arpa
from models.lm.ngram import BOS, perplexity, train
from models.meter.labels import CANONICAL_ORDER
from models.meter.scansion import classify_scansion
from models.ml.meter_head import LinearHead, head_forward, head_train, pool_features
from utils.errors import ConfigError, DataError, EmptyDataset
from utils.evaluation import (
    attribute_errors,
    compare_configurations,
    evaluate,
    format_report,
    plot_confusion_matrix,
    write_report,
)
from utils.logger import get_logger, log_exception
from utils.manifest import (
    ManifestEntry,
    derive_seed,
    load_manifest,
    manifest_statistics,
    split_stratified,
    write_manifest,
)
from utils.pipeline import entry_emission
from utils.synthesis import build_alphabet, synth_emission, synthesize_verses
from utils.textkit import Verse

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _read_lines(path: str) -> List[str]:
    with open(path, encoding="utf-8") as handle:
        return [line.strip() for line in handle if line.strip()]


def _dumps(data) -> str:
    return json.dumps(data, ensure_ascii=False, indent=2, sort_keys=True)


def _emit(args: argparse.Namespace, data) -> None:
    """Print a command result as JSON, and write it to --report when given."""
    text = _dumps(data)
    print(text)
    if getattr(args, "report", None):
        Path(args.report).write_text(text + "\n", encoding="utf-8")


def _run_config(args: argparse.Namespace) -> RunConfig:
    """Configuration file first, then explicit command-line overrides."""
    config = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    overrides: Dict[str, object] = {}
    for name in ("decoder", "beam_width", "seed", "lm_path", "head_path", "classifier",
                 "noise", "frames_per_char", "blank_prob", "n_best", "prose_threshold",
                 "diacritic_threshold", "alpha", "beta", "n_jobs"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "lm_path", None):
        overrides["use_lm"] = True
    if getattr(args, "exact", False):
        overrides["token_prune"] = None
        overrides["prune_margin"] = None
    if getattr(args, "ablation", False):
        overrides["ablation"] = True
    if overrides:
        config = config.replace(**overrides)
    return config.validate()


# ---- language model -------------------------------------------------------

def cmd_lm_train(args: argparse.Namespace) -> int:
    corpus = _read_lines(args.corpus)
    model = train(corpus, order=args.order, min_count=args.min_count)
    write_arpa(model, args.output)
    _emit(args, {"order": model.order, "ngrams": model.counts(), "vocabulary": model.vocabulary_size})
    return EXIT_OK


def cmd_lm_query(args: argparse.Namespace) -> int:
    model = read_arpa(args.lm)
    if args.word is not None:
        history = [BOS] + (args.history.split() if args.history else [])
        _emit(args, {"log10_prob": model.score(history, args.word)})
    else:
        _emit(args, {"perplexity": perplexity(model, args.text)})
    return EXIT_OK


# ---- decoding and scansion -------------------------------------------------

def cmd_decode(args: argparse.Namespace) -> int:
    config = args.run_config
    emission = read_emission(args.emission)
    lm = read_arpa(config.lm_path) if config.use_lm else None
    result = decode(emission, config, lm)
    _emit(args, {"text": result.text, "log_score": result.log_score, "n_best": result.n_best})
    return EXIT_OK


def cmd_scan(args: argparse.Namespace) -> int:
    config = args.run_config
    texts = [args.text] if args.text else _read_lines(args.file)
    results = []
    for text in texts:
        result = classify_scansion(Verse.from_text(text), config.prose_threshold, config.diacritic_threshold)
        results.append({
            "verse": text,
            "meter": result.label.value,
            "distance": round(result.distance, 4),
            "patterns": result.patterns,
            "nearest": [
                {"meter": match.meter.value, "distance": round(match.distance, 4), "variants": match.variants}
                for match in result.nearest
            ],
        })
    _emit(args, results if len(results) > 1 else results[0])
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    config = args.run_config
    if args.transcript:
        emission = synth_emission(args.transcript, frames_per_char=config.frames_per_char,
                                  noise=config.noise, blank_prob=config.blank_prob, seed=config.seed)
        write_emission(emission, args.output)
        _emit(args, {"frames": emission.frames, "alphabet": list(emission.alphabet)})
        return EXIT_OK

    # Synthetic benchmark: verses per meter, their emissions and a manifest
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    verses = synthesize_verses(args.per_meter, config.seed)
    alphabet = build_alphabet([text for text, _ in verses])
    entries = []
    for number, (text, meter) in enumerate(verses):
        entry_id = f"{meter.value.lower()}-{number:04d}"
        emission = synth_emission(text, alphabet, config.frames_per_char, config.noise, config.blank_prob,
                                  seed=derive_seed(config.seed, "synth", entry_id))
        write_emission(emission, out_dir / f"{entry_id}.ctce")
        entries.append(ManifestEntry(entry_id, f"{entry_id}.ctce", text, meter))
    write_manifest(entries, out_dir / "manifest.jsonl")
    _emit(args, {"verses": len(entries), "manifest": str(out_dir / "manifest.jsonl")})
    return EXIT_OK


# ---- manifests ---------------------------------------------------------------

def cmd_split(args: argparse.Namespace) -> int:
    entries = split_stratified(load_manifest(args.manifest), args.test_fraction, args.run_config.seed)
    write_manifest(entries, args.output)
    _emit(args, manifest_statistics(entries)["per_split"])
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    stats = manifest_statistics(load_manifest(args.manifest))
    print(pd.Series(stats["per_meter"], name="verses").to_string())
    print()
    _emit(args, {key: value for key, value in stats.items() if key != "per_meter"})
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = args.run_config
    entries = load_manifest(args.manifest)
    if args.split:
        entries = [entry for entry in entries if entry.split == args.split]
    report = evaluate(entries, config)
    print(format_report(report))
    if args.report:
        write_report(report, args.report)
    if args.figure and report.classification is not None:
        plot_confusion_matrix(report, args.figure)
    if args.attribute and not config.ablation and config.classifier == "scansion":
        ground_truth = evaluate(entries, config.replace(ablation=True))
        print(_dumps(attribute_errors(report, ground_truth)))
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    entries = load_manifest(args.manifest)
    configs = {}
    for item in args.configs:
        name, _, path = item.partition("=")
        if not path:
            raise UsageError(f"expected NAME=PATH, got {item!r}")
        configs[name] = RunConfig.load(path).validate()
    table = compare_configurations(entries, configs)
    print(table.to_string(float_format=lambda v: f"{v:.2f}"))
    if args.report:
        table.to_json(args.report, orient="index", force_ascii=False, indent=2)
    return EXIT_OK


# ---- end-to-end head ---------------------------------------------------------

def _head_dataset(entries: Sequence[ManifestEntry], config: RunConfig, alphabet):
    features, labels = [], []
    for entry in entries:
        if entry.meter is None:
            continue
        emission = entry_emission(entry, config, alphabet)
        if emission is None:
            continue
        features.append(pool_features(emission))
        labels.append(entry.meter)
    return np.array(features), labels


def cmd_head_train(args: argparse.Namespace) -> int:
    config = args.run_config
    entries = load_manifest(args.manifest)
    train_entries = [entry for entry in entries if entry.split in (None, "train")]
    alphabet = None
    if any(not entry.emission_path for entry in entries):
        alphabet = build_alphabet([entry.transcript for entry in entries if entry.transcript])
    X, y = _head_dataset(train_entries, config, alphabet)
    if len(X) == 0:
        raise EmptyDataset("no labeled entries with emissions to train on")
    head, losses = head_train(list(zip(X, y)), epochs=args.epochs,
                              learning_rate=args.learning_rate, seed=config.seed)
    if alphabet is not None:
        head.feature_names = list(alphabet)
    else:
        head.feature_names = list(read_emission(train_entries[0].emission_path).alphabet)
    path = head.save(Path(args.output) if args.output else None)
    _emit(args, {"head": str(path), "final_loss": losses[-1] if losses else None,
           "train": head.metadata["metrics"]["train"]})
    return EXIT_OK


def cmd_head_classify(args: argparse.Namespace) -> int:
    head = LinearHead(1)
    head.load(Path(args.head))
    emission = read_emission(args.emission)
    probabilities = head_forward(head, pool_features(emission))
    best = int(np.argmax(probabilities))
    _emit(args, {
        "meter": CANONICAL_ORDER[best].value,
        "probabilities": {label.value: round(float(p), 6) for label, p in zip(CANONICAL_ORDER, probabilities)},
        "model": head.get_model_info(),
    })
    return EXIT_OK


# ---- parser ------------------------------------------------------------------

def _common_flags() -> argparse.ArgumentParser:
    """Flags every subcommand accepts."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="Master seed, overriding the configuration")
    common.add_argument("--report", help="Also write the JSON result to this file")
    return common


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--decoder", choices=("greedy", "beam"))
    parser.add_argument("--beam-width", dest="beam_width", type=int)
    parser.add_argument("--lm", dest="lm_path", help="ARPA language model for shallow fusion")
    parser.add_argument("--alpha", type=float, help="Language model weight")
    parser.add_argument("--beta", type=float, help="Word insertion bonus")
    parser.add_argument("--n-best", dest="n_best", type=int)
    parser.add_argument("--exact", action="store_true", help="Disable per-frame symbol pruning")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="recited-meter", description="Recited poetry meter classification")
    sub = parser.add_subparsers(dest="command", required=True)
    common = [_common_flags()]

    p = sub.add_parser("lm-train", parents=common, help="Train a word n-gram model")
    p.add_argument("--corpus", required=True, help="One verse per line")
    p.add_argument("--output", required=True, help="ARPA output file")
    p.add_argument("--order", type=int, default=settings.LM_ORDER)
    p.add_argument("--min-count", dest="min_count", type=int, default=settings.LM_MIN_COUNT)
    p.set_defaults(func=cmd_lm_train)

    p = sub.add_parser("lm-query", parents=common, help="Score a word or a text's perplexity")
    p.add_argument("--lm", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--text", help="Text whose perplexity is printed")
    group.add_argument("--word", help="Word scored after --history")
    p.add_argument("--history", help="Space-separated history words")
    p.set_defaults(func=cmd_lm_query)

    p = sub.add_parser("decode", parents=common, help="Decode a CTCE emission file")
    p.add_argument("--emission", required=True)
    _add_run_flags(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("scan", parents=common, help="Classify diacritized verses by scansion")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--text")
    group.add_argument("--file", help="One verse per line")
    p.add_argument("--threshold", dest="prose_threshold", type=float, help="Prose threshold")
    p.add_argument("--diacritic-threshold", dest="diacritic_threshold", type=float)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("synth", parents=common, help="Synthesize emissions")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--transcript", help="Single transcript to emit")
    group.add_argument("--per-meter", dest="per_meter", type=int, help="Verses per meter for a benchmark")
    p.add_argument("--output", required=True, help="Emission file, or directory for a benchmark")
    p.add_argument("--frames-per-char", dest="frames_per_char", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--blank-prob", dest="blank_prob", type=float)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("split", parents=common, help="Stratified train/test split of a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--test-fraction", dest="test_fraction", type=float, default=0.1)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("stats", parents=common, help="Manifest statistics")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("evaluate", parents=common, help="Evaluate a configuration on a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--figure", help="Confusion matrix PNG")
    p.add_argument("--split", choices=("train", "validation", "test"))
    p.add_argument("--classifier", choices=("scansion", "head"))
    p.add_argument("--head", dest="head_path")
    p.add_argument("--ablation", action="store_true", help="Classify ground-truth transcripts")
    p.add_argument("--attribute", action="store_true", help="Also run ablation and split the F1 loss")
    p.add_argument("--noise", type=float)
    p.add_argument("--n-jobs", dest="n_jobs", type=int)
    _add_run_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", parents=common, help="Evaluate several configurations")
    p.add_argument("--manifest", required=True)
    p.add_argument("configs", nargs="+", metavar="NAME=PATH")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("head-train", parents=common, help="Train the end-to-end head")
    p.add_argument("--manifest", required=True)
    p.add_argument("--output", help="Head file (defaults to a timestamped file in MODEL_DIR)")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=0.5)
    p.add_argument("--noise", type=float)
    _add_run_flags(p)
    p.set_defaults(func=cmd_head_train)

    p = sub.add_parser("head-classify", parents=common, help="Classify an emission with a trained head")
    p.add_argument("--head", required=True)
    p.add_argument("--emission", required=True)
    p.set_defaults(func=cmd_head_classify)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        validate_settings()
        args.run_config = _run_config(args)
        return args.func(args)
    except DataError as exc:
        log_exception(logger, exc, "Command failed")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (UsageError, ConfigError, ValueError) as exc:
        # Settings validation and out-of-range arguments
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
