"""Script to train the language model and the end-to-end meter head."""

import sys
from pathlib import Path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from datetime import datetime
from typing import List, Optional

import numpy as np

from config.run_config import RunConfig
from config.settings import settings
from models.lm.arpa import write_arpa
from models.lm.ngram import train
from models.ml.meter_head import LinearHead, pool_features
from utils.errors import DataError
from utils.logger import get_logger, log_exception
from utils.manifest import ManifestEntry, load_manifest, split_stratified
from utils.pipeline import entry_emission
from utils.synthesis import build_alphabet, synthesize_verses

logger = get_logger(__name__)


def train_language_model(entries: List[ManifestEntry], order: Optional[int] = None,
                         output: Optional[Path] = None):
    """
    Train the word n-gram model on training transcripts and write it as ARPA.

    Args:
        entries: Entries whose transcripts form the corpus
        order: N-gram order (defaults to settings)
        output: ARPA file (defaults to MODEL_DIR/verses.arpa)

    Returns:
        Dictionary with training results
    """
    logger.info("=" * 60)
    logger.info("Training Language Model")
    logger.info("=" * 60)

    corpus = [entry.transcript for entry in entries if entry.transcript]
    logger.info(f"Corpus: {len(corpus)} verses")
    if not corpus:
        logger.warning("No transcripts available, skipping the language model")
        return {'status': 'insufficient_data', 'verses': 0}

    model = train(corpus, order=order)
    output = Path(output) if output else settings.MODEL_DIR / "verses.arpa"
    output.parent.mkdir(parents=True, exist_ok=True)
    write_arpa(model, output)
    logger.info(f"Language model written to {output}")

    return {
        'status': 'success',
        'path': str(output),
        'order': model.order,
        'ngrams': model.counts(),
    }


def train_meter_head(train_entries: List[ManifestEntry], test_entries: List[ManifestEntry],
                     config: RunConfig, epochs: int = 200, learning_rate: float = 0.5,
                     model_dir: Optional[str] = None):
    """
    Train the linear head on pooled emissions and score it on the test entries.

    Args:
        train_entries: Labeled training entries
        test_entries: Labeled held-out entries
        config: Run configuration (synthesis parameters and seed)
        epochs: Training epochs
        learning_rate: Gradient step
        model_dir: Where the head is saved (defaults to settings)

    Returns:
        Dictionary with training results
    """
    logger.info("=" * 60)
    logger.info("Training Meter Head")
    logger.info("=" * 60)

    everything = train_entries + test_entries
    alphabet = build_alphabet([entry.transcript for entry in everything if entry.transcript])

    def dataset(entries):
        rows, labels = [], []
        for entry in entries:
            emission = entry_emission(entry, config, alphabet)
            if emission is None or entry.meter is None:
                continue
            rows.append(pool_features(emission))
            labels.append(entry.meter)
        return np.array(rows), labels

    X_train, y_train = dataset(train_entries)
    if len(X_train) == 0:
        logger.warning("No labeled training emissions, skipping the head")
        return {'status': 'insufficient_data', 'samples': 0}
    logger.info(f"Prepared {len(X_train)} samples with {X_train.shape[1]} features")

    head = LinearHead(X_train.shape[1], model_dir=model_dir)
    head.feature_names = list(alphabet)
    train_metrics = head.train(X_train, y_train, epochs=epochs, learning_rate=learning_rate, seed=config.seed)

    results = {'status': 'success', 'train_metrics': train_metrics}
    X_test, y_test = dataset(test_entries)
    if len(X_test):
        results['test_metrics'] = head.evaluate(X_test, y_test)
        head.metadata['metrics']['test'] = results['test_metrics']
        logger.info(f"Test accuracy: {results['test_metrics']['accuracy']:.2f}%")

    results['path'] = str(head.save())
    return results


def main(manifest: Optional[str] = None, per_meter: int = 20, seed: Optional[int] = None):
    """
    Train all models.

    Args:
        manifest: Labeled manifest (if None, a synthetic benchmark is generated)
        per_meter: Synthetic verses per meter when no manifest is given
        seed: Master seed (defaults to settings)
    """
    logger.info("Starting Model Training Pipeline")
    logger.info(f"Timestamp: {datetime.now().isoformat()}")

    settings.ensure_directories()
    config = RunConfig(seed=settings.DEFAULT_SEED if seed is None else seed)
    results = {
        'timestamp': datetime.now().isoformat(),
        'models': {}
    }

    try:
        if manifest:
            entries = load_manifest(manifest)
        else:
            verses = synthesize_verses(per_meter, config.seed)
            entries = [
                ManifestEntry(f"{meter.value.lower()}-{i:04d}", transcript=text, meter=meter)
                for i, (text, meter) in enumerate(verses)
            ]
        if not any(entry.split for entry in entries):
            entries = split_stratified(entries, 0.1, config.seed)
        train_entries = [entry for entry in entries if entry.split == "train"]
        test_entries = [entry for entry in entries if entry.split == "test"]
        results['entries'] = {'train': len(train_entries), 'test': len(test_entries)}

        # 1. Language model
        results['models']['language_model'] = train_language_model(train_entries)

        # 2. End-to-end head
        results['models']['meter_head'] = train_meter_head(train_entries, test_entries, config)

    except (DataError, FileNotFoundError) as e:
        log_exception(logger, e, "Pipeline failed")
        results['status'] = 'failed'
        results['error'] = str(e)
        return results

    # Summary
    logger.info("\n" + "=" * 60)
    logger.info("Training Pipeline Complete")
    logger.info("=" * 60)

    for model_name, model_result in results['models'].items():
        status = model_result.get('status', 'unknown')
        logger.info(f"{model_name}: {status}")

    results['status'] = 'complete'
    return results


if __name__ == "__main__":
    import argparse

    parser = argparse.ArgumentParser(description='Train the language model and the meter head')
    parser.add_argument('--manifest', help='Labeled JSON-lines manifest')
    parser.add_argument('--per-meter', type=int, default=20, help='Synthetic verses per meter')
    parser.add_argument('--seed', type=int, help='Master seed')
    args = parser.parse_args()

    outcome = main(manifest=args.manifest, per_meter=args.per_meter, seed=args.seed)
    sys.exit(0 if outcome.get('status') == 'complete' else 2)
