"""End-to-end meter classifier: a dense layer plus softmax over pooled emissions."""

from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import softmax

from config.settings import settings
from models.ctc.emission import EmissionMatrix
from models.meter.labels import CANONICAL_ORDER, MeterLabel
from utils.errors import DataError, DimensionMismatch, EmptyDataset
from utils.logger import get_logger
from utils.metrics import classification_report
from .base_model import BaseMLModel

logger = get_logger(__name__)

N_CLASSES = len(CANONICAL_ORDER)


@dataclass
class HeadParameters:
    weights: np.ndarray  # N_CLASSES x d
    bias: np.ndarray  # N_CLASSES


def pool_features(emission: EmissionMatrix) -> np.ndarray:
    """Mean character posterior over time (d = V)."""
    return np.exp(emission.values).mean(axis=0)


class LinearHead(BaseMLModel):
    """
    Dense layer followed by softmax, trained with mini-batch gradient descent
    on cross-entropy.

    Persisted as a text document: d, the 17 label names, 17 weight rows and
    the bias row, 9 significant digits.
    """

    file_suffix = ".head"

    def __init__(self, dim: int, model_dir: Optional[str] = None, model_name: str = "meter_head"):
        """
        Initialize a zero head.

        Args:
            dim: Feature dimension d
            model_dir: Directory to save/load models
            model_name: Name used for saved files
        """
        super().__init__(model_name, model_dir)
        if dim < 1:
            raise ValueError(f"feature dimension must be positive, got {dim}")
        self.dim = dim
        self.model = HeadParameters(np.zeros((N_CLASSES, dim)), np.zeros(N_CLASSES))
        self.loss_trace: List[float] = []
        self.metadata['dim'] = dim

    @property
    def weights(self) -> np.ndarray:
        return self.model.weights

    @property
    def bias(self) -> np.ndarray:
        return self.model.bias

    @classmethod
    def initialized(cls, dim: int, seed: int, scale: float = 0.01, **kwargs) -> "LinearHead":
        """Small Gaussian weights, zero bias."""
        head = cls(dim, **kwargs)
        rng = np.random.default_rng(seed)
        head.model = HeadParameters(rng.normal(0.0, scale, (N_CLASSES, dim)), np.zeros(N_CLASSES))
        return head

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dim:
            raise DimensionMismatch(f"expected {self.dim} features, got {X.shape[1]}")
        return X

    def forward(self, X: np.ndarray) -> np.ndarray:
        """Class probabilities, one row per sample."""
        X = self._check(X)
        logits = X @ self.weights.T + self.bias
        return softmax(logits, axis=1)

    def loss_and_gradients(self, X: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
        """
        Mean cross-entropy and its gradients.

        Args:
            X: n x d features
            targets: n class indices

        Returns:
            (loss, dW, db)
        """
        X = self._check(X)
        probs = self.forward(X)
        n = X.shape[0]
        rows = np.arange(n)
        loss = float(-np.log(np.maximum(probs[rows, targets], 1e-300)).mean())
        delta = probs.copy()
        delta[rows, targets] -= 1.0
        delta /= n
        return loss, delta.T @ X, delta.sum(axis=0)

    def train(
        self,
        X: np.ndarray,
        y: Sequence[MeterLabel],
        epochs: int = 200,
        learning_rate: float = 0.5,
        batch_size: int = 32,
        seed: Optional[int] = None,
        **kwargs,
    ) -> Dict[str, Any]:
        """
        Train from a fresh seeded initialization.

        Args:
            X: n x d features
            y: n meter labels
            epochs: Passes over the data; 0 keeps the initialization
            learning_rate: Gradient step
            batch_size: Mini-batch size
            seed: Initialization and shuffling seed (defaults to settings)

        Returns:
            Dictionary with training metrics
        """
        X = np.asarray(X, dtype=np.float64)
        if len(X) == 0:
            raise EmptyDataset("cannot train on an empty dataset")
        if len(X) != len(y):
            raise DimensionMismatch(f"{len(X)} feature rows but {len(y)} labels")
        X = self._check(X)
        seed = settings.DEFAULT_SEED if seed is None else seed
        targets = np.array([CANONICAL_ORDER.index(label) for label in y])

        logger.info(f"Training meter head on {len(X)} samples, d={self.dim}, {epochs} epochs")
        rng = np.random.default_rng(seed)
        self.model = HeadParameters(rng.normal(0.0, 0.01, (N_CLASSES, self.dim)), np.zeros(N_CLASSES))
        self.loss_trace = []

        for epoch in range(epochs):
            order = rng.permutation(len(X))
            for start in range(0, len(X), batch_size):
                batch = order[start:start + batch_size]
                _, grad_w, grad_b = self.loss_and_gradients(X[batch], targets[batch])
                self.model.weights -= learning_rate * grad_w
                self.model.bias -= learning_rate * grad_b
            loss, _, _ = self.loss_and_gradients(X, targets)
            self.loss_trace.append(loss)
            logger.debug(f"Epoch {epoch + 1}/{epochs}: loss={loss:.6f}")

        train_metrics = self._calculate_metrics(y, self.predict(X))
        self.metadata['metrics'] = {
            'train': train_metrics,
            'final_loss': self.loss_trace[-1] if self.loss_trace else None,
            'n_samples': len(X),
        }
        self.metadata.update({
            'loss_trace': self.loss_trace,
            'seed': seed,
            'epochs': epochs,
            'learning_rate': learning_rate,
            'batch_size': batch_size,
            'trained_at': datetime.now().isoformat(timespec="seconds"),
        })
        logger.info(f"Training complete - train accuracy: {train_metrics['accuracy']:.2f}%")
        return self.metadata['metrics']

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.forward(X)

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Most probable label per row; ties resolve to the earliest canonical label."""
        indices = np.argmax(self.forward(X), axis=1)
        return np.array([CANONICAL_ORDER[i] for i in indices], dtype=object)

    def _calculate_metrics(self, y_true: Sequence, y_pred: np.ndarray) -> Dict[str, float]:
        report = classification_report(list(y_true), list(y_pred), CANONICAL_ORDER)
        return {
            'accuracy': report.accuracy,
            'precision': report.macro_precision,
            'recall': report.macro_recall,
            'f1': report.macro_f1,
        }

    def to_text(self) -> str:
        lines = [str(self.dim), "\t".join(label.value for label in CANONICAL_ORDER)]
        for row in self.weights:
            lines.append(" ".join(f"{value:.9g}" for value in row))
        lines.append(" ".join(f"{value:.9g}" for value in self.bias))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, **kwargs) -> "LinearHead":
        """
        Parse the text document written by to_text.

        Raises:
            DataError: wrong label list, row count or row width
        """
        lines = [line for line in text.splitlines() if line.strip()]
        if len(lines) != N_CLASSES + 3:
            raise DataError(f"head file needs {N_CLASSES + 3} lines, found {len(lines)}")
        try:
            dim = int(lines[0])
            rows = [np.array([float(v) for v in line.split()]) for line in lines[2:]]
        except ValueError as exc:
            raise DataError(f"non-numeric value in head file: {exc}")
        names = lines[1].split("\t")
        if names != [label.value for label in CANONICAL_ORDER]:
            raise DataError("head file labels are not the canonical meter list")
        if any(len(row) != dim for row in rows[:-1]) or len(rows[-1]) != N_CLASSES:
            raise DataError("head file rows do not match the declared dimension")
        head = cls(dim, **kwargs)
        head.model = HeadParameters(np.vstack(rows[:-1]), rows[-1])
        return head

    def _write_model(self, path: Path) -> None:
        path.write_text(self.to_text(), encoding="utf-8")

    def _read_model(self, path: Path) -> None:
        loaded = LinearHead.from_text(path.read_text(encoding="utf-8"))
        self.dim = loaded.dim
        self.model = loaded.model
        self.metadata['dim'] = loaded.dim


def head_forward(head: LinearHead, features: Sequence[float]) -> np.ndarray:
    """
    softmax(W x + b) for one feature vector.

    Raises:
        DimensionMismatch: len(features) != d
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 1 or features.shape[0] != head.dim:
        raise DimensionMismatch(f"expected {head.dim} features, got shape {features.shape}")
    return head.forward(features)[0]


def head_train(
    dataset: Sequence[Tuple[Sequence[float], MeterLabel]],
    epochs: int = 200,
    learning_rate: float = 0.5,
    seed: Optional[int] = None,
    batch_size: int = 32,
) -> Tuple[LinearHead, List[float]]:
    """
    Train a head on (features, label) pairs.

    Returns:
        (trained head, per-epoch loss trace)

    Raises:
        EmptyDataset: no samples
        DimensionMismatch: inconsistent feature lengths
    """
    if not dataset:
        raise EmptyDataset("cannot train on an empty dataset")
    dims = {len(features) for features, _ in dataset}
    if len(dims) != 1:
        raise DimensionMismatch(f"inconsistent feature dimensions {sorted(dims)}")
    X = np.array([features for features, _ in dataset], dtype=np.float64)
    y = [label for _, label in dataset]
    head = LinearHead(X.shape[1])
    head.train(X, y, epochs=epochs, learning_rate=learning_rate, batch_size=batch_size, seed=seed)
    return head, head.loss_trace
