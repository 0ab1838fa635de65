"""Base class for trainable classifiers."""

from abc import ABC, abstractmethod
import json
from pathlib import Path
from typing import Any, Dict, Optional, Sequence
import numpy as np
from datetime import datetime
from config.settings import settings
from utils.logger import get_logger

logger = get_logger(__name__)


class BaseMLModel(ABC):
    """Abstract base class for trainable models saved as a file plus a JSON metadata sidecar."""

    # Extension of the model file written by _write_model
    file_suffix = ".txt"

    def __init__(self, model_name: str, model_dir: Optional[str] = None):
        """
        Initialize base model.

        Args:
            model_name: Name of the model
            model_dir: Directory to save/load models (defaults to settings.MODEL_DIR)
        """
        self.model_name = model_name
        self.model_dir = Path(model_dir) if model_dir else settings.MODEL_DIR

        self.model = None
        self.feature_names = []
        self.metadata = {
            'model_name': model_name,
            'created_at': datetime.now().isoformat(timespec="seconds"),
            'trained_at': None,
            'version': '1.0.0',
            'metrics': {}
        }

    @abstractmethod
    def train(self, X: np.ndarray, y: Sequence, **kwargs) -> Dict[str, Any]:
        """
        Train the model.

        Args:
            X: Training features, one row per sample
            y: Training targets
            **kwargs: Additional training parameters

        Returns:
            Dictionary with training metrics
        """
        pass

    @abstractmethod
    def predict(self, X: np.ndarray) -> np.ndarray:
        """
        Make predictions.

        Args:
            X: Features for prediction

        Returns:
            Predictions array
        """
        pass

    @abstractmethod
    def _write_model(self, path: Path) -> None:
        """Write the trained parameters to `path`."""
        pass

    @abstractmethod
    def _read_model(self, path: Path) -> None:
        """Restore the parameters from `path`."""
        pass

    def save(self, model_path: Optional[Path] = None, suffix: str = "") -> Path:
        """
        Save model to disk.

        Args:
            model_path: Target file; defaults to a timestamped file in model_dir
            suffix: Optional suffix for the generated filename

        Returns:
            Path to saved model
        """
        if self.model is None:
            raise ValueError("Model not trained yet. Call train() first.")

        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        if model_path is None:
            self.model_dir.mkdir(parents=True, exist_ok=True)
            model_path = self.model_dir / f"{self.model_name}_{timestamp}{suffix}{self.file_suffix}"
        model_path = Path(model_path)
        model_path.parent.mkdir(parents=True, exist_ok=True)

        self._write_model(model_path)

        # Save metadata separately for easy reading
        metadata_path = model_path.with_suffix('.json')
        self.metadata['saved_at'] = timestamp
        self.metadata['feature_names'] = self.feature_names

        with open(metadata_path, 'w', encoding='utf-8') as f:
            json.dump(self.metadata, f, indent=2, default=str, ensure_ascii=False)

        logger.info(f"Model saved to {model_path}")
        logger.info(f"Metadata saved to {metadata_path}")

        return model_path

    def load(self, model_path: Optional[Path] = None) -> None:
        """
        Load model from disk.

        Args:
            model_path: Path to model file. If None, loads latest model.
        """
        if model_path is None:
            # Find latest model
            model_files = list(self.model_dir.glob(f"{self.model_name}_*{self.file_suffix}"))
            if not model_files:
                raise FileNotFoundError(f"No saved models found for {self.model_name}")
            model_path = max(model_files, key=lambda p: p.stat().st_mtime)
        model_path = Path(model_path)

        self._read_model(model_path)
        logger.info(f"Model loaded from {model_path}")

        # The sidecar is optional: a bare model file is enough to predict
        metadata_path = model_path.with_suffix('.json')
        if metadata_path.exists():
            with open(metadata_path, 'r', encoding='utf-8') as f:
                metadata_json = json.load(f)
                self.metadata.update(metadata_json)
                if 'feature_names' in metadata_json:
                    self.feature_names = metadata_json['feature_names']
            logger.info(f"Metadata loaded from {metadata_path}")

    def evaluate(self, X: np.ndarray, y: Sequence) -> Dict[str, float]:
        """
        Evaluate model performance.

        Args:
            X: Test features
            y: Test targets

        Returns:
            Dictionary with evaluation metrics
        """
        if self.model is None:
            raise ValueError("Model not trained yet. Call train() first.")

        predictions = self.predict(X)
        return self._calculate_metrics(y, predictions)

    @abstractmethod
    def _calculate_metrics(self, y_true: Sequence, y_pred: np.ndarray) -> Dict[str, float]:
        """
        Calculate evaluation metrics.

        Args:
            y_true: True values
            y_pred: Predicted values

        Returns:
            Dictionary with metrics
        """
        pass

    def get_model_info(self) -> Dict[str, Any]:
        """
        Summary of the model for reports and command output.

        Returns:
            Metadata without the feature list, plus training status and feature count
        """
        info = {key: value for key, value in self.metadata.items() if key != 'feature_names'}
        info['is_trained'] = self.model is not None
        info['n_features'] = len(self.feature_names)
        return info

    def __repr__(self) -> str:
        """String representation of model."""
        trained_status = "trained" if self.model is not None else "not trained"
        return f"{self.__class__.__name__}(name='{self.model_name}', status='{trained_status}')"
