"""Trainable classifiers."""

from .base_model import BaseMLModel
from .meter_head import LinearHead, head_forward, head_train, pool_features

__all__ = ['BaseMLModel', 'LinearHead', 'head_forward', 'head_train', 'pool_features']
