"""Classifier construction, transfer-learning freeze and weights persistence."""

from .mobilenet import Model, ModelConfig, build_model, freeze_backbone, predict
from .registry import InvertedResidualSpec, VariantTable, get_variant, list_variants
from .weights import load_weights, read_tensors, save_weights, write_tensors

__all__ = [
    "InvertedResidualSpec",
    "Model",
    "ModelConfig",
    "VariantTable",
    "build_model",
    "freeze_backbone",
    "get_variant",
    "list_variants",
    "load_weights",
    "predict",
    "read_tensors",
    "save_weights",
    "write_tensors",
]
