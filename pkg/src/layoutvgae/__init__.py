"""Layout graph variational auto-encoders: data model, features, model, training, evaluation."""
from .config import TOGGLES, ModelConfig, experiment_matrix
from .decoders import discretize
from .estimator import LayoutGraphVAE
from .features import FeatureAssembler, FeatureConfig, assemble_batch
from .graph import AAMG, LabelSchema, apply_permutation, canonical_order, hop_distances, validate
from .model import LayoutVGAE, TensorBatch
from .synthetic import GeneratorConfig, generate_corpus, read_corpus, write_corpus
from .trainer import Trainer, interpolate, load_model, sample

__version__ = "0.1.0"

__all__ = [
    "TOGGLES", "ModelConfig", "experiment_matrix", "discretize", "LayoutGraphVAE",
    "FeatureAssembler", "FeatureConfig", "assemble_batch", "AAMG", "LabelSchema",
    "apply_permutation", "canonical_order", "hop_distances", "validate", "LayoutVGAE",
    "TensorBatch", "GeneratorConfig", "generate_corpus", "read_corpus", "write_corpus",
    "Trainer", "interpolate", "load_model", "sample",
]
