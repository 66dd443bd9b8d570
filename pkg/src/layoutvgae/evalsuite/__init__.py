"""Random-GIN embeddings, set-level generation metrics and significance tests."""
from .embedding import EmbeddingConfig, RandomGIN, embed_set
from .metrics import (EvalReport, compare_embeddings, density_coverage, evaluate_graphs, f1,
                      frechet_distance, mmd, precision_recall)
from .stats import build_tables, one_way_anova, two_group_ttest

__all__ = [
    "EmbeddingConfig", "RandomGIN", "embed_set", "EvalReport", "compare_embeddings",
    "density_coverage", "evaluate_graphs", "f1", "frechet_distance", "mmd",
    "precision_recall", "build_tables", "one_way_anova", "two_group_ttest",
]
