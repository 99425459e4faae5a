"""Representation-weighted resource diffusion on bipartite user-item graphs."""

__version__ = "0.1.0"

from .dhc import (
    HIndexTable,
    SpectralDecomposition,
    column_entropy,
    coreness_oracle,
    dhc_entropy,
    h_index_sequences,
    h_operator,
    method_one_representations,
    method_two_representations,
    representations,
    spectral_decompose,
)
from .diffusion import (
    aiprobs_predict,
    diffusion_operator,
    diffusion_weights,
    iterate_to_fixpoint,
    maxmin_normalize,
    probs_predict,
    proportioning,
    pure_dhc_predict,
    similarity,
)
from .evaluation import MetricReport, aggregate, evaluate, mrr_at_n, ndcg_at_n, recall_at_n, top_n
from .graph import BipartiteGraph, augment, build_graph, load_interactions, parse_interactions, split

__all__ = [name for name in dir() if not name.startswith("_")]
