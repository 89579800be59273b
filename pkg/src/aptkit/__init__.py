"""Sparse distributional vector spaces over dependency paths (APTs) and windows.

Build typed or untyped co-occurrence stores from parsed corpora, weight them
with shifted PPMI, enrich vectors from their nearest neighbours, compose
phrase vectors and evaluate against similarity judgements.
"""

__version__ = "0.1.0"

from .composition import PhraseSpec, compose_typed, compose_untyped, compose_with_di, offset, reduce_path
from .evaluation import eval_composition, eval_wordsim, load_pairs, spearman, sweep
from .inference import InferenceConfig, enrich
from .ingest import DepPath, Step, TypedFeature, extract_typed, extract_window, parse_conll, read_corpus
from .neighbours import RetrievalPolicy, cosine, density_window, lexicon_neighbours, neighbours_over_union, top_n
from .vsm import SparseVector, VectorStore, accumulate, filter_store, load, save, sppmi

__all__ = [
    "DepPath", "Step", "TypedFeature", "parse_conll", "read_corpus", "extract_typed", "extract_window",
    "SparseVector", "VectorStore", "accumulate", "filter_store", "sppmi", "save", "load",
    "cosine", "top_n", "density_window", "lexicon_neighbours", "neighbours_over_union", "RetrievalPolicy",
    "InferenceConfig", "enrich",
    "PhraseSpec", "reduce_path", "offset", "compose_untyped", "compose_typed", "compose_with_di",
    "spearman", "load_pairs", "eval_wordsim", "eval_composition", "sweep",
]
