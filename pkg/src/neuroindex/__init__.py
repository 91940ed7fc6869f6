"""Full-text search where each file's index is a trained feedforward network."""

from .classical import ClassicalIndex, build_classical, load_classical, lookup, match_count, persist_classical
from .config import EngineConfig
from .corpus import Corpus, Dictionary, build_dictionary, load_corpus, tokenize
from .engine import Engine, build_engine, load_engine, save_engine
from .iann import (
    NeuroIndex,
    QuerySpec,
    TrainConfig,
    TrainingNotConverged,
    load_neuro,
    persist_neuro,
    pretrain_initial,
    query_iann,
    signature,
    train_iann,
    validate_iann,
)
from .search import RankedResults, score_file, search, split_pairs

NOT_FOUND = None

__version__ = "0.1.0"

__all__ = [
    "ClassicalIndex",
    "Corpus",
    "Dictionary",
    "Engine",
    "EngineConfig",
    "NOT_FOUND",
    "NeuroIndex",
    "QuerySpec",
    "RankedResults",
    "TrainConfig",
    "TrainingNotConverged",
    "build_classical",
    "build_dictionary",
    "build_engine",
    "load_classical",
    "load_corpus",
    "load_engine",
    "load_neuro",
    "lookup",
    "match_count",
    "persist_classical",
    "persist_neuro",
    "pretrain_initial",
    "query_iann",
    "save_engine",
    "score_file",
    "search",
    "signature",
    "split_pairs",
    "tokenize",
    "train_iann",
    "validate_iann",
]
