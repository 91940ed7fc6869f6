"""Full indexing pipeline and the on-disk engine directory.

Layout of an engine directory::

    corpus.json     dictionary, file table, config echo
    NNNNN.cdx       classical index per file
    NNNNN.ndx       neuro-index per file
    som.map         associative map
"""

from __future__ import annotations

import json
import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classical import ClassicalIndex, build_classical, load_classical, persist_classical
from .config import EngineConfig
from .corpus import Corpus, Dictionary
from .errors import DataError, FormatError
from .iann import (
    NeuroIndex,
    TrainConfig,
    TrainingNotConverged,
    build_training_set,
    default_hidden,
    load_neuro,
    persist_neuro,
    pretrain_initial,
    signature,
    train_iann,
)
from .nn import Network
from .som import SomMap, load_som, persist_som, train_associative

log = logging.getLogger(__name__)

ENGINE_FORMAT = 1


@dataclass(frozen=True)
class FileEntry:
    file_id: int
    path: str


@dataclass
class Engine:
    dictionary: Dictionary
    files: list[FileEntry]
    classical: list[ClassicalIndex]
    neuro: list[NeuroIndex]
    som: SomMap
    config: EngineConfig = field(default_factory=EngineConfig)
    signatures: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.signatures is None:
            V = len(self.dictionary)
            self.signatures = (
                np.array([signature(n) for n in self.neuro]) if self.neuro else np.zeros((0, V))
            )

    @property
    def stopwords(self) -> frozenset[str]:
        return frozenset(self.config.stopwords)


def corpus_hidden(classical: list[ClassicalIndex], vocab_size: int) -> tuple[int]:
    """One hidden width for the whole corpus, sized for its largest training set."""
    largest = max((len(build_training_set(c, vocab_size)[0]) for c in classical), default=0)
    return (default_hidden(largest),)


def _train_one(args) -> NeuroIndex:
    cdx, vocab_size, config, warm = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TrainingNotConverged)
        return train_iann(cdx, vocab_size, config, warm_start=warm)


def train_all(
    classical: list[ClassicalIndex],
    vocab_size: int,
    config: TrainConfig,
    warm_start: Network | None = None,
    jobs: int = 1,
) -> list[NeuroIndex]:
    tasks = [(c, vocab_size, config, warm_start) for c in classical]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_train_one, tasks))
    return [_train_one(t) for t in tasks]


def build_engine(corpus: Corpus, config: EngineConfig = EngineConfig(), jobs: int = 1) -> Engine:
    """Classical indexes, neuro-indexes, signatures and the associative map."""
    V = len(corpus.dictionary)
    classical = [build_classical(f.tokens, corpus.dictionary, f.file_id) for f in corpus.files]
    train_cfg = config.train_config(corpus_hidden(classical, V))
    warm = pretrain_initial(V, train_cfg) if config.warm_start else None
    neuro = train_all(classical, V, train_cfg, warm, jobs)
    for n in neuro:
        log.info("file %d: trained=%s epochs=%d", n.meta.file_id, n.trained, n.epochs)
    signatures = np.array([signature(n) for n in neuro])
    som_cfg = config.som.som_config(V, len(neuro), config.seed)
    som = train_associative([(s, n.meta.file_id) for s, n in zip(signatures, neuro)], som_cfg)
    files = [FileEntry(f.file_id, f.path) for f in corpus.files]
    return Engine(corpus.dictionary, files, classical, neuro, som, config, signatures)


def _name(file_id: int) -> str:
    return f"{file_id:05d}"


def save_engine(engine: Engine, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = []
    for entry, cdx, nidx in zip(engine.files, engine.classical, engine.neuro):
        name = _name(entry.file_id)
        persist_classical(cdx, out / f"{name}.cdx")
        persist_neuro(nidx, out / f"{name}.ndx")
        table.append(
            {
                "file_id": entry.file_id,
                "path": entry.path,
                "cdx": f"{name}.cdx",
                "ndx": f"{name}.ndx",
                "L": cdx.token_count,
                "trained": nidx.trained,
                "epochs": nidx.epochs,
            }
        )
    persist_som(engine.som, out / "som.map")
    manifest = {
        "format": ENGINE_FORMAT,
        "dictionary": engine.dictionary.words,
        "files": table,
        "config": engine.config.to_dict(),
    }
    (out / "corpus.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return out


def load_engine(engine_dir: str | Path) -> Engine:
    root = Path(engine_dir)
    manifest_path = root / "corpus.json"
    if not manifest_path.is_file():
        raise DataError(f"{root}: not an engine directory (corpus.json missing)")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{manifest_path}: {exc}") from exc
    if manifest.get("format") != ENGINE_FORMAT:
        raise FormatError(f"{manifest_path}: unsupported engine format {manifest.get('format')}")
    dictionary = Dictionary(manifest["dictionary"])
    files, classical, neuro = [], [], []
    for row in manifest["files"]:
        for key in ("cdx", "ndx"):
            if not (root / row[key]).is_file():
                raise DataError(f"{root / row[key]}: listed in corpus.json but missing")
        files.append(FileEntry(row["file_id"], row["path"]))
        classical.append(load_classical(root / row["cdx"]))
        neuro.append(load_neuro(root / row["ndx"]))
    if not (root / "som.map").is_file():
        raise DataError(f"{root / 'som.map'}: missing")
    som = load_som(root / "som.map")
    config = EngineConfig.from_dict(manifest["config"])
    return Engine(dictionary, files, classical, neuro, som, config)
