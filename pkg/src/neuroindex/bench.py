"""Storage and latency comparison between classical and neuro indexes."""

from __future__ import annotations

import csv
import itertools
import json
import statistics
import tempfile
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Callable, ClassVar, Iterable, Sequence

import numpy as np

from .classical import build_classical, persist_classical, serialize_classical
from .corpus import Corpus
from .engine import Engine, corpus_hidden
from .errors import InvalidParams
from .iann import IannMeta, NeuroIndex, TrainConfig, network_config, persist_neuro, serialize_neuro, train_iann
from .nn import init_network
from .search import classical_search, search

_ONSETS = "bdfgklmnprstvz"
_VOWELS = "aeiou"


def synth_vocabulary(size: int) -> list[str]:
    """``size`` distinct pronounceable pseudo-words of two or more syllables."""
    syllables = [c + v for c, v in itertools.product(_ONSETS, _VOWELS)]
    words: list[str] = []
    for n in itertools.count(2):
        for combo in itertools.product(syllables, repeat=n):
            words.append("".join(combo))
            if len(words) == size:
                return words
    raise AssertionError("unreachable")


def synth_corpus(num_files: int, tokens_per_file: int, vocab_size: int, seed: int = 0) -> Corpus:
    """Files of uniformly drawn words from a generated vocabulary."""
    if min(num_files, tokens_per_file, vocab_size) < 1:
        raise InvalidParams(
            f"num_files, tokens_per_file and vocab_size must be >= 1, got {num_files}, {tokens_per_file}, {vocab_size}"
        )
    vocab = synth_vocabulary(vocab_size)
    rng = np.random.default_rng(seed)
    named = []
    for i in range(num_files):
        draws = rng.integers(0, vocab_size, size=tokens_per_file)
        named.append((f"synth_{i:05d}.txt", [vocab[j] for j in draws]))
    return Corpus.from_tokens(named)


@dataclass(frozen=True)
class StorageRow:
    file_id: int
    token_count: int
    occurrence_count: int
    classical_bytes: int
    neuro_bytes: int


@dataclass(frozen=True)
class LatencyRow:
    query: str
    engine: str
    median_ns: int
    p90_ns: int
    repetitions: int


@dataclass
class Report:
    rows: list
    row_type: ClassVar[type]

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls.row_type)]

    def __len__(self) -> int:
        return len(self.rows)


@dataclass
class StorageReport(Report):
    row_type: ClassVar[type] = StorageRow


@dataclass
class LatencyReport(Report):
    row_type: ClassVar[type] = LatencyRow

    def median(self, engine: str) -> float:
        return float(statistics.median(r.median_ns for r in self.rows if r.engine == engine))

    def speed_ratio(self) -> float:
        """Classical median latency over neuro median latency (>1 means neuro is faster)."""
        return self.median("classical") / self.median("neuro")


def measure_storage(
    corpus: Corpus,
    config: TrainConfig = TrainConfig(),
    out_dir: str | Path | None = None,
    train: bool = True,
) -> StorageReport:
    """Build and persist both index types for every file and record their byte sizes.

    All files share one architecture. With ``train=False`` the networks are
    persisted untrained: neuro-index size depends on the architecture alone.
    """
    V = len(corpus.dictionary)
    classical = [build_classical(f.tokens, corpus.dictionary, f.file_id) for f in corpus.files]
    if config.hidden is None:
        config = TrainConfig(**{**asdict(config), "hidden": corpus_hidden(classical, V)})
    rows = []
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(out_dir) if out_dir is not None else Path(tmp)
        root.mkdir(parents=True, exist_ok=True)
        for cdx in classical:
            if train:
                nidx = train_iann(cdx, V, config)
            else:
                net = init_network(network_config(V, config.hidden, config, config.seed))
                nidx = NeuroIndex(net, IannMeta.for_index(cdx, V))
            cbytes = persist_classical(cdx, root / f"{cdx.file_id:05d}.cdx")
            nbytes = persist_neuro(nidx, root / f"{cdx.file_id:05d}.ndx")
            rows.append(StorageRow(cdx.file_id, cdx.token_count, cdx.occurrences(), cbytes, nbytes))
    return StorageReport(rows)


def storage_from_engine(engine: Engine) -> StorageReport:
    return StorageReport(
        [
            StorageRow(c.file_id, c.token_count, c.occurrences(), len(serialize_classical(c)), len(serialize_neuro(n)))
            for c, n in zip(engine.classical, engine.neuro)
        ]
    )


def _time_ns(fn: Callable[[], object], reps: int, warmup: int) -> list[int]:
    for _ in range(warmup):
        fn()
    out = []
    for _ in range(reps):
        t0 = time.perf_counter_ns()
        fn()
        out.append(time.perf_counter_ns() - t0)
    return out


def measure_latency(engine: Engine, queries: Sequence[str], reps: int = 5, warmup: int = 3) -> LatencyReport:
    """Wall-clock query latency per engine; index build time is excluded."""
    if reps < 3:
        raise InvalidParams("reps must be >= 3")
    n_files = len(engine.files)
    rows = []
    for q in queries:
        runs = {
            "classical": lambda q=q: classical_search(engine, q),
            "neuro": lambda q=q: search(engine, q, k=n_files),
        }
        for name, fn in runs.items():
            times = _time_ns(fn, reps, warmup)
            rows.append(
                LatencyRow(q, name, int(np.median(times)), int(np.percentile(times, 90)), reps)
            )
    return LatencyReport(rows)


def top1_agreement(engine: Engine, queries: Iterable[str]) -> list[tuple[str, int, int]]:
    """``(query, classical top file, neuro top file)`` for every query, in order."""
    return [
        (q, classical_search(engine, q)[0].file_id, search(engine, q, k=len(engine.files)).final.hits[0].file_id)
        for q in queries
    ]


def default_queries(engine: Engine, count: int = 10, seed: int = 0) -> list[str]:
    """Two-word phrases copied from random spots in the indexed files."""
    rng = np.random.default_rng(seed)
    words = engine.dictionary.words
    queries = []
    for _ in range(count):
        cdx = engine.classical[int(rng.integers(len(engine.classical)))]
        tokens = sorted(cdx.pairs(), key=lambda kp: kp[1])
        if len(tokens) < 2:
            queries.append(words[int(rng.integers(len(words)))])
            continue
        i = int(rng.integers(len(tokens) - 1))
        queries.append(f"{words[tokens[i][0]]} {words[tokens[i + 1][0]]}")
    return queries


def emit_report(report: Report, path: str | Path, fmt: str | None = None) -> Path:
    """Write ``report`` as CSV (header row of field names) or as a JSON array."""
    path = Path(path)
    fmt = fmt or ("json" if path.suffix.lower() == ".json" else "csv")
    names = report.field_names()
    if fmt == "json":
        path.write_text(json.dumps([asdict(r) for r in report.rows], indent=1) + "\n", encoding="utf-8")
    elif fmt == "csv":
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=names)
            writer.writeheader()
            writer.writerows(asdict(r) for r in report.rows)
    else:
        raise InvalidParams(f"unknown report format {fmt!r}")
    return path
