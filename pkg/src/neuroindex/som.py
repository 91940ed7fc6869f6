"""Supervised Kohonen map over file signatures.

Training runs unsupervised SOM epochs, labels every node with the files
whose signature lands on it, then applies one LVQ1 pass that pulls a node
toward same-label samples and pushes it away from other-label samples.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, EmptySamples, FormatError, InvalidConfig, UnassignedLabels

SOM_MAGIC = b"SOM1"
SOM_VERSION = 1
EPS = 1e-9


@dataclass(frozen=True)
class SomConfig:
    """Map hyper-parameters.

    ``grid`` is the side G of a G x G map; ``cols`` overrides the column
    count for rectangular maps. ``None`` fields are derived from the number
    of files by :meth:`resolve`.
    """

    dim: int
    grid: int | None = None
    cols: int | None = None
    epochs: int = 100
    alpha: float = 0.3
    radius: float | None = None
    beta: float = 0.05
    seed: int = 0

    def resolve(self, n_files: int) -> "SomConfig":
        grid = self.grid if self.grid is not None else max(1, math.ceil(math.sqrt(n_files)))
        radius = self.radius if self.radius is not None else grid / 2
        cfg = replace(self, grid=grid, cols=self.cols if self.cols is not None else grid, radius=radius)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.grid is None or self.grid < 1 or (self.cols is not None and self.cols < 1):
            raise InvalidConfig("grid size must be >= 1")
        if self.epochs < 1:
            raise InvalidConfig("epochs must be >= 1")
        if not 0 < self.alpha <= 1:
            raise InvalidConfig("alpha must lie in (0, 1]")
        if self.radius is not None and self.radius < 0:
            raise InvalidConfig("radius must be >= 0")
        if not 0 < self.beta <= 1:
            raise InvalidConfig("beta must lie in (0, 1]")

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid, self.cols if self.cols is not None else self.grid


def _as_samples(samples, dim: int) -> np.ndarray:
    X = np.asarray(samples, dtype=np.float64)
    if X.size == 0:
        raise EmptySamples("need at least one sample")
    X = np.atleast_2d(X)
    if X.shape[1] != dim:
        raise DimensionMismatch(f"samples have dimension {X.shape[1]}, map expects {dim}")
    return X


@dataclass
class SomMap:
    config: SomConfig
    codebooks: np.ndarray  # (rows, cols, dim)
    labels: list[set[int]] = field(default_factory=list)  # row-major per node
    history: list[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.labels:
            self.labels = [set() for _ in range(self.n_nodes)]

    @property
    def shape(self) -> tuple[int, int]:
        return self.codebooks.shape[0], self.codebooks.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.shape[0] * self.shape[1]

    @property
    def flat(self) -> np.ndarray:
        return self.codebooks.reshape(self.n_nodes, -1)

    def node(self, index: int) -> tuple[int, int]:
        return divmod(index, self.shape[1])

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.config.dim:
            raise DimensionMismatch(f"vector has dimension {x.shape[-1]}, map expects {self.config.dim}")
        return x

    def distances(self, x) -> np.ndarray:
        """Euclidean distance from ``x`` to every node, row-major."""
        diff = self.flat - self._check(x)
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))

    def bmu_index(self, x) -> int:
        # argmin returns the first minimum, i.e. the row-major tie-break
        return int(np.argmin(self.distances(x)))

    def bmu(self, x) -> tuple[int, int]:
        return self.node(self.bmu_index(x))

    def update(self, x, alpha: float, radius: float) -> None:
        """Move the BMU of ``x`` and its grid neighbours toward ``x``."""
        x = self._check(x)
        rows, cols = self.shape
        br, bc = self.node(self.bmu_index(x))
        rr, cc = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
        d = np.maximum(np.abs(rr - br), np.abs(cc - bc)).astype(np.float64)
        h = np.exp(-(d**2) / (2 * max(radius, EPS) ** 2))
        h[d > radius] = 0.0
        self.codebooks += (alpha * h)[:, :, None] * (x - self.codebooks)

    def epoch(self, samples, t: int) -> "SomMap":
        """One pass over ``samples`` in seeded shuffled order with decayed rate and radius."""
        X = _as_samples(samples, self.config.dim)
        frac = 1.0 - t / self.config.epochs
        alpha, radius = self.config.alpha * frac, (self.config.radius or 0.0) * frac
        for i in np.random.default_rng([self.config.seed, t]).permutation(len(X)):
            self.update(X[i], alpha, radius)
        return self

    def quantization_error(self, samples, record: bool = True) -> float:
        X = _as_samples(samples, self.config.dim)
        err = float(np.mean([self.distances(x).min() for x in X]))
        if record:
            self.history.append(err)
        return err

    def node_errors(self, samples) -> np.ndarray:
        """Per-node mean distance of the samples it wins; NaN for idle nodes."""
        X = _as_samples(samples, self.config.dim)
        total = np.zeros(self.n_nodes)
        hits = np.zeros(self.n_nodes)
        for x in X:
            d = self.distances(x)
            i = int(np.argmin(d))
            total[i] += d[i]
            hits[i] += 1
        with np.errstate(invalid="ignore", divide="ignore"):
            return (total / hits).reshape(self.shape)

    def assign_labels(self, labeled: Sequence[tuple[np.ndarray, int]]) -> None:
        self.labels = [set() for _ in range(self.n_nodes)]
        for x, label in labeled:
            self.labels[self.bmu_index(x)].add(int(label))

    def lvq_refine(self, labeled: Sequence[tuple[np.ndarray, int]], beta: float | None = None) -> "SomMap":
        beta = self.config.beta if beta is None else beta
        known = set().union(*self.labels)
        missing = {int(lbl) for _, lbl in labeled} - known
        if missing:
            raise UnassignedLabels(f"labels {sorted(missing)} are not attached to any node")
        flat = self.flat
        for x, label in labeled:
            x = self._check(x)
            i = self.bmu_index(x)
            sign = 1.0 if int(label) in self.labels[i] else -1.0
            flat[i] += sign * beta * (x - flat[i])
        return self

    def candidates(self, probe, k: int, fallback: Sequence[int] = ()) -> list[int]:
        """File ids from the nodes nearest ``probe`` until at least ``k`` are collected.

        Returns ``fallback`` (normally every file id) when no node carries a label.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        order = np.argsort(self.distances(probe), kind="stable")
        out: dict[int, None] = {}
        for i in order:
            for fid in sorted(self.labels[i]):
                out.setdefault(fid, None)
            if len(out) >= k:
                break
        return list(out) if out else list(fallback)

    def all_labels(self) -> list[int]:
        return sorted(set().union(*self.labels))


def init_som(config: SomConfig, samples) -> SomMap:
    if config.grid is None or config.radius is None:
        raise InvalidConfig("resolve the config before initialising a map")
    config.validate()
    X = _as_samples(samples, config.dim)
    rows, cols = config.shape
    pick = np.random.default_rng(config.seed).integers(0, len(X), size=rows * cols)
    return SomMap(config, X[pick].reshape(rows, cols, config.dim).copy())


def train_associative(signatures: Sequence[tuple[np.ndarray, int]], config: SomConfig) -> SomMap:
    """Fit a labelled map to ``(signature, file_id)`` pairs.

    History records the quantization error at initialisation, after the
    SOM epochs and after LVQ refinement.
    """
    if not signatures:
        raise EmptySamples("need at least one signature")
    config = config.resolve(len(signatures)) if config.grid is None or config.radius is None else config
    X = np.array([np.asarray(s, dtype=np.float64) for s, _ in signatures])
    som = init_som(config, X)
    som.quantization_error(X)
    for t in range(config.epochs):
        som.epoch(X, t)
    som.assign_labels(signatures)
    som.quantization_error(X)
    som.lvq_refine(signatures, config.beta)
    som.assign_labels(signatures)
    som.quantization_error(X)
    return som


# -- persistence --------------------------------------------------------------


def serialize_som(som: SomMap) -> bytes:
    rows, cols = som.shape
    header = {
        "G": rows,
        "cols": cols,
        "V": som.config.dim,
        "config": asdict(som.config),
        "history": som.history,
    }
    raw = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [SOM_MAGIC, struct.pack("<HI", SOM_VERSION, len(raw)), raw]
    parts.append(np.ascontiguousarray(som.codebooks, dtype="<f8").tobytes())
    table = [(i, sorted(lbls)) for i, lbls in enumerate(som.labels) if lbls]
    parts.append(struct.pack("<I", len(table)))
    for i, ids in table:
        parts.append(struct.pack("<II", i, len(ids)))
        parts.append(np.asarray(ids, dtype="<u4").tobytes())
    return b"".join(parts)


def deserialize_som(data: bytes) -> SomMap:
    if data[:4] != SOM_MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}, expected {SOM_MAGIC!r}")
    try:
        version, hlen = struct.unpack_from("<HI", data, 4)
        if version != SOM_VERSION:
            raise FormatError(f"unsupported map version {version}")
        h = json.loads(data[10 : 10 + hlen].decode("utf-8"))
        off = 10 + hlen
        rows, cols, dim = h["G"], h["cols"], h["V"]
        n = rows * cols * dim
        codebooks = np.frombuffer(data, dtype="<f8", count=n, offset=off).reshape(rows, cols, dim).astype(np.float64)
        off += 8 * n
        labels: list[set[int]] = [set() for _ in range(rows * cols)]
        (entries,) = struct.unpack_from("<I", data, off)
        off += 4
        for _ in range(entries):
            i, count = struct.unpack_from("<II", data, off)
            off += 8
            labels[i] = set(np.frombuffer(data, dtype="<u4", count=count, offset=off).astype(int).tolist())
            off += 4 * count
    except (struct.error, ValueError, KeyError, IndexError) as exc:
        raise FormatError(f"truncated or malformed map: {exc}") from exc
    if off != len(data):
        raise FormatError(f"{len(data) - off} trailing bytes in map")
    return SomMap(SomConfig(**h["config"]), codebooks, labels, list(h["history"]))


def persist_som(som: SomMap, path: str | Path) -> int:
    data = serialize_som(som)
    Path(path).write_bytes(data)
    return len(data)


def load_som(path: str | Path) -> SomMap:
    return deserialize_som(Path(path).read_bytes())
