"""Neuro-index: a per-file network answering (keyword, ordinal) -> position.

Input layout is ``one_hot(keyword) ++ [ordinal / n_max] ++ [degree]``.
The two outputs carry ``position / (L - 1)`` (or -1 when the requested
occurrence does not exist) and ``match_count / n_max``.
"""

from __future__ import annotations

import json
import math
import struct
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .classical import ClassicalIndex, lookup, match_count
from .corpus import Dictionary
from .errors import (
    FormatError,
    InvalidConfig,
    KeywordOutOfRange,
    NonFiniteLoss,
    TrainingDiverged,
)
from .nn import LevenbergMarquardt, Network, NetworkConfig, forward, init_network, train_step

NDX_MAGIC = b"NDX1"
NDX_VERSION = 1
ENCODING_VERSION = 1
SENTINEL = -1.0
SENTINEL_THRESHOLD = -0.5

# Per-file header fields are padded as if they held this value, so the
# serialized size depends on the architecture alone.
_WIDEST_INT = 2**64 - 1


class TrainingNotConverged(UserWarning):
    """Epoch cap reached with decode errors left; the index is still usable."""


@dataclass(frozen=True)
class IannMeta:
    file_id: int
    token_count: int
    n_max: int
    vocab_size: int
    encoding_version: int = ENCODING_VERSION

    @classmethod
    def for_index(cls, cdx: ClassicalIndex, vocab_size: int) -> "IannMeta":
        return cls(cdx.file_id, cdx.token_count, cdx.n_max, vocab_size)


@dataclass(frozen=True)
class QuerySpec:
    keyword_id: int
    ordinal: int = 1
    degree: float = 0.0

    def __post_init__(self):
        if self.ordinal < 1:
            raise ValueError(f"ordinal must be >= 1, got {self.ordinal}")
        if not 0.0 <= self.degree <= 1.0:
            raise ValueError(f"degree must lie in [0, 1], got {self.degree}")


@dataclass
class NeuroIndex:
    network: Network
    meta: IannMeta
    trained: bool = False
    epochs: int = 0


@dataclass(frozen=True)
class TrainConfig:
    """How a neuro-index network is sized and fitted.

    ``optimizer`` is ``"lm"`` (damped Gauss-Newton on backprop Jacobians) or
    ``"gd"`` (plain gradient descent via :func:`nn.train_step`). Unset
    ``max_epochs`` / ``check_every`` take per-optimizer defaults. Training
    stops once every probe decodes exactly and no raw count output is further
    than ``tolerance`` from its target (the count channel feeds signatures); ``tolerance=None`` drops the second test.
    """

    hidden: tuple[int, ...] | None = None
    hidden_activation: str = "tanh"
    output_activation: str = "identity"
    optimizer: str = "lm"
    lr: float = 0.05
    max_epochs: int | None = None
    check_every: int | None = None
    batch_size: int | None = None
    damping: float = 1e-2
    tolerance: float | None = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.hidden is not None:
            object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    def validate(self) -> None:
        if self.optimizer not in ("lm", "gd"):
            raise InvalidConfig(f"optimizer must be 'lm' or 'gd', got {self.optimizer!r}")
        if self.lr < 0 or self.damping <= 0:
            raise InvalidConfig("lr must be >= 0 and damping > 0")
        if self.max_epochs is not None and self.max_epochs < 0:
            raise InvalidConfig("max_epochs must be >= 0")
        if self.check_every is not None and self.check_every < 1:
            raise InvalidConfig("check_every must be >= 1")
        if self.batch_size is not None and self.batch_size < 1:
            raise InvalidConfig("batch_size must be >= 1")
        if self.tolerance is not None and self.tolerance <= 0:
            raise InvalidConfig("tolerance must be > 0")

    @property
    def epoch_cap(self) -> int:
        if self.max_epochs is not None:
            return self.max_epochs
        return 2000 if self.optimizer == "lm" else 20000

    @property
    def check_interval(self) -> int:
        if self.check_every is not None:
            return self.check_every
        return 1 if self.optimizer == "lm" else 50


def default_hidden(n_samples: int) -> int:
    return min(max(2 * math.ceil(math.sqrt(n_samples)), 8), 128)


def network_config(vocab_size: int, hidden: tuple[int, ...], config: TrainConfig, seed: int) -> NetworkConfig:
    return NetworkConfig(
        (vocab_size + 2, *hidden, 2),
        hidden_activation=config.hidden_activation,
        output_activation=config.output_activation,
        seed=seed,
    )


def file_seed(seed: int, file_id: int) -> int:
    return int(np.random.SeedSequence([seed, file_id]).generate_state(1, np.uint64)[0])


# -- encoding -----------------------------------------------------------------


def encode_inputs(kids, ordinals, degrees, meta: IannMeta) -> np.ndarray:
    kids = np.asarray(kids, dtype=np.int64)
    if kids.size and (kids.min() < 0 or kids.max() >= meta.vocab_size):
        bad = kids[(kids < 0) | (kids >= meta.vocab_size)][0]
        raise KeywordOutOfRange(f"keyword id {bad} outside dictionary of size {meta.vocab_size}")
    X = np.zeros((kids.size, meta.vocab_size + 2))
    X[np.arange(kids.size), kids] = 1.0
    X[:, meta.vocab_size] = np.asarray(ordinals, dtype=np.float64) / meta.n_max
    X[:, meta.vocab_size + 1] = degrees
    return X


def encode_input(q: QuerySpec, meta: IannMeta) -> np.ndarray:
    return encode_inputs([q.keyword_id], [q.ordinal], [q.degree], meta)[0]


def encode_target(position: int | None, count: int, meta: IannMeta) -> tuple[float, float]:
    if position is None:
        pos = SENTINEL
    else:
        pos = position / (meta.token_count - 1) if meta.token_count > 1 else 0.0
    return pos, count / meta.n_max


def _round_half_up(v: np.ndarray) -> np.ndarray:
    return np.floor(v + 0.5).astype(np.int64)


def decode_outputs(Y: np.ndarray, meta: IannMeta) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised decode; NOT_FOUND positions come back as -1."""
    Y = np.atleast_2d(Y)
    span = max(meta.token_count - 1, 0)
    pos = _round_half_up(np.clip(Y[:, 0], 0.0, 1.0) * span)
    pos = np.where(Y[:, 0] < SENTINEL_THRESHOLD, -1, pos)
    counts = _round_half_up(np.clip(Y[:, 1], 0.0, 1.0) * meta.n_max)
    return pos, counts


def decode_output(y, meta: IannMeta) -> tuple[int | None, int]:
    pos, counts = decode_outputs(np.asarray(y, dtype=np.float64), meta)
    return (None if pos[0] < 0 else int(pos[0])), int(counts[0])


# -- training data ------------------------------------------------------------


def training_probes(cdx: ClassicalIndex, vocab_size: int) -> list[tuple[int, int]]:
    """The (keyword, ordinal) enumeration a neuro-index is trained and validated on.

    Every occurrence of every present keyword, one ordinal past the last
    occurrence, and ordinal 1 for keywords absent from the file.
    """
    probes = []
    for kid in range(vocab_size):
        for ordinal in range(1, match_count(cdx, kid) + 2):
            probes.append((kid, ordinal))
    return probes


def _expected(cdx: ClassicalIndex, probes) -> tuple[np.ndarray, np.ndarray]:
    pos = np.array([-1 if (p := lookup(cdx, k, n)) is None else p for k, n in probes], dtype=np.int64)
    counts = np.array([match_count(cdx, k) for k, _ in probes], dtype=np.int64)
    return pos, counts


def build_training_set(cdx: ClassicalIndex, dictionary: Dictionary | int) -> tuple[np.ndarray, np.ndarray]:
    """Inputs and targets for fitting a neuro-index to ``cdx``."""
    vocab_size = dictionary if isinstance(dictionary, int) else len(dictionary)
    meta = IannMeta.for_index(cdx, vocab_size)
    probes = training_probes(cdx, vocab_size)
    if not probes:
        return np.zeros((0, vocab_size + 2)), np.zeros((0, 2))
    kids, ordinals = zip(*probes)
    X = encode_inputs(kids, ordinals, 0.0, meta)
    T = np.array([encode_target(lookup(cdx, k, n), match_count(cdx, k), meta) for k, n in probes])
    return X, T


# -- training -----------------------------------------------------------------


def _fit(net: Network, X, T, expected, meta: IannMeta, config: TrainConfig, shuffle_seed) -> tuple[bool, int]:
    """Train until every sample decodes exactly (within tolerance) or the cap is hit."""
    exp_pos, exp_cnt = expected

    def exact() -> bool:
        if not len(X):
            return True
        y = forward(net, X)[0]
        pos, cnt = decode_outputs(y, meta)
        if not (np.array_equal(pos, exp_pos) and np.array_equal(cnt, exp_cnt)):
            return False
        return config.tolerance is None or bool(np.max(np.abs(y[:, 1] - T[:, 1])) <= config.tolerance)

    converged = exact()
    epochs = 0
    lm = LevenbergMarquardt(damping=config.damping) if config.optimizer == "lm" else None
    rng = np.random.default_rng(shuffle_seed)
    try:
        while not converged and epochs < config.epoch_cap:
            if lm is not None:
                lm.step(net, X, T)
            elif config.batch_size is None or config.batch_size >= len(X):
                train_step(net, (X, T), config.lr)
            else:
                order = rng.permutation(len(X))
                for s in range(0, len(X), config.batch_size):
                    idx = order[s : s + config.batch_size]
                    train_step(net, (X[idx], T[idx]), config.lr)
            epochs += 1
            if lm is not None and lm.stalled:
                converged = exact()
                break
            if epochs % config.check_interval == 0 or epochs == config.epoch_cap:
                converged = exact()
    except NonFiniteLoss as exc:
        raise TrainingDiverged(f"file {meta.file_id}: {exc}") from exc
    return converged, epochs


def train_iann(
    cdx: ClassicalIndex,
    dictionary: Dictionary | int,
    config: TrainConfig = TrainConfig(),
    warm_start: Network | None = None,
) -> NeuroIndex:
    """Fit a neuro-index to ``cdx`` by backpropagation.

    Warns with :class:`TrainingNotConverged` and returns ``trained=False``
    when the epoch cap is hit before every probe decodes exactly.
    """
    config.validate()
    vocab_size = dictionary if isinstance(dictionary, int) else len(dictionary)
    meta = IannMeta.for_index(cdx, vocab_size)
    X, T = build_training_set(cdx, vocab_size)
    if warm_start is not None:
        net = warm_start.copy()
        if net.input_dim != vocab_size + 2 or net.output_dim != 2:
            raise InvalidConfig(
                f"warm start network is {net.config.layer_sizes}, need input {vocab_size + 2} and output 2"
            )
    else:
        hidden = config.hidden or (default_hidden(len(X)),)
        net = init_network(network_config(vocab_size, hidden, config, file_seed(config.seed, cdx.file_id)))
    expected = _expected(cdx, training_probes(cdx, vocab_size))
    converged, epochs = _fit(net, X, T, expected, meta, config, [config.seed, cdx.file_id])
    if not converged:
        warnings.warn(
            f"file {cdx.file_id}: not converged after {epochs} epochs; index flagged untrained",
            TrainingNotConverged,
            stacklevel=2,
        )
    return NeuroIndex(net, meta, trained=converged, epochs=epochs)


def initial_index(dictionary: Dictionary | int, config: TrainConfig = TrainConfig()) -> NeuroIndex:
    """A network mapping every keyword to (NOT_FOUND, count 0), as an index of the empty file.

    Used to warm-start per-file training so each file only has to learn
    where it deviates from the empty index.
    """
    config.validate()
    vocab_size = dictionary if isinstance(dictionary, int) else len(dictionary)
    empty = ClassicalIndex(file_id=0)
    X, T = build_training_set(empty, vocab_size)
    hidden = config.hidden or (default_hidden(len(X)),)
    net = init_network(network_config(vocab_size, hidden, config, config.seed))
    meta = IannMeta.for_index(empty, vocab_size)
    expected = _expected(empty, training_probes(empty, vocab_size))
    converged, epochs = _fit(net, X, T, expected, meta, config, [config.seed])
    if not converged:
        warnings.warn(f"initial network not converged after {epochs} epochs", TrainingNotConverged, stacklevel=2)
    return NeuroIndex(net, meta, trained=converged, epochs=epochs)


def pretrain_initial(dictionary: Dictionary | int, config: TrainConfig = TrainConfig()) -> Network:
    return initial_index(dictionary, config).network


# -- querying -----------------------------------------------------------------


def query_iann(nidx: NeuroIndex, q: QuerySpec) -> tuple[int | None, int]:
    y, _ = forward(nidx.network, encode_input(q, nidx.meta))
    return decode_output(y, nidx.meta)


def query_batch(nidx: NeuroIndex, kids, ordinals) -> tuple[np.ndarray, np.ndarray]:
    y, _ = forward(nidx.network, encode_inputs(kids, ordinals, 0.0, nidx.meta))
    return decode_outputs(y, nidx.meta)


def positions(nidx: NeuroIndex, kid: int) -> list[int]:
    """Positions of ``kid`` read back from the network.

    The count channel at ordinal 1 bounds the enumeration; it stops early
    at the first NOT_FOUND so an unconverged index still yields a prefix.
    """
    _, counts = query_batch(nidx, [kid], [1])
    n = int(counts[0])
    if n == 0:
        return []
    pos, _ = query_batch(nidx, [kid] * n, range(1, n + 1))
    out = []
    for p in pos:
        if p < 0:
            break
        out.append(int(p))
    return out


@dataclass(frozen=True)
class Mismatch:
    keyword_id: int
    ordinal: int
    expected_position: int | None
    expected_count: int
    position: int | None
    count: int


@dataclass
class ValidationReport:
    total: int
    exact: int
    mismatches: list[Mismatch] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.exact == self.total


def validate_iann(nidx: NeuroIndex, cdx: ClassicalIndex) -> ValidationReport:
    """Replay the full training enumeration and compare with the classical index."""
    probes = training_probes(cdx, nidx.meta.vocab_size)
    if not probes:
        return ValidationReport(0, 0)
    exp_pos, exp_cnt = _expected(cdx, probes)
    kids, ordinals = zip(*probes)
    pos, cnt = query_batch(nidx, kids, ordinals)
    bad = np.flatnonzero((pos != exp_pos) | (cnt != exp_cnt))
    as_pos = lambda p: None if p < 0 else int(p)  # noqa: E731
    mismatches = [
        Mismatch(kids[i], ordinals[i], as_pos(exp_pos[i]), int(exp_cnt[i]), as_pos(pos[i]), int(cnt[i]))
        for i in bad
    ]
    return ValidationReport(len(probes), len(probes) - len(bad), mismatches)


def signature(nidx: NeuroIndex, dictionary: Dictionary | None = None) -> np.ndarray:
    """Per-keyword count-channel response at ordinal 1, clamped to [0, 1]."""
    V = nidx.meta.vocab_size
    if dictionary is not None and len(dictionary) != V:
        raise InvalidConfig(f"dictionary has {len(dictionary)} entries, index was built for {V}")
    y, _ = forward(nidx.network, encode_inputs(np.arange(V), np.ones(V), 0.0, nidx.meta))
    return np.clip(y[:, 1], 0.0, 1.0)


# -- persistence --------------------------------------------------------------


def _header(nidx: NeuroIndex, widest: bool = False) -> dict:
    m, c = nidx.meta, nidx.network.config
    big = _WIDEST_INT
    return {
        "file_id": big if widest else m.file_id,
        "L": big if widest else m.token_count,
        "n_max": big if widest else m.n_max,
        "V": m.vocab_size,
        "encoding": m.encoding_version,
        "layer_sizes": list(c.layer_sizes),
        "activations": [c.hidden_activation, c.output_activation],
        "seed": big if widest else c.seed,
        "trained": False if widest else nidx.trained,
        "epochs": big if widest else nidx.epochs,
    }


def _dump(header: dict) -> bytes:
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")


def serialize_neuro(nidx: NeuroIndex) -> bytes:
    raw = _dump(_header(nidx))
    width = max(len(_dump(_header(nidx, widest=True))), len(raw))
    raw = raw.ljust(width, b" ")
    parts = [NDX_MAGIC, struct.pack("<HI", NDX_VERSION, len(raw)), raw]
    for w, b in zip(nidx.network.weights, nidx.network.biases):
        parts.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    return b"".join(parts)


def deserialize_neuro(data: bytes) -> NeuroIndex:
    if data[:4] != NDX_MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}, expected {NDX_MAGIC!r}")
    try:
        version, hlen = struct.unpack_from("<HI", data, 4)
        if version != NDX_VERSION:
            raise FormatError(f"unsupported neuro index version {version}")
        h = json.loads(data[10 : 10 + hlen].decode("utf-8"))
        config = NetworkConfig(tuple(h["layer_sizes"]), h["activations"][0], h["activations"][1], seed=h["seed"])
        off = 10 + hlen
        weights, biases = [], []
        for n_in, n_out in zip(config.layer_sizes[:-1], config.layer_sizes[1:]):
            w = np.frombuffer(data, dtype="<f8", count=n_in * n_out, offset=off).reshape(n_out, n_in)
            off += 8 * w.size
            b = np.frombuffer(data, dtype="<f8", count=n_out, offset=off)
            off += 8 * b.size
            weights.append(w.astype(np.float64))
            biases.append(b.astype(np.float64))
    except (struct.error, ValueError, KeyError, IndexError) as exc:
        raise FormatError(f"truncated or malformed neuro index: {exc}") from exc
    if off != len(data):
        raise FormatError(f"{len(data) - off} trailing bytes in neuro index")
    meta = IannMeta(h["file_id"], h["L"], h["n_max"], h["V"], h["encoding"])
    return NeuroIndex(Network(config, weights, biases), meta, bool(h["trained"]), int(h["epochs"]))


def persist_neuro(nidx: NeuroIndex, path: str | Path) -> int:
    data = serialize_neuro(nidx)
    Path(path).write_bytes(data)
    return len(data)


def load_neuro(path: str | Path) -> NeuroIndex:
    return deserialize_neuro(Path(path).read_bytes())


def meta_dict(nidx: NeuroIndex) -> dict:
    return {**asdict(nidx.meta), "layer_sizes": list(nidx.network.config.layer_sizes),
            "trained": nidx.trained, "epochs": nidx.epochs}
