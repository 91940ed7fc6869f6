"""Engine configuration as loaded from a JSON config file."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .corpus import DEFAULT_STOPWORDS
from .errors import InvalidConfig
from .iann import TrainConfig
from .som import SomConfig


@dataclass(frozen=True)
class MapSettings:
    grid: int | None = None
    cols: int | None = None
    epochs: int = 100
    alpha: float = 0.3
    radius: float | None = None
    beta: float = 0.05

    def som_config(self, dim: int, n_files: int, seed: int) -> SomConfig:
        return SomConfig(dim, seed=seed, **asdict(self)).resolve(n_files)


@dataclass(frozen=True)
class EngineConfig:
    """Everything that determines an index build; echoed into ``corpus.json``.

    ``network.hidden`` left unset is sized once for the whole corpus so every
    file shares one architecture (and can share a warm-start network).
    """

    network: TrainConfig = field(default_factory=TrainConfig)
    som: MapSettings = field(default_factory=MapSettings)
    stopwords: tuple[str, ...] = tuple(sorted(DEFAULT_STOPWORDS))
    warm_start: bool = True
    seed: int = 42

    def with_seed(self, seed: int) -> "EngineConfig":
        return replace(self, seed=seed)

    def train_config(self, hidden: tuple[int, ...]) -> TrainConfig:
        return replace(self.network, hidden=self.network.hidden or hidden, seed=self.seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stopwords"] = list(self.stopwords)
        d["network"].pop("seed")
        if d["network"]["hidden"] is not None:
            d["network"]["hidden"] = list(d["network"]["hidden"])
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "EngineConfig":
        _reject_unknown(data, cls, "config")
        kw = dict(data)
        if "network" in kw:
            net = dict(kw["network"])
            _reject_unknown(net, TrainConfig, "network", exclude={"seed"})
            if net.get("hidden") is not None:
                net["hidden"] = tuple(net["hidden"])
            kw["network"] = TrainConfig(**net)
            kw["network"].validate()
        if "som" in kw:
            _reject_unknown(kw["som"], MapSettings, "som")
            kw["som"] = MapSettings(**kw["som"])
        if "stopwords" in kw:
            if not isinstance(kw["stopwords"], list) or not all(isinstance(w, str) for w in kw["stopwords"]):
                raise InvalidConfig("stopwords must be a list of strings")
            kw["stopwords"] = tuple(sorted({w.lower() for w in kw["stopwords"]}))
        return cls(**kw)

    @classmethod
    def load(cls, path: str | Path) -> "EngineConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidConfig(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise InvalidConfig("config must be a JSON object")
        return cls.from_dict(data)


def _reject_unknown(data: dict, cls, where: str, exclude: set[str] = frozenset()) -> None:
    if not isinstance(data, dict):
        raise InvalidConfig(f"{where} must be a JSON object")
    allowed = {f.name for f in fields(cls)} - set(exclude)
    unknown = set(data) - allowed
    if unknown:
        raise InvalidConfig(f"unknown {where} keys: {sorted(unknown)}")
