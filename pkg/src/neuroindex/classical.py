"""Per-file positional inverted index.

This is the baseline the neuro-index is compared against, and the oracle
it is trained from.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .corpus import Dictionary
from .errors import FormatError, UnknownToken

CDX_MAGIC = b"CDX1"
CDX_VERSION = 1


@dataclass
class ClassicalIndex:
    file_id: int
    postings: dict[int, list[int]] = field(default_factory=dict)
    token_count: int = 0
    n_max: int = 1

    def lookup(self, kid: int, ordinal: int) -> int | None:
        """Position of the ``ordinal``-th (1-based) occurrence, or None."""
        return lookup(self, kid, ordinal)

    def match_count(self, kid: int) -> int:
        return match_count(self, kid)

    def occurrences(self) -> int:
        return sum(len(p) for p in self.postings.values())

    def pairs(self) -> Iterator[tuple[int, int]]:
        for kid, positions in self.postings.items():
            for p in positions:
                yield kid, p


def build_classical(tokens: Sequence[str], dictionary: Dictionary, file_id: int) -> ClassicalIndex:
    postings: dict[int, list[int]] = {}
    for pos, tok in enumerate(tokens):
        kid = dictionary.get(tok)
        if kid is None:
            raise UnknownToken(f"token {tok!r} at position {pos} is not in the dictionary")
        postings.setdefault(kid, []).append(pos)
    postings = dict(sorted(postings.items()))
    n_max = max((len(p) for p in postings.values()), default=1)
    return ClassicalIndex(file_id, postings, len(tokens), n_max)


def lookup(idx: ClassicalIndex, kid: int, ordinal: int) -> int | None:
    if ordinal < 1:
        raise ValueError(f"ordinal must be >= 1, got {ordinal}")
    positions = idx.postings.get(kid, ())
    return positions[ordinal - 1] if ordinal <= len(positions) else None


def match_count(idx: ClassicalIndex, kid: int) -> int:
    return len(idx.postings.get(kid, ()))


def _header_bytes(header: dict) -> bytes:
    raw = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def serialize_classical(idx: ClassicalIndex) -> bytes:
    header = {
        "file_id": idx.file_id,
        "L": idx.token_count,
        "n_max": idx.n_max,
        "num_keywords": len(idx.postings),
    }
    parts = [CDX_MAGIC, struct.pack("<H", CDX_VERSION), _header_bytes(header)]
    for kid, positions in idx.postings.items():
        parts.append(struct.pack("<II", kid, len(positions)))
        parts.append(np.asarray(positions, dtype="<u4").tobytes())
    return b"".join(parts)


def deserialize_classical(data: bytes) -> ClassicalIndex:
    if data[:4] != CDX_MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}, expected {CDX_MAGIC!r}")
    try:
        (version,) = struct.unpack_from("<H", data, 4)
        if version != CDX_VERSION:
            raise FormatError(f"unsupported classical index version {version}")
        (hlen,) = struct.unpack_from("<I", data, 6)
        header = json.loads(data[10 : 10 + hlen].decode("utf-8"))
        off = 10 + hlen
        postings: dict[int, list[int]] = {}
        for _ in range(header["num_keywords"]):
            kid, count = struct.unpack_from("<II", data, off)
            off += 8
            positions = np.frombuffer(data, dtype="<u4", count=count, offset=off)
            off += 4 * count
            postings[int(kid)] = positions.astype(int).tolist()
    except (struct.error, ValueError, KeyError) as exc:
        raise FormatError(f"truncated or malformed classical index: {exc}") from exc
    if off != len(data):
        raise FormatError(f"{len(data) - off} trailing bytes in classical index")
    return ClassicalIndex(header["file_id"], postings, header["L"], header["n_max"])


def persist_classical(idx: ClassicalIndex, path: str | Path) -> int:
    """Write ``idx`` to ``path``; returns the byte size written."""
    data = serialize_classical(idx)
    Path(path).write_bytes(data)
    return len(data)


def load_classical(path: str | Path) -> ClassicalIndex:
    return deserialize_classical(Path(path).read_bytes())
