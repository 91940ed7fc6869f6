"""Tokenization, keyword dictionary and corpus loading."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import DecodeError, EmptyCorpus, MissingRoot

# \w minus underscore: Unicode letters and digits only.
TOKEN_RE = re.compile(r"[^\W_]+")

DEFAULT_STOPWORDS = frozenset({"a", "an", "and", "the", "to", "for", "of", "in", "on", "is"})


def tokenize(text: str, stopwords: Iterable[str] = DEFAULT_STOPWORDS) -> list[str]:
    """Split ``text`` into lowercase tokens, dropping stopwords.

    A token's position is its index in the returned list, so positions are
    compacted after stopword removal.
    """
    stop = stopwords if isinstance(stopwords, (set, frozenset)) else set(stopwords)
    return [t for t in TOKEN_RE.findall(text.lower()) if t not in stop]


def load_stopwords(path: str | Path) -> frozenset[str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return frozenset(w.strip().lower() for w in lines if w.strip())


class Dictionary:
    """Dense bijection between keywords and ids ``0..V-1``."""

    def __init__(self, words: Sequence[str] = ()):
        self.words: list[str] = list(words)
        self.ids: dict[str, int] = {w: i for i, w in enumerate(self.words)}
        if len(self.ids) != len(self.words):
            raise ValueError("duplicate keyword in dictionary")

    def __len__(self) -> int:
        return len(self.words)

    def __iter__(self) -> Iterator[str]:
        return iter(self.words)

    def __contains__(self, word: object) -> bool:
        return word in self.ids

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Dictionary) and self.words == other.words

    def __repr__(self) -> str:
        return f"Dictionary(V={len(self)})"

    def id(self, word: str) -> int:
        return self.ids[word]

    def get(self, word: str) -> int | None:
        return self.ids.get(word)

    def word(self, kid: int) -> str:
        return self.words[kid]


def build_dictionary(seqs: Iterable[Sequence[str]]) -> Dictionary:
    """Assign ids in first-seen order over ``seqs`` taken in the given order."""
    seen: dict[str, None] = {}
    for seq in seqs:
        for tok in seq:
            seen.setdefault(tok, None)
    return Dictionary(list(seen))


@dataclass
class CorpusFile:
    file_id: int
    path: str
    tokens: list[str]


@dataclass
class Corpus:
    files: list[CorpusFile]
    dictionary: Dictionary = field(default_factory=Dictionary)

    def __len__(self) -> int:
        return len(self.files)

    @classmethod
    def from_texts(cls, named_texts: Iterable[tuple[str, str]], stopwords=DEFAULT_STOPWORDS) -> "Corpus":
        """Build a corpus from ``(name, text)`` pairs; names are sorted first."""
        items = sorted(named_texts, key=lambda nt: nt[0].encode("utf-8"))
        return cls.from_tokens([(n, tokenize(t, stopwords)) for n, t in items])

    @classmethod
    def from_tokens(cls, named_tokens: Sequence[tuple[str, list[str]]]) -> "Corpus":
        files = [CorpusFile(i, name, list(toks)) for i, (name, toks) in enumerate(named_tokens)]
        return cls(files, build_dictionary(f.tokens for f in files))


def load_corpus(root: str | Path, stopwords: Iterable[str] = DEFAULT_STOPWORDS) -> Corpus:
    root = Path(root)
    if not root.exists():
        raise MissingRoot(f"{root}: no such directory")
    paths = [root] if root.is_file() else [p for p in root.rglob("*") if p.is_file()]
    if not paths:
        raise EmptyCorpus(f"{root}: no files found")
    base = root.parent if root.is_file() else root
    named = []
    for p in paths:
        try:
            text = p.read_bytes().decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError(p, f"({exc.reason} at byte {exc.start})") from exc
        named.append((p.relative_to(base).as_posix(), text))
    return Corpus.from_texts(named, frozenset(stopwords))
