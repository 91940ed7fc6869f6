"""Phrase search over neuro-indexes with any-time ranking snapshots.

A phrase becomes an ordered list of consecutive keyword pairs. The
associative map orders the files, a first snapshot ranks them by how close
their signature is to the query, and later snapshots replace that guess
with exact proximity scores batch by batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Iterable, Mapping, Sequence

import numpy as np

from .classical import ClassicalIndex, match_count
from .corpus import DEFAULT_STOPWORDS, Dictionary, tokenize
from .errors import EmptyQuery
from .iann import NeuroIndex, positions, query_batch

if TYPE_CHECKING:
    from .engine import Engine

DIRECT_WEIGHT = 1.0
REVERSE_WEIGHT = 0.5


@dataclass(frozen=True)
class QueryPlan:
    phrase: str
    terms: tuple[int, ...]
    pairs: tuple[tuple[int, ...], ...]
    dropped: tuple[str, ...] = ()


def split_pairs(phrase: str, dictionary: Dictionary, stopwords: Iterable[str] = DEFAULT_STOPWORDS) -> QueryPlan:
    tokens = tokenize(phrase, frozenset(stopwords))
    terms = tuple(dictionary.ids[t] for t in tokens if t in dictionary)
    dropped = tuple(t for t in tokens if t not in dictionary)
    if not terms:
        raise EmptyQuery(f"no known terms in {phrase!r}")
    if len(terms) == 1:
        pairs: tuple[tuple[int, ...], ...] = ((terms[0],),)
    else:
        pairs = tuple(zip(terms[:-1], terms[1:]))
    return QueryPlan(phrase, terms, pairs, dropped)


def probe_vector(plan: QueryPlan, dictionary: Dictionary | int) -> np.ndarray:
    v = np.zeros(dictionary if isinstance(dictionary, int) else len(dictionary))
    v[list(plan.terms)] = 1.0
    return v


def pair_score(first: Sequence[int], second: Sequence[int], same_term: bool = False) -> float:
    """Best ``w / (1 + gap)`` over occurrence pairs; ``w`` favours direct order."""
    if not len(first) or not len(second):
        return 0.0
    a = np.asarray(first)[:, None]
    b = np.asarray(second)[None, :]
    scores = np.where(a < b, DIRECT_WEIGHT, REVERSE_WEIGHT) / (1.0 + np.abs(a - b))
    if same_term:
        scores = np.where(a == b, 0.0, scores)
    return float(scores.max())


def proximity_score(
    plan: QueryPlan,
    positions_of: Callable[[int], Sequence[int]],
    count_of: Callable[[int], int],
    n_max: int,
) -> float:
    total = 0.0
    for pair in plan.pairs:
        if len(pair) == 1:
            total += count_of(pair[0]) / n_max
        else:
            a, b = pair
            total += pair_score(positions_of(a), positions_of(b), same_term=a == b)
    return total


def score_file(nidx: NeuroIndex, plan: QueryPlan) -> float:
    """Proximity score with positions read from the neuro-index."""
    cache: dict[int, list[int]] = {}

    def pos(kid: int) -> list[int]:
        if kid not in cache:
            cache[kid] = positions(nidx, kid)
        return cache[kid]

    def count(kid: int) -> int:
        return int(query_batch(nidx, [kid], [1])[1][0])

    return proximity_score(plan, pos, count, nidx.meta.n_max)


def score_classical(cdx: ClassicalIndex, plan: QueryPlan) -> float:
    """Same score with positions taken straight from the postings."""
    return proximity_score(plan, lambda k: cdx.postings.get(k, ()), lambda k: match_count(cdx, k), cdx.n_max)


@dataclass(frozen=True)
class Hit:
    file_id: int
    score: float
    scored: bool = True


@dataclass
class Snapshot:
    hits: list[Hit]
    final: bool = False

    @property
    def scored(self) -> set[int]:
        return {h.file_id for h in self.hits if h.scored}

    def ids(self) -> list[int]:
        return [h.file_id for h in self.hits]


@dataclass
class RankedResults:
    plan: QueryPlan
    snapshots: list[Snapshot] = field(default_factory=list)

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]


def rank(scores: Mapping[int, float], scored: bool = True) -> list[Hit]:
    """Score descending, ties by ascending file id."""
    return [Hit(fid, s, scored) for fid, s in sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))]


def search(engine: "Engine", phrase: str, k: int = 10, limit: int | None = None) -> RankedResults:
    """Any-time search.

    Snapshot 1 ranks the candidate pool by signature proximity. Each later
    snapshot exactly scores the next ``k`` candidates and lists every scored
    file ahead of the unscored ones. The last snapshot scores the whole pool
    and is marked final. ``limit`` caps the pool drawn from the map
    (default: every file).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    plan = split_pairs(phrase, engine.dictionary, engine.stopwords)
    probe = probe_vector(plan, engine.dictionary)
    all_ids = [f.file_id for f in engine.files]
    pool = engine.som.candidates(probe, limit or len(all_ids), fallback=all_ids)
    dist = np.linalg.norm(engine.signatures[pool] - probe, axis=1)
    guess = {fid: 1.0 / (1.0 + d) for fid, d in zip(pool, dist)}
    order = [h.file_id for h in rank(guess)]
    results = RankedResults(plan, [Snapshot(rank(guess, scored=False))])
    exact: dict[int, float] = {}
    for start in range(0, len(order), k):
        for fid in sorted(order[start : start + k]):
            exact[fid] = score_file(engine.neuro[fid], plan)
        pending = {fid: guess[fid] for fid in order if fid not in exact}
        last = start + k >= len(order)
        results.snapshots.append(Snapshot(rank(exact) + rank(pending, scored=False), final=last))
    return results


def exhaustive_ranking(engine: "Engine", plan: QueryPlan, file_ids: Iterable[int] | None = None) -> list[Hit]:
    """Reference path: score every file with the neuro-index, no any-time rounds."""
    ids = [f.file_id for f in engine.files] if file_ids is None else list(file_ids)
    return rank({fid: score_file(engine.neuro[fid], plan) for fid in ids})


def classical_search(engine: "Engine", phrase: str) -> list[Hit]:
    """Baseline engine: postings scan of every file with the same scoring."""
    plan = split_pairs(phrase, engine.dictionary, engine.stopwords)
    return rank({c.file_id: score_classical(c, plan) for c in engine.classical})
