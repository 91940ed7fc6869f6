import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neuroindex.bench import (
    LatencyReport,
    StorageReport,
    StorageRow,
    default_queries,
    emit_report,
    measure_latency,
    measure_storage,
    storage_from_engine,
    synth_corpus,
    synth_vocabulary,
    top1_agreement,
)
from neuroindex.classical import build_classical
from neuroindex.corpus import Corpus
from neuroindex.errors import InvalidParams
from neuroindex.iann import TrainConfig

# magic 4 + version 2 + header length 4 bytes
CDX_PREAMBLE = 10


def test_synth_determinism_and_shape():
    a, b = synth_corpus(2, 10, 5, seed=1), synth_corpus(2, 10, 5, seed=1)
    assert [f.tokens for f in a.files] == [f.tokens for f in b.files]
    assert [f.path for f in a.files] == ["synth_00000.txt", "synth_00001.txt"]
    assert [f.tokens for f in synth_corpus(2, 10, 5, seed=2).files] != [f.tokens for f in a.files]


def test_synth_single_word_vocabulary():
    corpus = synth_corpus(1, 10, 1, seed=3)
    assert len(set(corpus.files[0].tokens)) == 1
    cdx = build_classical(corpus.files[0].tokens, corpus.dictionary, 0)
    assert cdx.postings[0] == list(range(10))


def test_synth_rejects_bad_sizes():
    for args in [(1, 0, 5), (0, 1, 1), (1, 1, 0)]:
        with pytest.raises(InvalidParams):
            synth_corpus(*args, seed=0)


def test_vocabulary_words_are_distinct_tokens():
    words = synth_vocabulary(500)
    assert len(set(words)) == 500
    assert all(w.isalpha() and len(w) >= 4 for w in words)


def storage_corpus(sizes, vocab=20, seed=0):
    words = synth_vocabulary(vocab)
    rng = np.random.default_rng(seed)
    named = [(f"f{i}.txt", [words[j] for j in rng.integers(0, vocab, n)]) for i, n in enumerate(sizes)]
    # make sure every file sees the full vocabulary in the shared dictionary
    named.append(("vocab.txt", list(words)))
    return Corpus.from_tokens(named)


def test_storage_scaling():
    corpus = storage_corpus([100, 1000])
    report = measure_storage(corpus, TrainConfig(hidden=(16,)), train=False)
    by_path = {corpus.files[r.file_id].path: r for r in report.rows}
    small, large = by_path["f0.txt"], by_path["f1.txt"]
    assert (small.occurrence_count, large.occurrence_count) == (100, 1000)
    assert large.classical_bytes / small.classical_bytes >= 5
    assert len({r.neuro_bytes for r in report.rows}) == 1


@settings(max_examples=10)
@given(st.lists(st.integers(0, 300), min_size=2, max_size=5, unique=True))
def test_classical_bytes_affine_in_occurrences(sizes):
    corpus = storage_corpus(sorted(sizes), vocab=5)
    rows = measure_storage(corpus, TrainConfig(hidden=(8,)), train=False).rows[:-1]
    occ = np.array([r.occurrence_count for r in rows])
    cb = np.array([r.classical_bytes for r in rows])
    assert np.all(np.diff(cb) > 0)
    # four bytes per posting on top of an occurrence-independent overhead
    # (keyword records plus a short JSON header)
    overhead = cb - 4 * occ
    assert overhead.max() - overhead.min() <= 8 * 5 + 8
    assert len({r.neuro_bytes for r in rows}) == 1


def test_empty_file_is_header_only(tmp_path):
    corpus = Corpus.from_tokens([("empty.txt", []), ("x.txt", ["lone"])])
    report = measure_storage(corpus, TrainConfig(hidden=(8,)), out_dir=tmp_path, train=False)
    empty = report.rows[0]
    assert empty.occurrence_count == 0
    header = (tmp_path / "00000.cdx").read_bytes()
    (hlen,) = np.frombuffer(header[6:10], dtype="<u4")
    assert empty.classical_bytes == CDX_PREAMBLE + int(hlen) == len(header)


def test_trained_storage_matches_engine(relevance_engine, relevance_corpus):
    report = storage_from_engine(relevance_engine)
    assert len(report) == len(relevance_corpus.files)
    assert len({r.neuro_bytes for r in report.rows}) == 1


def test_emit_csv_and_json(tmp_path):
    rows = [StorageRow(0, 3, 3, 50, 900), StorageRow(1, 0, 0, 30, 900)]
    path = emit_report(StorageReport(rows), tmp_path / "s.csv")
    lines = path.read_text().splitlines()
    assert len(lines) == 3
    assert lines[0].split(",") == StorageReport.field_names()
    with path.open() as fh:
        assert [int(r["classical_bytes"]) for r in csv.DictReader(fh)] == [50, 30]
    jpath = emit_report(StorageReport(rows), tmp_path / "s.json")
    assert [StorageRow(**r) for r in json.loads(jpath.read_text())] == rows
    empty = emit_report(LatencyReport([]), tmp_path / "l.csv")
    assert empty.read_text().splitlines() == [",".join(LatencyReport.field_names())]
    with pytest.raises(InvalidParams):
        emit_report(StorageReport(rows), tmp_path / "s.txt", fmt="xml")


def test_csv_quotes_awkward_queries(tmp_path):
    from neuroindex.bench import LatencyRow

    row = LatencyRow('say "hi", then', "neuro", 5, 7, 3)
    path = emit_report(LatencyReport([row]), tmp_path / "l.csv")
    with path.open(newline="") as fh:
        back = list(csv.DictReader(fh))
    assert back[0]["query"] == row.query


def test_latency_report_shape(relevance_engine):
    queries = ["cheap flights", "coffee"]
    report = measure_latency(relevance_engine, queries, reps=3, warmup=1)
    assert len(report) == 2 * len(queries)
    assert {(r.query, r.engine) for r in report.rows} == {(q, e) for q in queries for e in ("classical", "neuro")}
    assert all(0 < r.median_ns <= r.p90_ns and r.repetitions == 3 for r in report.rows)
    assert report.speed_ratio() > 0
    with pytest.raises(InvalidParams):
        measure_latency(relevance_engine, queries, reps=2)


def test_top1_agreement_on_converged_engine(relevance_engine):
    queries = default_queries(relevance_engine, count=8, seed=3)
    assert len(queries) == 8
    agree = top1_agreement(relevance_engine, queries)
    assert [q for q, _, _ in agree] == queries
    assert all(a == b for _, a, b in agree)
