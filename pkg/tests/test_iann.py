import statistics
import struct
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neuroindex.bench import synth_corpus
from neuroindex.classical import ClassicalIndex, build_classical, lookup, match_count
from neuroindex.corpus import build_dictionary
from neuroindex.engine import corpus_hidden
from neuroindex.errors import FormatError, InvalidConfig, KeywordOutOfRange
from neuroindex.iann import (
    IannMeta,
    NeuroIndex,
    QuerySpec,
    TrainConfig,
    TrainingNotConverged,
    build_training_set,
    decode_output,
    deserialize_neuro,
    encode_input,
    initial_index,
    load_neuro,
    persist_neuro,
    positions,
    pretrain_initial,
    query_iann,
    serialize_neuro,
    signature,
    train_iann,
    validate_iann,
)
from neuroindex.nn import init_network, NetworkConfig


def meta(L=5, n_max=2, V=4):
    return IannMeta(file_id=0, token_count=L, n_max=n_max, vocab_size=V)


def test_encode_examples():
    assert encode_input(QuerySpec(0, 1, 0.0), meta(n_max=1, V=4)).tolist() == [1, 0, 0, 0, 1.0, 0.0]
    assert encode_input(QuerySpec(1, 2, 0.5), meta(n_max=4, V=2)).tolist() == [0, 1, 0.5, 0.5]
    with pytest.raises(KeywordOutOfRange):
        encode_input(QuerySpec(4, 1), meta(V=4))


def test_query_spec_validation():
    with pytest.raises(ValueError):
        QuerySpec(0, 0)
    with pytest.raises(ValueError):
        QuerySpec(0, 1, 1.5)


def test_decode_examples():
    assert decode_output([0.5, 0.5], meta(L=5, n_max=2)) == (2, 1)
    assert decode_output([-1.0, 0.0], meta()) == (None, 0)
    # just above the sentinel threshold: clamp to 0 then round
    assert decode_output([-0.49, 1.0], meta(L=3, n_max=1)) == (0, 1)
    assert decode_output([7.0, 3.0], meta(L=3, n_max=2)) == (2, 2)


def test_training_set_counts(tobe_cdx, tobe_corpus):
    X, T = build_training_set(tobe_cdx, tobe_corpus.dictionary)
    # 6 occurrences + one past-the-end probe per keyword
    assert len(X) == 10
    assert (T[:, 0] == -1).sum() == 4
    to = tobe_corpus.dictionary.id("to")
    rows = np.flatnonzero(X[:, to] == 1)
    assert T[rows].tolist() == [[0.0, 1.0], [0.8, 1.0], [-1.0, 1.0]]


def test_training_set_empty_and_singleton():
    X, T = build_training_set(ClassicalIndex(0), 2)
    assert len(X) == 2 and T.tolist() == [[-1, 0], [-1, 0]]
    one = build_classical(["x"], build_dictionary([["x"]]), 0)
    X, T = build_training_set(one, 1)
    assert T.tolist() == [[0.0, 1.0], [-1.0, 1.0]]


def test_tobe_queries_match_oracle(tobe_iann, tobe_cdx, tobe_corpus):
    d = tobe_corpus.dictionary
    assert tobe_iann.trained
    assert query_iann(tobe_iann, QuerySpec(d.id("to"), 1)) == (0, 2)
    assert query_iann(tobe_iann, QuerySpec(d.id("to"), 2)) == (4, 2)
    assert query_iann(tobe_iann, QuerySpec(d.id("to"), 3)) == (None, 2)
    assert query_iann(tobe_iann, QuerySpec(d.id("or"), 1)) == (2, 1)
    for kid in range(len(d)):
        assert positions(tobe_iann, kid) == tobe_cdx.postings[kid]
    with pytest.raises(KeywordOutOfRange):
        query_iann(tobe_iann, QuerySpec(len(d), 1))


def test_empty_file_trains_to_all_not_found():
    nidx = train_iann(ClassicalIndex(0), 3)
    assert nidx.trained
    assert all(query_iann(nidx, QuerySpec(k, 1)) == (None, 0) for k in range(3))
    report = validate_iann(nidx, ClassicalIndex(0))
    assert report.total == report.exact == 3


def test_epoch_cap_flags_untrained(tobe_cdx):
    with pytest.warns(TrainingNotConverged):
        nidx = train_iann(tobe_cdx, 4, TrainConfig(max_epochs=1))
    assert not nidx.trained and nidx.epochs == 1


def test_gd_optimizer_path_runs(tobe_cdx):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TrainingNotConverged)
        nidx = train_iann(tobe_cdx, 4, TrainConfig(optimizer="gd", max_epochs=120, batch_size=3))
    assert nidx.epochs <= 120
    assert nidx.network.is_finite()


def test_validation_reports(tobe_iann, tobe_cdx):
    ok = validate_iann(tobe_iann, tobe_cdx)
    assert ok.ok and ok.exact == ok.total == 10 and not ok.mismatches
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TrainingNotConverged)
        fresh = train_iann(tobe_cdx, 4, TrainConfig(max_epochs=0, seed=42))
    bad = validate_iann(fresh, tobe_cdx)
    assert bad.exact < bad.total
    assert len(bad.mismatches) == bad.total - bad.exact
    m = bad.mismatches[0]
    assert m.expected_position == lookup(tobe_cdx, m.keyword_id, m.ordinal)


def test_signature_of_converged_file():
    d = build_dictionary([["buy", "holiday", "what"]])
    cdx = build_classical(["buy", "holiday"], d, 0)
    nidx = train_iann(cdx, d)
    assert nidx.trained
    np.testing.assert_allclose(signature(nidx, d), [1.0, 1.0, 0.0], atol=0.02)
    assert np.allclose(signature(train_iann(ClassicalIndex(1), d)), 0.0, atol=0.02)


def test_signature_count_normalisation():
    d = build_dictionary([["a", "b"]])
    cdx = build_classical(["a", "b", "a"], d, 0)
    sig = signature(train_iann(cdx, d))
    # a appears n_max = 2 times, b once
    np.testing.assert_allclose(sig, [1.0, 0.5], atol=0.02)


def test_pretrained_network_says_not_found():
    d = build_dictionary([["alpha", "beta", "gamma", "delta"]])
    init = initial_index(d)
    assert init.trained
    probe = NeuroIndex(init.network, IannMeta(0, 10, 3, len(d)), trained=True)
    assert all(query_iann(probe, QuerySpec(k, 1))[0] is None for k in range(len(d)))
    assert pretrain_initial(d).equals(init.network)


def test_pretrain_single_keyword_epochs():
    init = initial_index(1)
    assert init.trained and init.epochs < 500
    # regression value measured with the default config
    assert init.epochs == 2


def test_warm_start_needs_matching_shape(tobe_cdx):
    with pytest.raises(InvalidConfig):
        train_iann(tobe_cdx, 4, warm_start=init_network(NetworkConfig((5, 3, 2))))


def test_warm_start_is_not_slower_than_cold_start():
    corpus = synth_corpus(5, 60, 20, seed=7)
    V = len(corpus.dictionary)
    cdxs = [build_classical(f.tokens, corpus.dictionary, f.file_id) for f in corpus.files]
    cfg = TrainConfig(hidden=corpus_hidden(cdxs, V), seed=42)
    warm_net = pretrain_initial(V, cfg)
    cold = [train_iann(c, V, cfg) for c in cdxs]
    warm = [train_iann(c, V, cfg, warm_start=warm_net) for c in cdxs]
    assert all(n.trained for n in cold + warm)
    cold_median = statistics.median(n.epochs for n in cold)
    warm_median = statistics.median(n.epochs for n in warm)
    # measured: cold 70, warm 59
    assert (cold_median, warm_median) == (70, 59)
    assert warm_median <= cold_median


def test_round_trip_is_bitwise(tobe_iann, tmp_path):
    path = tmp_path / "f.ndx"
    size = persist_neuro(tobe_iann, path)
    back = load_neuro(path)
    assert path.stat().st_size == size
    assert back.network.equals(tobe_iann.network)
    assert back.meta == tobe_iann.meta
    assert (back.trained, back.epochs) == (tobe_iann.trained, tobe_iann.epochs)


def test_corrupted_version(tobe_iann):
    data = serialize_neuro(tobe_iann)
    with pytest.raises(FormatError):
        deserialize_neuro(data[:4] + struct.pack("<H", 2) + data[6:])
    with pytest.raises(FormatError):
        deserialize_neuro(b"NDX0" + data[4:])
    with pytest.raises(FormatError):
        deserialize_neuro(data[:-8])


def test_size_is_header_plus_parameters(tobe_iann):
    data = serialize_neuro(tobe_iann)
    (hlen,) = struct.unpack_from("<I", data, 6)
    assert len(data) == 10 + hlen + 8 * tobe_iann.network.n_params


def test_size_independent_of_occurrences():
    d = build_dictionary([["a", "b", "c"]])
    cfg = TrainConfig(hidden=(8,), max_epochs=0)
    sizes = set()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TrainingNotConverged)
        for fid, tokens in enumerate([[], ["a"], ["a", "b", "c"] * 300]):
            nidx = train_iann(build_classical(tokens, d, fid), d, cfg)
            nidx.epochs = 10**9 * fid
            sizes.add(len(serialize_neuro(nidx)))
    assert len(sizes) == 1


small_files = st.lists(st.sampled_from(["ab", "cd", "ef", "gh"]), max_size=10)


@settings(max_examples=10, deadline=None)
@given(small_files)
def test_converged_index_agrees_with_classical(tokens):
    d = build_dictionary([["ab", "cd", "ef", "gh"]])
    cdx = build_classical(tokens, d, 0)
    nidx = train_iann(cdx, d, TrainConfig(seed=1))
    assert nidx.trained
    for kid in range(len(d)):
        seen_missing = False
        for n in range(1, match_count(cdx, kid) + 2):
            pos, count = query_iann(nidx, QuerySpec(kid, n))
            assert pos == lookup(cdx, kid, n)
            assert count == match_count(cdx, kid)
            # once NOT_FOUND, stays NOT_FOUND over the enumerated range
            assert not (seen_missing and pos is not None)
            seen_missing |= pos is None


def test_training_is_deterministic(tobe_cdx, tobe_iann):
    again = train_iann(tobe_cdx, 4, TrainConfig(seed=42))
    assert serialize_neuro(again) == serialize_neuro(tobe_iann)
