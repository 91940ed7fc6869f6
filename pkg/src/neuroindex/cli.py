"""``neuroindex`` command line.

Exit codes: 0 success, 1 usage error, 2 data error, 3 training failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path

from . import bench
from .config import EngineConfig
from .corpus import load_corpus, load_stopwords
from .engine import build_engine, load_engine, save_engine
from .errors import DataError, NeuroIndexError, TrainingDiverged, UsageError
from .iann import meta_dict, validate_iann
from .search import search

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_TRAINING = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="neuroindex", description="Text search over per-file neural indexes.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    ix = sub.add_parser("index", help="index a directory of text files")
    ix.add_argument("src")
    ix.add_argument("--out", required=True, help="engine directory to write")
    ix.add_argument("--config", help="JSON config file")
    ix.add_argument("--seed", type=int)
    ix.add_argument("--stopwords", help="newline-delimited stopword file")
    ix.add_argument("--jobs", type=int, default=1, help="parallel training processes")

    q = sub.add_parser("query", help="search an engine directory")
    q.add_argument("engine")
    q.add_argument("phrase")
    q.add_argument("--k", type=int, default=10, help="files scored per refinement round")
    q.add_argument("--anytime", action="store_true", help="print every snapshot")
    q.add_argument("--json", action="store_true", help="JSON lines output")

    b = sub.add_parser("bench", help="storage and latency reports")
    b.add_argument("engine", nargs="?")
    b.add_argument("--synth", help="F,T,V: synthetic corpus of F files, T tokens each, V words")
    b.add_argument("--out", required=True, help="storage report path (.csv or .json)")
    b.add_argument("--queries", help="file with one query phrase per line")
    b.add_argument("--reps", type=int, default=5)
    b.add_argument("--seed", type=int, default=42)

    ins = sub.add_parser("inspect", help="dump index metadata and validation")
    ins.add_argument("engine")
    ins.add_argument("--file", type=int, help="restrict to one file id")
    return p


def cmd_index(args) -> int:
    config = EngineConfig.load(args.config) if args.config else EngineConfig()
    if args.seed is not None:
        config = config.with_seed(args.seed)
    if args.stopwords:
        config = replace(config, stopwords=tuple(sorted(load_stopwords(args.stopwords))))
    corpus = load_corpus(args.src, config.stopwords)
    engine = build_engine(corpus, config, jobs=args.jobs)
    save_engine(engine, args.out)
    for entry, nidx in zip(engine.files, engine.neuro):
        status = "ok" if nidx.trained else "NOT CONVERGED"
        print(f"{entry.file_id:5d}  {status:13s}  epochs={nidx.epochs:<6d} {entry.path}")
    done = sum(n.trained for n in engine.neuro)
    print(f"indexed {len(engine.files)} files, {len(engine.dictionary)} keywords, {done} converged -> {args.out}")
    return EXIT_OK


def _snapshot_json(engine, i, snap) -> str:
    hits = [
        {"file_id": h.file_id, "path": engine.files[h.file_id].path, "score": h.score, "scored": h.scored}
        for h in snap.hits
    ]
    return json.dumps({"snapshot": i, "final": snap.final, "results": hits})


def cmd_query(args) -> int:
    engine = load_engine(args.engine)
    results = search(engine, args.phrase, k=args.k)
    snaps = list(enumerate(results.snapshots)) if args.anytime else [(len(results.snapshots) - 1, results.final)]
    for i, snap in snaps:
        if args.json:
            print(_snapshot_json(engine, i, snap))
            continue
        if args.anytime:
            print(f"-- snapshot {i}{' (final)' if snap.final else ''}")
        for rank, h in enumerate(snap.hits, 1):
            mark = "" if h.scored else "  ~"
            print(f"{rank:4d}  {h.score:8.4f}  {engine.files[h.file_id].path}{mark}")
    return EXIT_OK


def _latency_path(out: Path) -> Path:
    return out.with_name(f"{out.stem}_latency{out.suffix}")


def cmd_bench(args) -> int:
    if bool(args.engine) == bool(args.synth):
        raise UsageError("bench needs exactly one of <engine-dir> or --synth F,T,V")
    if args.synth:
        try:
            f, t, v = (int(x) for x in args.synth.split(","))
        except ValueError as exc:
            raise UsageError(f"--synth expects F,T,V integers, got {args.synth!r}") from exc
        corpus = bench.synth_corpus(f, t, v, args.seed)
        engine = build_engine(corpus, EngineConfig(seed=args.seed))
    else:
        engine = load_engine(args.engine)
    if args.queries:
        lines = Path(args.queries).read_text(encoding="utf-8").splitlines()
        queries = [q.strip() for q in lines if q.strip()]
    else:
        queries = bench.default_queries(engine, seed=args.seed)
    out = Path(args.out)
    storage = bench.storage_from_engine(engine)
    bench.emit_report(storage, out)
    latency = bench.measure_latency(engine, queries, reps=args.reps)
    bench.emit_report(latency, _latency_path(out))
    agree = bench.top1_agreement(engine, queries)
    same = sum(a == b for _, a, b in agree)
    ratio = latency.speed_ratio()
    print(f"storage report: {out} ({len(storage)} files)")
    print(f"latency report: {_latency_path(out)} ({len(queries)} queries)")
    print(f"top-1 agreement: {same}/{len(agree)}")
    print(f"classical/neuro median latency ratio: {ratio:.3f} ({'neuro' if ratio > 1 else 'classical'} faster)")
    return EXIT_OK


def cmd_inspect(args) -> int:
    engine = load_engine(args.engine)
    ids = [args.file] if args.file is not None else [f.file_id for f in engine.files]
    files = []
    for fid in ids:
        if not 0 <= fid < len(engine.files):
            raise DataError(f"no file with id {fid}")
        report = validate_iann(engine.neuro[fid], engine.classical[fid])
        entry = {
            "path": engine.files[fid].path,
            **meta_dict(engine.neuro[fid]),
            "validation": {"total": report.total, "exact": report.exact},
        }
        if args.file is not None:
            entry["validation"]["mismatches"] = [asdict(m) for m in report.mismatches]
        files.append(entry)
    som = engine.som
    out = {
        "dictionary_size": len(engine.dictionary),
        "files": files,
        "som": {
            "shape": list(som.shape),
            "error_history": som.history,
            "labels": {str(i): sorted(l) for i, l in enumerate(som.labels) if l},
        },
    }
    print(json.dumps(out, indent=1))
    return EXIT_OK


COMMANDS = {"index": cmd_index, "query": cmd_query, "bench": cmd_bench, "inspect": cmd_inspect}


def run(argv: list[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingDiverged as exc:
        print(f"training failed: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NeuroIndexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
