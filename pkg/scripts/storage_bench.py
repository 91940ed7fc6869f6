"""Serialized index size as the number of occurrences grows.

Every file uses one fixed vocabulary and one network architecture, so the
neuro-index column stays flat while the postings file grows linearly.

    python3 scripts/storage_bench.py --sizes 100 1000 10000 --out storage.csv
"""

import argparse

import numpy as np

from neuroindex.bench import emit_report, measure_storage, synth_vocabulary
from neuroindex.corpus import Corpus
from neuroindex.iann import TrainConfig


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[100, 1000, 10000])
    p.add_argument("--vocab", type=int, default=50)
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default="storage.csv")
    args = p.parse_args()

    if min(args.sizes) < args.vocab:
        p.error("every size must be at least --vocab")
    words = synth_vocabulary(args.vocab)
    rng = np.random.default_rng(args.seed)
    named = []
    for n in args.sizes:
        # cover the full vocabulary first so every file shares the dictionary
        extra = [words[j] for j in rng.integers(0, args.vocab, n - args.vocab)]
        named.append((f"occ_{n:07d}.txt", list(words) + extra))
    corpus = Corpus.from_tokens(named)
    report = measure_storage(corpus, TrainConfig(hidden=(args.hidden,), seed=args.seed), train=False)
    emit_report(report, args.out)
    print(f"{'occurrences':>12} {'classical B':>12} {'neuro B':>10}")
    for r in sorted(report.rows, key=lambda r: r.occurrence_count):
        print(f"{r.occurrence_count:12d} {r.classical_bytes:12d} {r.neuro_bytes:10d}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
