"""Epochs to convergence with and without the pretrained all-negative network.

    python3 scripts/warm_start_study.py --files 5 --tokens 60 --vocab 20 --seed 7
"""

import argparse
import statistics

from neuroindex.bench import synth_corpus
from neuroindex.classical import build_classical
from neuroindex.engine import corpus_hidden
from neuroindex.iann import TrainConfig, initial_index, train_iann


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--files", type=int, default=5)
    p.add_argument("--tokens", type=int, default=60)
    p.add_argument("--vocab", type=int, default=20)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--train-seed", type=int, default=42)
    p.add_argument("--optimizer", choices=["lm", "gd"], default="lm")
    args = p.parse_args()

    corpus = synth_corpus(args.files, args.tokens, args.vocab, args.seed)
    V = len(corpus.dictionary)
    cdxs = [build_classical(f.tokens, corpus.dictionary, f.file_id) for f in corpus.files]
    cfg = TrainConfig(hidden=corpus_hidden(cdxs, V), optimizer=args.optimizer, seed=args.train_seed)
    init = initial_index(V, cfg)
    print(f"pretraining: {init.epochs} epochs, converged={init.trained}")
    cold = [train_iann(c, V, cfg) for c in cdxs]
    warm = [train_iann(c, V, cfg, warm_start=init.network) for c in cdxs]
    print(f"{'file':>5} {'cold':>6} {'warm':>6}")
    for c, w in zip(cold, warm):
        print(f"{c.meta.file_id:5d} {c.epochs:6d} {w.epochs:6d}")
    print(f"median  {statistics.median(n.epochs for n in cold):6g} {statistics.median(n.epochs for n in warm):6g}")


if __name__ == "__main__":
    main()
