"""
Top-N and relative-threshold sweeps on a synthetic corpus
=========================================================

A seeded generator plants a letter sequence under peaked CTC posteriors, so
every configuration can be scored against a known reference. The sweep
prints WER, mean beam count and the number of hypothesis expansions.

Run with a smaller corpus for a quick look:  python3 02_synthetic_sweep.py 10
"""

import sys

from fltop import DecoderConfig, letter_vocabulary
from fltop.bench import Utterance, sweep_relthres, sweep_topn
from fltop.emissions import generate_corpus

num_utts = int(sys.argv[1]) if len(sys.argv) > 1 else 20
vocab = letter_vocabulary()
corpus = generate_corpus(num_utts, 200, vocab.size, 50.0, 42,
                         blank_id=vocab.blank_id, word_sep_id=vocab.word_sep_id,
                         label_ids=range(vocab.word_sep_id + 1, vocab.size))
utts = [Utterance(f"utt{i:03d}", em, vocab.render(ref)) for i, (em, ref) in enumerate(corpus)]
print(f"{num_utts} utterances, {sum(u.emissions.num_frames for u in utts)} frames")

# no LM: word_score still rewards separators, as in the baseline setting
cfg = DecoderConfig()


def show(result):
    print(f"{result.param_name:>14} {'WER':>6} {'beams':>8} {'expansions':>12} {'time s':>8}")
    for r in result.rows:
        print(f"{r.param:>14g} {r.wer:6.2f} {r.mean_beams:8.1f} "
              f"{r.total_expansions:12d} {r.wall_time:8.2f}")


show(sweep_topn(utts, vocab, None, cfg, [1, 2, 4, 8, 32]))
print()
show(sweep_relthres(utts, vocab, None, cfg, [0.0, 0.001, 0.007, 0.03], top_n=4))

# Expansions drop sharply with N and again with R; the beam stays near full
# because without a lexicon every spelling survives the 25-nat window.
