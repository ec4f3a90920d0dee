"""
Which sorted index does the winning hypothesis consume?
=======================================================

With instrumentation on, the best hypothesis carries a per-frame trail of
(frame, sorted index, probability). Pooling the trails shows how rarely
the winner needs anything past the first few ranks, which is what makes a
small N safe.
"""

import numpy as np

from fltop import DecoderConfig, decode, letter_vocabulary
from fltop.emissions import generate_corpus
from fltop.stats import aggregate, best_beam_backtrace_indices, summarize

vocab = letter_vocabulary()
# a flatter generator than the benchmark so that lower ranks show up
corpus = generate_corpus(10, 120, vocab.size, 1.5, 5,
                         blank_id=vocab.blank_id, word_sep_id=vocab.word_sep_id,
                         label_ids=range(vocab.word_sep_id + 1, vocab.size))

results = [decode(em, vocab, cfg=DecoderConfig(beam_size=64), instrument=True)
           for em, _ in corpus]

trail = best_beam_backtrace_indices(results[0])
print("first frames of utterance 0:", [(t, k, round(p, 3)) for t, k, p in trail[:6]])

summary = summarize(aggregate(r.stats for r in results))
cum = summary.cumulative_fraction()
print(f"{'index':>5} {'count':>6} {'mean p':>8} {'cum':>7}")
for k in sorted(summary.index_counts):
    print(f"{k:5d} {summary.index_counts[k]:6d} {summary.index_mean_emission[k]:8.4f} "
          f"{cum[k]:7.4f}")

print(f"coverage at index 3: {summary.coverage(3):.4f}")
print(f"beams per frame: mean {summary.beam_mean:.1f}, median {summary.beam_median:.0f}, "
      f"IQR [{summary.beam_q1:.0f}, {summary.beam_q3:.0f}]")

# the emission mass falls off with rank
ranks = np.sort(np.vstack([em.probs for em, _ in corpus]), axis=1)[:, ::-1]
print("mean probability by rank 0..4:", np.round(ranks[:, :5].mean(axis=0), 4).tolist())
