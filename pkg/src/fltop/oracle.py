"""Exact, exponential-time references for checking the decoder.

Three independent routes to CTC labeling posteriors:

* :func:`alignment_posterior` -- recursion over (frame, matched labels, last
  emitted token) for one target labeling;
* :func:`labeling_posteriors` -- forward pass over every reachable
  (collapsed prefix, last token) state;
* :func:`raw_path_posteriors` -- plain enumeration of all V**T paths.

:func:`reference_decode` is a slow list-based beam search assembled from the
decoder's per-hypothesis operations.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .decoder import (DecoderConfig, Hypothesis, expand, finalize, merge_duplicates,
                      prune_frame, select_top_k, FrameCandidates, _rank_key)
from .emissions import EmissionMatrix, collapse

MAX_PATHS = 10**7


class InstanceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class LabelingScore:
    labeling: tuple
    posterior: float


def _guard(em: EmissionMatrix):
    if em.vocab_size ** em.num_frames > MAX_PATHS:
        raise InstanceTooLarge(
            f"V^T = {em.vocab_size}^{em.num_frames} exceeds {MAX_PATHS}")


def alignment_posterior(em: EmissionMatrix, labeling: Sequence[int], blank: int) -> float:
    """Sum of path probabilities over alignments collapsing to ``labeling``."""
    _guard(em)
    P = em.probs.tolist()
    lab = tuple(labeling)
    T, V, L = em.num_frames, em.vocab_size, len(lab)

    @lru_cache(maxsize=None)
    def rest(t: int, j: int, last: int) -> float:
        if t == T:
            return 1.0 if j == L else 0.0
        if L - j > T - t:
            return 0.0
        total = 0.0
        for c in range(V):
            if c == blank:
                total += P[t][c] * rest(t + 1, j, blank)
            elif c == last:
                total += P[t][c] * rest(t + 1, j, c)
            elif j < L and lab[j] == c:
                total += P[t][c] * rest(t + 1, j + 1, c)
        return total

    return rest(0, 0, blank)


def labeling_posteriors(em: EmissionMatrix, blank: int) -> dict[tuple, float]:
    """Posterior of every reachable labeling, via prefix-state recursion."""
    _guard(em)
    states = {((), blank): 1.0}
    for row in em.probs.tolist():
        nxt: dict = defaultdict(float)
        for (prefix, last), p in states.items():
            for c, pc in enumerate(row):
                if c == blank:
                    nxt[(prefix, blank)] += p * pc
                elif c == last:
                    nxt[(prefix, c)] += p * pc
                else:
                    nxt[(prefix + (c,), c)] += p * pc
        states = nxt
    out: dict = defaultdict(float)
    for (prefix, _), p in states.items():
        out[prefix] += p
    return dict(out)


def raw_path_posteriors(em: EmissionMatrix, blank: int) -> dict[tuple, float]:
    """Posterior of every labeling by enumerating all V**T alignment paths."""
    _guard(em)
    P = em.probs.tolist()
    out: dict = defaultdict(float)
    for path in itertools.product(range(em.vocab_size), repeat=em.num_frames):
        p = 1.0
        for t, c in enumerate(path):
            p *= P[t][c]
        out[tuple(collapse(path, blank))] += p
    return dict(out)


def brute_force_best(em: EmissionMatrix, blank: int) -> LabelingScore:
    post = labeling_posteriors(em, blank)
    top = max(post.values())
    # equal posteriors: shorter first, then lexicographically smaller
    tied = sorted((k for k, v in post.items() if v == top), key=lambda k: (len(k), k))
    return LabelingScore(tied[0], top)


def reference_decode(em: EmissionMatrix, vocab, model=None,
                     cfg: Optional[DecoderConfig] = None,
                     exhaustive: bool = False) -> tuple[str, Hypothesis]:
    """List-based beam search using expand / merge_duplicates / select_top_k."""
    cfg = cfg or DecoderConfig()
    top_n = cfg.resolved_top_n(em.vocab_size)
    init = Hypothesis(lm_state=model.begin_state() if model is not None else None)
    beams = [init]
    for row in em.probs:
        if exhaustive:
            ids = np.arange(len(row))
            cands = FrameCandidates(ids, row[ids])
        else:
            cands = prune_frame(row, top_n, cfg.rel_threshold)
        expanded = [h2 for h in beams for h2 in expand(h, cands, vocab, model, cfg)]
        beams = select_top_k(merge_duplicates(expanded), cfg.beam_size, cfg.beam_threshold)
    finals = [finalize(h, vocab, model, cfg) for h in beams]
    if not finals:
        return "", init
    best = min(finals, key=_rank_key)
    return vocab.render(best.prefix), best
