"""CTC prefix beam search with frame-level token pruning.

Per frame the emission row is partially sorted, cut to the ``top_n`` best
tokens, and then truncated at the first token whose probability is at most
``rel_threshold`` times the frame's best probability. The surviving
candidate set is shared by every hypothesis in the beam.

Scores: pruning compares raw probabilities, accumulation is natural-log.
Word-level LM scores (log10 in the ARPA file) are converted once via ln(10)
when a word separator is appended and when the utterance ends.

Two code paths share the same CTC semantics:

* ``expand`` / ``merge_duplicates`` / ``select_top_k`` operate on lists of
  :class:`Hypothesis` objects and are what the reference decoder in
  :mod:`fltop.oracle` is built from.
* :func:`decode` runs a numpy engine over the whole beam at once; prefixes
  live in a per-utterance trie so each prefix has exactly one node id.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from .emissions import EmissionMatrix
from .lm import EOS, LmState, NGramModel, score_word
from .stats import DecodeStats, record_selection
from .vocab import Vocabulary

LN10 = math.log(10.0)
NEG_INF = -math.inf


class DecoderError(ValueError):
    pass


@dataclass(frozen=True)
class DecoderConfig:
    """Decoder knobs; ``top_n=None`` means "all tokens".

    The defaults are the baseline setting: beam 1000, log-window 25, every
    token, no relative threshold, lm_weight 1, word_score 0.95, sil_score 0.
    """

    beam_size: int = 1000
    beam_threshold: float = 25.0
    top_n: Optional[int] = None
    rel_threshold: float = 0.0
    lm_weight: float = 1.0
    word_score: float = 0.95
    sil_score: float = 0.0
    unk_logprob: float = -10.0

    def __post_init__(self):
        if self.beam_size < 1:
            raise DecoderError("beam_size must be >= 1")
        if not self.beam_threshold >= 0:
            raise DecoderError("beam_threshold must be >= 0")
        if self.top_n is not None and self.top_n < 1:
            raise DecoderError("top-n must be >= 1")
        if not 0.0 <= self.rel_threshold <= 1.0:
            raise DecoderError("rel-threshold must be in [0, 1]")

    def resolved_top_n(self, vocab_size: int) -> int:
        n = vocab_size if self.top_n is None else self.top_n
        if not 1 <= n <= vocab_size:
            raise DecoderError(f"top-n must be in [1, {vocab_size}], got {n}")
        return n


@dataclass
class Hypothesis:
    prefix: tuple = ()
    p_blank: float = 0.0
    p_nonblank: float = NEG_INF
    lm_state: Optional[LmState] = None
    lm_score: float = 0.0
    current_word: tuple = ()
    trail: Optional[tuple] = None

    @property
    def acoustic(self) -> float:
        return float(np.logaddexp(self.p_blank, self.p_nonblank))

    @property
    def score(self) -> float:
        return self.acoustic + self.lm_score


@dataclass(frozen=True)
class FrameCandidates:
    """Token ids (descending probability) that survive pruning for a frame."""

    ids: np.ndarray
    probs: np.ndarray

    @property
    def entries(self) -> list[tuple[int, float]]:
        return [(int(i), float(p)) for i, p in zip(self.ids, self.probs)]

    def __len__(self):
        return len(self.ids)


def partial_sort_desc(frame, n: int) -> np.ndarray:
    """Ids of the ``n`` largest entries, descending; ties by ascending id."""
    p = np.asarray(frame, dtype=np.float64)
    size = p.shape[0]
    if not 1 <= n <= size:
        raise DecoderError(f"n={n} out of range [1, {size}]")
    if n == size:
        return np.lexsort((np.arange(size), -p))
    kth = np.partition(p, size - n)[size - n]
    above = np.flatnonzero(p > kth)
    tied = np.flatnonzero(p == kth)[: n - above.size]
    sel = np.concatenate((above, tied))
    return sel[np.lexsort((sel, -p[sel]))]


def prune_frame(frame, n: int, r: float) -> FrameCandidates:
    """Top-``n`` tokens, cut at the first one with ``p <= r * p_top``."""
    p = np.asarray(frame, dtype=np.float64)
    order = partial_sort_desc(p, n)
    limit = p[order[0]] * r
    stop = 1
    while stop < order.size:
        if p[order[stop]] <= limit:
            break
        stop += 1
    ids = order[:stop]
    return FrameCandidates(ids, p[ids])


def _all_tokens(frame) -> tuple[np.ndarray, np.ndarray]:
    """Exhaustive candidate set in id order, with each id's sorted rank."""
    p = np.asarray(frame, dtype=np.float64)
    order = np.lexsort((np.arange(p.size), -p))
    ranks = np.empty(p.size, dtype=np.int64)
    ranks[order] = np.arange(p.size)
    return np.arange(p.size), ranks


# --- word-boundary scoring -------------------------------------------------

def _word_bonus(word: tuple, state, vocab: Vocabulary,
                model: Optional[NGramModel], cfg: DecoderConfig):
    """Bonus for completing ``word`` and the LM state afterwards.

    An empty word (leading or doubled separator) earns nothing.
    """
    if not word:
        return 0.0, state
    if model is None:
        return cfg.word_score, state
    lp, nxt = score_word(model, state, vocab.word(word), cfg.unk_logprob)
    return cfg.lm_weight * LN10 * lp + cfg.word_score, nxt


def _end_bonus(word: tuple, state, vocab, model, cfg):
    bonus, state = _word_bonus(word, state, vocab, model, cfg)
    if model is not None:
        lp, _ = score_word(model, state, EOS, cfg.unk_logprob)
        bonus += cfg.lm_weight * LN10 * lp
    return bonus, state


def _initial_state(model: Optional[NGramModel]):
    return model.begin_state() if model is not None else None


def prefix_lm_score(prefix, vocab: Vocabulary, model: Optional[NGramModel],
                    cfg: DecoderConfig, final: bool = True) -> float:
    """Recompute a prefix's LM/bonus score from scratch."""
    state = _initial_state(model)
    word: tuple = ()
    total = 0.0
    for c in prefix:
        if c == vocab.word_sep_id:
            bonus, state = _word_bonus(word, state, vocab, model, cfg)
            total += bonus + cfg.sil_score
            word = ()
        else:
            word += (c,)
    if final:
        total += _end_bonus(word, state, vocab, model, cfg)[0]
    return total


# --- list-based hypothesis operations ---------------------------------------

def _log(p: float) -> float:
    with np.errstate(divide="ignore"):
        return float(np.log(p))


def _extend(hyp: Hypothesis, c: int, p_nonblank: float, vocab, model, cfg):
    if c == vocab.word_sep_id:
        bonus, state = _word_bonus(hyp.current_word, hyp.lm_state, vocab, model, cfg)
        lm_score = hyp.lm_score + (bonus + cfg.sil_score)
        word = ()
    else:
        state, lm_score, word = hyp.lm_state, hyp.lm_score, hyp.current_word + (c,)
    return Hypothesis(hyp.prefix + (c,), NEG_INF, p_nonblank, state, lm_score, word)


def expand(hyp: Hypothesis, candidates: FrameCandidates, vocab: Vocabulary,
           model: Optional[NGramModel], cfg: DecoderConfig) -> list[Hypothesis]:
    """Contributions of one hypothesis over one frame's candidates.

    Each returned hypothesis carries a single probability component; merge
    them with :func:`merge_duplicates`.
    """
    out = []
    total = float(np.logaddexp(hyp.p_blank, hyp.p_nonblank))
    last = hyp.prefix[-1] if hyp.prefix else None
    for c, p in candidates.entries:
        lp = _log(p)
        if c == vocab.blank_id:
            out.append(replace(hyp, p_blank=total + lp, p_nonblank=NEG_INF, trail=None))
        elif c == last:
            out.append(replace(hyp, p_blank=NEG_INF, p_nonblank=hyp.p_nonblank + lp,
                               trail=None))
            out.append(_extend(hyp, c, hyp.p_blank + lp, vocab, model, cfg))
        else:
            out.append(_extend(hyp, c, total + lp, vocab, model, cfg))
    return out


def merge_duplicates(expanded: list[Hypothesis]) -> list[Hypothesis]:
    merged: dict[tuple, Hypothesis] = {}
    for h in sorted(expanded, key=lambda h: h.prefix):
        g = merged.get(h.prefix)
        if g is None:
            merged[h.prefix] = replace(h)
            continue
        if g.lm_state != h.lm_state or g.lm_score != h.lm_score:
            raise AssertionError(f"prefix {h.prefix} reached with diverging LM state")
        g.p_blank = float(np.logaddexp(g.p_blank, h.p_blank))
        g.p_nonblank = float(np.logaddexp(g.p_nonblank, h.p_nonblank))
    return list(merged.values())


def _rank_key(h: Hypothesis):
    return (-h.score, len(h.prefix), h.prefix)


def select_top_k(beams: list[Hypothesis], beam_size: int,
                 beam_threshold: float) -> list[Hypothesis]:
    """Best ``beam_size`` hypotheses within ``beam_threshold`` of the best.

    Ties go to the shorter, then lexicographically smaller prefix.
    Impossible (-inf) hypotheses are always dropped.
    """
    live = [h for h in beams if math.isfinite(h.score)]
    if not live:
        return []
    live.sort(key=_rank_key)
    floor = live[0].score - beam_threshold
    return [h for h in live[:beam_size] if h.score >= floor]


def finalize(hyp: Hypothesis, vocab, model, cfg) -> Hypothesis:
    """Flush the pending word (and the sentence end) into ``lm_score``."""
    bonus, state = _end_bonus(hyp.current_word, hyp.lm_state, vocab, model, cfg)
    return replace(hyp, lm_state=state, lm_score=hyp.lm_score + bonus, current_word=())


# --- vectorised engine -------------------------------------------------------

class DecodeResult(NamedTuple):
    transcript: str
    best: Hypothesis
    stats: DecodeStats


class _Grow:
    """Append-only numpy column with amortised doubling."""

    def __init__(self, dtype):
        self.a = np.empty(1024, dtype=dtype)
        self.n = 0

    def extend(self, values):
        m = self.n + len(values)
        if m > self.a.size:
            grown = np.empty(max(m, 2 * self.a.size), dtype=self.a.dtype)
            grown[: self.n] = self.a[: self.n]
            self.a = grown
        self.a[self.n:m] = values
        self.n = m

    @property
    def view(self):
        return self.a[: self.n]


class _Trie:
    """One node per distinct prefix, with its LM bookkeeping.

    Per-node LM states and word buffers are only materialised when an LM is
    attached; without one every column is computed in bulk.
    """

    def __init__(self, vocab: Vocabulary, model, cfg):
        self.vocab, self.model, self.cfg = vocab, model, cfg
        self.V = vocab.size
        self.sep = vocab.word_sep_id
        self.parent = _Grow(np.int64)
        self.token = _Grow(np.int64)
        self.lm = _Grow(np.float64)
        self.sep_bonus = _Grow(np.float64)
        self.wlen = _Grow(np.int64)
        self.state: list = []
        self.word: list = []
        self.sep_state: list = []
        self.children: dict[int, int] = {}
        self.parent.extend([-1])
        self.token.extend([-1])
        self.lm.extend([0.0])
        self.wlen.extend([0])
        state = _initial_state(model)
        bonus, sep_state = _word_bonus((), state, vocab, model, cfg)
        self.sep_bonus.extend([bonus + cfg.sil_score])
        if model is not None:
            self.state.append(state)
            self.word.append(())
            self.sep_state.append(sep_state)

    def children_of(self, parents: np.ndarray, tokens: np.ndarray) -> np.ndarray:
        """Node ids for ``parent + token`` pairs, creating missing nodes."""
        keys = (parents * self.V + tokens).tolist()
        get = self.children.get
        ids = np.array([get(k, -1) for k in keys], dtype=np.int64)
        miss = np.flatnonzero(ids < 0)
        if miss.size == 0:
            return ids
        par, tok = parents[miss], tokens[miss]
        start = self.parent.n
        new_ids = np.arange(start, start + miss.size)
        ids[miss] = new_ids
        self.children.update(zip([keys[m] for m in miss.tolist()], new_ids.tolist()))

        at_sep = tok == self.sep
        lm = self.lm.a[par] + np.where(at_sep, self.sep_bonus.a[par], 0.0)
        wlen = np.where(at_sep, 0, self.wlen.a[par] + 1)
        cfg = self.cfg
        if self.model is None:
            bonus = np.where(wlen > 0, cfg.word_score, 0.0) + cfg.sil_score
        else:
            bonus = np.empty(miss.size)
            for k, (p, c) in enumerate(zip(par.tolist(), tok.tolist())):
                if c == self.sep:
                    state, word = self.sep_state[p], ()
                else:
                    state, word = self.state[p], self.word[p] + (c,)
                b, sep_state = _word_bonus(word, state, self.vocab, self.model, cfg)
                bonus[k] = b + cfg.sil_score
                self.state.append(state)
                self.word.append(word)
                self.sep_state.append(sep_state)
        self.parent.extend(par)
        self.token.extend(tok)
        self.lm.extend(lm)
        self.wlen.extend(wlen)
        self.sep_bonus.extend(bonus)
        return ids

    def prefix(self, node: int) -> tuple:
        out = []
        while node > 0:
            out.append(int(self.token.a[node]))
            node = int(self.parent.a[node])
        return tuple(reversed(out))


def _choose(scores: np.ndarray, beam_size: int, threshold: float, tie_key) -> np.ndarray:
    idx = np.flatnonzero(np.isfinite(scores))
    if idx.size == 0:
        return idx
    s = scores[idx]
    keep = s >= s.max() - threshold
    idx, s = idx[keep], s[keep]
    if idx.size <= beam_size:
        return idx
    cut = idx.size - beam_size
    kth = np.partition(s, cut)[cut]
    above = idx[s > kth]
    tied = idx[s == kth]
    need = beam_size - above.size
    if tied.size > need:
        tied = np.array(sorted(tied.tolist(), key=tie_key)[:need], dtype=np.int64)
    return np.concatenate((above, tied))


def _run(emissions: EmissionMatrix, vocab: Vocabulary, model, cfg: DecoderConfig,
         instrument: bool, all_expansions: bool, exhaustive: bool) -> DecodeResult:
    probs = emissions.probs
    T, V = probs.shape
    if V != vocab.size:
        raise DecoderError(f"emissions have {V} tokens, vocabulary has {vocab.size}")
    top_n = cfg.resolved_top_n(V)
    blank, sep = vocab.blank_id, vocab.word_sep_id

    stats = DecodeStats()
    trie = _Trie(vocab, model, cfg)
    nodes = np.zeros(1, dtype=np.int64)
    pb = np.zeros(1)
    pnb = np.full(1, NEG_INF)
    # trail entries: parent entry, sorted rank, emission prob (instrument only)
    tr_parent: list = []
    tr_rank: list = []
    tr_prob: list = []
    trail = np.full(1, -1, dtype=np.int64)
    n_trail = 0
    if all_expansions:
        idx_count = np.zeros(V, dtype=np.int64)
        idx_sum = np.zeros(V)

    t0 = time.perf_counter()
    for t in range(T):
        if nodes.size == 0:
            stats.beam_counts.extend([0] * (T - t))
            break
        row = probs[t]
        if exhaustive:
            cand, ranks = _all_tokens(row)
        else:
            fc = prune_frame(row, top_n, cfg.rel_threshold)
            cand, ranks = fc.ids, np.arange(len(fc.ids))
        cp = row[cand]
        with np.errstate(divide="ignore"):
            lp = np.log(cp)
        B, k = nodes.size, cand.size
        stats.expansions += B * k
        if all_expansions:
            np.add.at(idx_count, ranks, B)
            np.add.at(idx_sum, ranks, B * cp)

        posmap = np.full(V + 1, -1, dtype=np.int64)  # slot V: "no token" (root)
        posmap[cand] = np.arange(k)
        last = trie.token.a[nodes]
        total = np.logaddexp(pb, pnb)

        # same prefix through blank, and through a repeated last token
        ib = posmap[blank]
        new_pb = total + lp[ib] if ib >= 0 else np.full(B, NEG_INF)
        rpos = posmap[np.where(last >= 0, last, V)]
        rep = np.where(rpos >= 0, pnb + lp[rpos], NEG_INF)

        # prefix + c for every non-blank candidate: B x m grid
        lab = np.flatnonzero(cand != blank)
        m = lab.size
        etok = cand[lab]
        ext_val = np.where(etok[None, :] == last[:, None], pb[:, None],
                           total[:, None]) + lp[lab][None, :]
        node_lm = trie.lm.a[nodes]
        ext_lm = np.repeat(node_lm[:, None], m, axis=1)
        sep_col = np.flatnonzero(etok == sep)
        if sep_col.size:
            ext_lm[:, sep_col[0]] += trie.sep_bonus.a[nodes]

        # an extension lands on a live beam iff that beam's parent is live too
        colmap = np.full(V + 1, -1, dtype=np.int64)
        colmap[etok] = np.arange(m)
        order = np.argsort(nodes)
        sorted_nodes = nodes[order]
        parents = trie.parent.a[nodes]
        loc = np.minimum(np.searchsorted(sorted_nodes, parents), B - 1)
        col = colmap[np.where(last >= 0, last, V)]
        hit = (sorted_nodes[loc] == parents) & (col >= 0)
        tgt = np.flatnonzero(hit)
        src, tcol = order[loc[tgt]], col[tgt]
        ext_into = np.full(B, NEG_INF)
        ext_into[tgt] = ext_val[src, tcol]
        new_pnb = np.logaddexp(rep, ext_into)

        fresh_score = ext_val + ext_lm
        fresh_score[src, tcol] = NEG_INF
        scores = np.concatenate((np.logaddexp(new_pb, new_pnb) + node_lm,
                                 fresh_score.ravel()))

        def tie_key(i, B=B, m=m, nodes=nodes, etok=etok):
            if i < B:
                p = trie.prefix(int(nodes[i]))
            else:
                j = i - B
                p = trie.prefix(int(nodes[j // m])) + (int(etok[j % m]),)
            return (len(p), p)

        keep = _choose(scores, cfg.beam_size, cfg.beam_threshold, tie_key)
        keep.sort()
        old = keep[keep < B]
        new = keep[keep >= B] - B
        new_src, new_col = new // m, new % m
        new_nodes = trie.children_of(nodes[new_src], etok[new_col])

        if instrument:
            # the trail follows the strongest contribution into each prefix
            ext_src_into = np.arange(B)
            ext_src_into[tgt] = src
            ext_pos_into = np.full(B, -1, dtype=np.int64)
            ext_pos_into[tgt] = lab[tcol]
            pick_ext = (ext_into > new_pb) & (ext_into > rep)
            pick_rep = ~pick_ext & (rep > new_pb)
            o_src = np.where(pick_ext, ext_src_into, np.arange(B))[old]
            o_pos = np.where(pick_ext, ext_pos_into, np.where(pick_rep, rpos, ib))[old]
            t_src = np.concatenate((o_src, new_src))
            pos = np.concatenate((o_pos, lab[new_col]))
            tr_parent.append(trail[t_src])
            tr_rank.append(ranks[pos])
            tr_prob.append(cp[pos])
            trail = np.arange(n_trail, n_trail + t_src.size)
            n_trail += t_src.size

        nodes = np.concatenate((nodes[old], new_nodes))
        pb = np.concatenate((new_pb[old], np.full(new.size, NEG_INF)))
        pnb = np.concatenate((new_pnb[old], ext_val.ravel()[new]))
        stats.beam_counts.append(int(nodes.size))
    stats.wall_time = time.perf_counter() - t0

    # end of utterance: flush pending words, then rank
    if model is None:
        end = np.where(trie.wlen.a[nodes] > 0, cfg.word_score, 0.0)
        end_states = [None] * nodes.size
    else:
        end = np.empty(nodes.size)
        end_states = []
        for i, n in enumerate(nodes.tolist()):
            end[i], st = _end_bonus(trie.word[n], trie.state[n], vocab, model, cfg)
            end_states.append(st)
    final_lm = trie.lm.a[nodes] + end
    final = np.logaddexp(pb, pnb) + final_lm
    i = None
    if nodes.size and np.isfinite(final).any():
        cand_i = np.flatnonzero(final == final.max())
        i = min(cand_i.tolist(), key=lambda j: (len(trie.prefix(int(nodes[j]))),
                                                 trie.prefix(int(nodes[j]))))
    if i is None:  # every hypothesis became impossible
        prefix, lm, state = (), 0.0, _initial_state(model)
    else:
        prefix, lm, state = trie.prefix(int(nodes[i])), float(final_lm[i]), end_states[i]

    trail_out = None
    if instrument:
        steps = []
        if T and i is not None:
            parents = np.concatenate(tr_parent)
            rks = np.concatenate(tr_rank)
            prs = np.concatenate(tr_prob)
            e = int(trail[i])
            t = T - 1
            while e >= 0:
                steps.append((t, int(rks[e]), float(prs[e])))
                e = int(parents[e])
                t -= 1
            steps.reverse()
        trail_out = tuple(steps)
        if all_expansions:
            for r in np.flatnonzero(idx_count):
                stats.index_counts[int(r)] = int(idx_count[r])
                stats.index_emission_sum[int(r)] = float(idx_sum[r])
        else:
            for _, r, p in steps:
                record_selection(stats, r, p)

    best = Hypothesis(
        prefix=prefix,
        p_blank=float(pb[i]) if i is not None else NEG_INF,
        p_nonblank=float(pnb[i]) if i is not None else NEG_INF,
        lm_state=state,
        lm_score=lm,
        current_word=(),
        trail=trail_out,
    )
    return DecodeResult(vocab.render(prefix), best, stats)


def decode(emissions: EmissionMatrix, vocab: Vocabulary,
           model: Optional[NGramModel] = None, cfg: Optional[DecoderConfig] = None,
           instrument: bool = False, all_expansions: bool = False) -> DecodeResult:
    """Beam-search decode one utterance.

    With ``instrument`` the best hypothesis carries its per-frame selection
    trail ``(t, sorted_index, prob)`` and the stats hold index tallies for that
    trail (or for every candidate expansion when ``all_expansions`` is set).
    Beam counts, expansion counts and wall time are always collected.
    """
    return _run(emissions, vocab, model, cfg or DecoderConfig(), instrument,
                all_expansions, exhaustive=False)


def decode_exhaustive(emissions: EmissionMatrix, vocab: Vocabulary,
                      model: Optional[NGramModel] = None,
                      cfg: Optional[DecoderConfig] = None,
                      instrument: bool = False) -> DecodeResult:
    """Same search, but every token of every frame is expanded in id order.

    ``top_n`` and ``rel_threshold`` are ignored. Zero-probability tokens are
    expanded too and die at selection as -inf hypotheses.
    """
    return _run(emissions, vocab, model, cfg or DecoderConfig(), instrument,
                False, exhaustive=True)
