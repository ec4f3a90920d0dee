"""ARPA backoff n-gram language models with incremental word scoring.

All probabilities here stay in log10, as written in the ARPA file.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
DEFAULT_UNK_LOGPROB = -10.0


class ArpaError(ValueError):
    pass


@dataclass(frozen=True)
class LmState:
    context: tuple = ()


@dataclass
class NGramModel:
    """``tables[k]`` maps a k-word tuple to ``(log10 prob, log10 backoff)``.

    Backoff is None for the highest order.
    """

    order: int
    tables: dict
    unk_logprob: float = DEFAULT_UNK_LOGPROB

    def __contains__(self, word: str) -> bool:
        return (word,) in self.tables[1]

    @property
    def vocabulary(self) -> set:
        return {ng[0] for ng in self.tables[1]}

    def begin_state(self) -> LmState:
        return LmState((BOS,) if self.order > 1 else ())

    def null_state(self) -> LmState:
        return LmState(())


_NGRAM_COUNT = re.compile(r"^ngram\s+(\d+)\s*=\s*(\d+)$")
_SECTION = re.compile(r"^\\(\d+)-grams:$")


def parse_arpa(path) -> NGramModel:
    """Parse an ARPA text file, validating counts and structure."""
    path = Path(path)
    counts: dict[int, int] = {}
    tables: dict[int, dict] = {}
    section = None  # "data", an int order, or "end"
    seen_data = False

    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line == "\\data\\":
                section, seen_data = "data", True
                continue
            if line == "\\end\\":
                section = "end"
                break
            m = _SECTION.match(line)
            if m:
                if not seen_data:
                    raise ArpaError(f"{path}:{lineno}: n-gram section before \\data\\")
                section = int(m.group(1))
                if section not in counts:
                    raise ArpaError(f"{path}:{lineno}: undeclared order {section}")
                tables[section] = {}
                continue
            if section is None:
                continue  # header comments before \data\
            if section == "data":
                m = _NGRAM_COUNT.match(line)
                if not m:
                    raise ArpaError(f"{path}:{lineno}: malformed data line {line!r}")
                counts[int(m.group(1))] = int(m.group(2))
                continue

            k = section
            fields = line.split()
            if len(fields) not in (k + 1, k + 2):
                raise ArpaError(f"{path}:{lineno}: malformed {k}-gram line {line!r}")
            try:
                logp = float(fields[0])
                backoff = float(fields[k + 1]) if len(fields) == k + 2 else None
            except ValueError:
                raise ArpaError(f"{path}:{lineno}: malformed number in {line!r}") from None
            if logp > 0:
                raise ArpaError(f"{path}:{lineno}: positive log probability {logp}")
            tables[k][tuple(fields[1:k + 1])] = (logp, backoff)

    if section != "end":
        raise ArpaError(f"{path}: missing \\end\\")
    if not counts:
        raise ArpaError(f"{path}: no \\data\\ section")
    order = max(counts)
    for k in range(1, order + 1):
        got = len(tables.get(k, {}))
        if got != counts.get(k, 0):
            raise ArpaError(
                f"{path}: count mismatch for order {k}: header {counts.get(k, 0)}, parsed {got}")
    for k in range(2, order + 1):
        for ng in tables[k]:
            if ng[:-1] not in tables[k - 1]:
                raise ArpaError(f"{path}: {k}-gram {' '.join(ng)!r} lacks its prefix")
    return NGramModel(order, tables)


def score_word(model: NGramModel, state: LmState, word: str,
               unk_logprob: Optional[float] = None) -> tuple[float, LmState]:
    """log10 p(word | state) by longest-match Katz backoff, plus next state."""
    if (word,) not in model.tables[1]:
        word = UNK
    tables = model.tables
    ctx = state.context
    backoff = 0.0
    result = None
    for i in range(len(ctx) + 1):
        sub = ctx[i:]
        entry = tables[len(sub) + 1].get(sub + (word,))
        if entry is not None:
            result = backoff + entry[0]
            break
        if sub:
            ctx_entry = tables[len(sub)].get(sub)
            if ctx_entry is not None and ctx_entry[1] is not None:
                backoff += ctx_entry[1]
    if result is None:
        # unigram miss only happens for <unk> absent from the model
        result = backoff + (model.unk_logprob if unk_logprob is None else unk_logprob)
    keep = model.order - 1
    nxt = (ctx + (word,))[-keep:] if keep > 0 else ()
    return result, LmState(nxt)


def sentence_logprob(model: NGramModel, words: Iterable[str],
                     unk_logprob: Optional[float] = None) -> float:
    state = model.begin_state()
    total = 0.0
    for w in list(words) + [EOS]:
        lp, state = score_word(model, state, w, unk_logprob)
        total += lp
    return total
