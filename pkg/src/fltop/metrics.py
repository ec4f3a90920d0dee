"""Levenshtein alignment and pooled word error rate."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence


@dataclass(frozen=True)
class WerBreakdown:
    substitutions: int
    insertions: int
    deletions: int
    ref_words: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    @property
    def wer(self) -> float:
        return 100.0 * self.errors / self.ref_words


def edit_distance(a: Sequence, b: Sequence) -> tuple[int, tuple[int, int, int]]:
    """Unit-cost edit distance from ``a`` to ``b`` and its (S, I, D) split.

    Backtrace prefers substitution, then deletion, then insertion.
    """
    n, m = len(a), len(b)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        d[i][0] = i
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        ai, row, prev = a[i - 1], d[i], d[i - 1]
        for j in range(1, m + 1):
            row[j] = min(prev[j - 1] + (ai != b[j - 1]), prev[j] + 1, row[j - 1] + 1)

    s = ins = dele = 0
    i, j = n, m
    while i or j:
        if i and j and d[i][j] == d[i - 1][j - 1] + (a[i - 1] != b[j - 1]):
            s += a[i - 1] != b[j - 1]
            i, j = i - 1, j - 1
        elif i and d[i][j] == d[i - 1][j] + 1:
            dele += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return d[n][m], (s, ins, dele)


def corpus_wer(pairs: Iterable[tuple[str, str]]) -> WerBreakdown:
    """Pooled WER over ``(reference, hypothesis)`` pairs, whitespace tokens."""
    S = I = D = N = 0
    for ref, hyp in pairs:
        r, h = ref.split(), hyp.split()
        _, (s, i, d) = edit_distance(r, h)
        S, I, D, N = S + s, I + i, D + d, N + len(r)
    if N == 0:
        raise ValueError("corpus has no reference words")
    return WerBreakdown(S, I, D, N)
