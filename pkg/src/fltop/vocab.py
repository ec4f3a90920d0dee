"""Token inventory with designated blank, word-separator and unknown tokens."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence


class VocabError(ValueError):
    pass


# fairseq/wav2vec2 letter dictionary order; "<s>" doubles as the CTC blank there
LETTER_TOKENS = (
    "<s>", "<pad>", "</s>", "<unk>", "|",
    "E", "T", "A", "O", "N", "I", "H", "S", "R", "D", "L", "U", "M",
    "W", "C", "F", "G", "Y", "P", "B", "V", "K", "'", "X", "J", "Q", "Z",
)


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple
    blank_id: int
    word_sep_id: int
    unk_id: Optional[int] = None
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        toks = tuple(self.tokens)
        object.__setattr__(self, "tokens", toks)
        if len(toks) < 2:
            raise VocabError("vocabulary needs at least 2 tokens")
        index = {}
        for i, tok in enumerate(toks):
            if not tok:
                raise VocabError(f"empty token at id {i}")
            if tok in index:
                raise VocabError(f"duplicate token {tok!r} at ids {index[tok]} and {i}")
            index[tok] = i
        object.__setattr__(self, "_index", index)
        for name in ("blank_id", "word_sep_id", "unk_id"):
            v = getattr(self, name)
            if v is not None and not 0 <= v < len(toks):
                raise VocabError(f"{name}={v} out of range")
        if self.blank_id == self.word_sep_id:
            raise VocabError("blank and word separator must differ")

    def __len__(self):
        return len(self.tokens)

    @property
    def size(self) -> int:
        return len(self.tokens)

    def id_to_token(self, id: int) -> str:
        if not 0 <= id < len(self.tokens):
            raise VocabError(f"token id {id} out of range [0, {len(self.tokens)})")
        return self.tokens[id]

    def token_to_id(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise VocabError(f"unknown token {token!r}") from None

    def word(self, ids: Iterable[int]) -> str:
        return "".join(self.tokens[i] for i in ids)

    def render(self, ids: Sequence[int]) -> str:
        """Token ids to text; separators become single spaces, ends trimmed."""
        words, cur = [], []
        for i in ids:
            if i == self.word_sep_id:
                if cur:
                    words.append(self.word(cur))
                cur = []
            elif i != self.blank_id:
                cur.append(i)
        if cur:
            words.append(self.word(cur))
        return " ".join(words)


def id_to_token(v: Vocabulary, id: int) -> str:
    return v.id_to_token(id)


def from_tokens(tokens: Sequence[str], blank: str, word_sep: str,
                unk: Optional[str] = None) -> Vocabulary:
    """Build a Vocabulary resolving the special tokens by name."""
    tokens = tuple(tokens)
    if not tokens:
        raise VocabError("empty vocabulary")
    ids = {}
    for i, tok in enumerate(tokens):
        ids.setdefault(tok, i)

    def lookup(name, tok):
        if tok not in ids:
            raise VocabError(f"{name} token {tok!r} not in vocabulary")
        return ids[tok]

    return Vocabulary(
        tokens,
        blank_id=lookup("blank", blank),
        word_sep_id=lookup("word separator", word_sep),
        unk_id=lookup("unk", unk) if unk is not None else None,
    )


def load_vocab(path, blank: Optional[str] = None, word_sep: str = "|",
               unk: Optional[str] = None) -> Vocabulary:
    """Read a one-token-per-line UTF-8 file; line number is token id.

    When ``blank`` is None the first token (id 0) is the blank.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    lines = [ln.rstrip("\r") for ln in lines]
    if not lines:
        raise VocabError(f"{path}: empty vocabulary file")
    return from_tokens(lines, blank if blank is not None else lines[0],
                       word_sep, unk)


def letter_vocabulary() -> Vocabulary:
    """The 32-token letter inventory (26 letters, apostrophe, '|', 4 specials)."""
    return from_tokens(LETTER_TOKENS, blank="<s>", word_sep="|", unk="<unk>")
