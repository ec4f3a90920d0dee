import tempfile
from pathlib import Path

import numpy as np
import pytest

from fltop.lm import parse_arpa
from fltop.vocab import from_tokens

UNIGRAM_ARPA = """\
\\data\\
ngram 1=3

\\1-grams:
-99\t<s>
-0.30103\ta\t-0.1
-0.477\t</s>

\\end\\
"""

BIGRAM_ARPA = """\
\\data\\
ngram 1=6
ngram 2=3

\\1-grams:
-99\t<s>\t-0.2
-0.30103\ta\t-0.1
-0.4\tb\t-0.05
-0.5\tc
-0.477\t</s>
-2.0\t<unk>

\\2-grams:
-0.2\t<s>\ta
-0.15\ta\tb
-0.3\tb\t</s>

\\end\\
"""

_ACCEPTANCE_LINES = []


def load_arpa_text(text):
    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "m.arpa"
        p.write_text(text)
        return parse_arpa(p)


@pytest.fixture
def unigram_arpa(tmp_path):
    p = tmp_path / "uni.arpa"
    p.write_text(UNIGRAM_ARPA)
    return p


@pytest.fixture
def bigram_arpa(tmp_path):
    p = tmp_path / "bi.arpa"
    p.write_text(BIGRAM_ARPA)
    return p


@pytest.fixture
def abc_vocab():
    """blank, word separator and the letters of the bigram fixture."""
    return from_tokens(["_", "|", "a", "b", "c"], blank="_", word_sep="|")


def random_rows(rng, T, V, zeros=False):
    rows = rng.dirichlet(np.ones(V), size=T)
    if zeros and T and V > 2:
        mask = rng.random((T, V)) < 0.2
        mask[np.arange(T), rows.argmax(axis=1)] = False
        rows[mask] = 0.0
        rows /= rows.sum(axis=1, keepdims=True)
    return rows


@pytest.fixture
def report():
    def _report(name, ok, detail=""):
        _ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip())
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
