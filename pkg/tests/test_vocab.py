import pytest

from fltop.vocab import (LETTER_TOKENS, VocabError, from_tokens, id_to_token,
                         load_vocab, letter_vocabulary)


def write(tmp_path, lines):
    p = tmp_path / "v.txt"
    p.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return p


def test_load_small(tmp_path):
    v = load_vocab(write(tmp_path, ["<pad>", "a", "|"]), blank="<pad>", word_sep="|")
    assert (v.size, v.blank_id, v.word_sep_id, v.unk_id) == (3, 0, 2, None)


def test_duplicate_token(tmp_path):
    with pytest.raises(VocabError, match="duplicate"):
        load_vocab(write(tmp_path, ["a", "a"]), blank="a", word_sep="a")


def test_missing_special(tmp_path):
    with pytest.raises(VocabError, match="not in vocabulary"):
        load_vocab(write(tmp_path, ["<pad>", "a"]), blank="<pad>", word_sep="|")


def test_empty_file(tmp_path):
    p = tmp_path / "v.txt"
    p.write_text("")
    with pytest.raises(VocabError, match="empty"):
        load_vocab(p)


def test_letter_inventory(tmp_path):
    # 26 letters, apostrophe, "|" and bos/pad/eos/unk
    v = load_vocab(write(tmp_path, LETTER_TOKENS), blank="<s>", word_sep="|", unk="<unk>")
    assert v.size == 32
    letters = [t for t in v.tokens if len(t) == 1 and t.isalpha()]
    assert len(letters) == 26 and "'" in v.tokens
    assert v == letter_vocabulary()


def test_blank_defaults_to_first_line(tmp_path):
    v = load_vocab(write(tmp_path, ["<s>", "|", "x"]))
    assert v.blank_id == 0 and v.word_sep_id == 1


@pytest.mark.parametrize("i, tok", [(1, "a"), (0, "<pad>")])
def test_id_to_token(i, tok):
    v = from_tokens(["<pad>", "a", "|"], "<pad>", "|")
    assert id_to_token(v, i) == tok


def test_id_out_of_range():
    v = from_tokens(["<pad>", "a", "|"], "<pad>", "|")
    with pytest.raises(VocabError):
        id_to_token(v, 3)


def test_lookup_is_bijective():
    v = letter_vocabulary()
    for i, tok in enumerate(v.tokens):
        assert v.token_to_id(v.id_to_token(i)) == i
        assert v.id_to_token(v.token_to_id(tok)) == tok


def test_blank_and_separator_must_differ():
    with pytest.raises(VocabError):
        from_tokens(["a", "b"], "a", "a")


def test_render():
    v = letter_vocabulary()
    ids = [v.token_to_id(c) for c in "|HE||LLO|"]
    assert v.render(ids) == "HE LLO"
