import json
import math

import pytest

from fltop import bench
from fltop.cli import main
from fltop.emissions import EmissionMatrix, save_emissions


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus")
    assert main(["synth", "--out-dir", str(d), "--num-utts", "4", "--num-frames", "40",
                 "--seed", "3"]) == 0
    return d


def common(corpus):
    return ["--manifest", str(corpus / "manifest.tsv"), "--vocab", str(corpus / "vocab.txt"),
            "--unk-token", "<unk>", "--no-timing"]


def test_synth_layout(corpus):
    entries = bench.load_manifest(corpus / "manifest.tsv")
    assert [e.id for e in entries] == ["utt0000", "utt0001", "utt0002", "utt0003"]
    assert all(e.emissions_path.exists() and e.reference for e in entries)


def test_decode_json(corpus, capsys):
    rc = main(["decode", "-e", str(corpus / "utt0000.fltp"), "--vocab",
               str(corpus / "vocab.txt"), "--json", "--no-timing"])
    assert rc == 0
    obj = json.loads(capsys.readouterr().out)
    assert obj["id"] == "utt0000" and obj["wall_time"] is None
    ref = bench.load_manifest(corpus / "manifest.tsv")[0].reference
    assert obj["transcript"] == ref


def test_decode_corpus(corpus, tmp_path, capsys):
    out = tmp_path / "hyp.txt"
    assert main(["decode-corpus", *common(corpus), "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 4
    assert "WER 0.000" in capsys.readouterr().err


def test_sweep_topn_csv_roundtrip(corpus, tmp_path):
    out = tmp_path / "topn.csv"
    assert main(["sweep-topn", *common(corpus), "--n-values", "1,4,32",
                 "--out", str(out)]) == 0
    res = bench.SweepResult.read_csv(out)
    assert [r.param for r in res.rows] == [1, 4, 32]
    assert all(math.isnan(r.wall_time) for r in res.rows)
    exp = [r.total_expansions for r in res.rows]
    assert exp == sorted(exp) and exp[0] < exp[-1]
    assert out.read_text().splitlines()[0] == ",".join(bench.SWEEP_COLUMNS)
    meta = json.loads(out.with_suffix(".json").read_text())
    assert meta["n_values"] == [1, 4, 32] and len(meta["corpus_sha256"]) == 64


def test_sweep_relthres_default_values(corpus, tmp_path):
    out = tmp_path / "r.csv"
    assert main(["sweep-relthres", *common(corpus), "--out", str(out)]) == 0
    res = bench.SweepResult.read_csv(out)
    assert [r.param for r in res.rows] == list(bench.DEFAULT_R_VALUES)
    meta = json.loads(out.with_suffix(".json").read_text())
    assert meta["config"]["top_n"] == 4


def test_index_stats(corpus, tmp_path):
    out = tmp_path / "idx.csv"
    assert main(["index-stats", *common(corpus), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(bench.INDEX_COLUMNS)
    assert lines[-1].endswith(",1.0")


@pytest.mark.parametrize("argv", [
    ["decode", "-e", "x.fltp"],
    ["sweep-topn", "--vocab", "v.txt"],
    ["nonsense"],
])
def test_usage_errors_exit_2(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_semantic_usage_errors_exit_2(corpus, capsys):
    assert main(["decode-corpus", *common(corpus), "--top-n", "0"]) == 2
    assert "top-n must be >= 1" in capsys.readouterr().err
    assert main(["decode-corpus", *common(corpus), "--rel-threshold", "2"]) == 2
    assert main(["sweep-topn", *common(corpus), "--n-values", "40"]) == 2


def test_runtime_errors_exit_1(corpus, tmp_path, capsys):
    assert main(["decode", "-e", str(tmp_path / "missing.fltp"), "--vocab",
                 str(corpus / "vocab.txt")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"T": 1, "V": 32, "probs": [[0.5] * 32]}))
    assert main(["decode", "-e", str(bad), "--vocab", str(corpus / "vocab.txt")]) == 1
    assert "row sum" in capsys.readouterr().err


def test_vocab_size_mismatch_is_error(corpus, tmp_path):
    p = tmp_path / "small.fltp"
    save_emissions(EmissionMatrix([[0.5, 0.5]]), p)
    assert main(["decode", "-e", str(p), "--vocab", str(corpus / "vocab.txt")]) == 1
