"""Command-line entry point: ``fltop <command> [flags]``.

Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench
from .decoder import DecoderConfig, DecoderError, decode
from .emissions import generate_corpus, load_emissions, save_emissions
from .lm import parse_arpa
from .metrics import corpus_wer
from .stats import summarize
from .vocab import LETTER_TOKENS, load_vocab, letter_vocabulary


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None


def _add_decoder_flags(p: argparse.ArgumentParser, vocab_required=True):
    p.add_argument("--vocab", required=vocab_required, help="token list, one per line")
    p.add_argument("--blank-token", default=None,
                   help="CTC blank token (default: the token on line 1)")
    p.add_argument("--word-sep-token", default="|")
    p.add_argument("--unk-token", default=None)
    p.add_argument("--lm", default=None, help="ARPA language model")
    p.add_argument("--lm-weight", type=float, default=1.0)
    p.add_argument("--word-score", type=float, default=0.95)
    p.add_argument("--sil-score", type=float, default=0.0)
    p.add_argument("--unk-logprob", type=float, default=-10.0)
    p.add_argument("--beam-size", type=int, default=1000)
    p.add_argument("--beam-threshold", type=float, default=25.0)
    p.add_argument("--top-n", type=int, default=None, help="default: vocabulary size")
    p.add_argument("--rel-threshold", type=float, default=0.0)
    p.add_argument("--input-kind", choices=("probs", "logits"), default="probs")
    p.add_argument("--format", choices=("auto", "binary", "json"), default="auto")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-timing", action="store_true",
                   help="omit wall-clock fields so outputs are byte-reproducible")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fltop",
                                     description="CTC beam search with frame-level token pruning")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decode", help="decode one emission file")
    p.add_argument("--emissions", "-e", required=True)
    _add_decoder_flags(p)

    p = sub.add_parser("decode-corpus", help="decode every utterance of a manifest")
    p.add_argument("--manifest", required=True)
    _add_decoder_flags(p)

    p = sub.add_parser("sweep-topn", help="WER/time/beams for a list of N (R = 0)")
    p.add_argument("--manifest", required=True)
    p.add_argument("--n-values", type=_ints, default=None, help="comma list; default 1..V")
    _add_decoder_flags(p)

    p = sub.add_parser("sweep-relthres", help="WER/time/beams for a list of R at fixed N")
    p.add_argument("--manifest", required=True)
    p.add_argument("--r-values", type=_floats, default=None, help="comma list")
    _add_decoder_flags(p)

    p = sub.add_parser("index-stats", help="chosen sorted-index counts and mean emissions")
    p.add_argument("--manifest", required=True)
    p.add_argument("--all-expansions", action="store_true",
                   help="tally every candidate expansion instead of the best beam")
    _add_decoder_flags(p)

    p = sub.add_parser("synth", help="write a seeded synthetic corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--num-utts", type=int, default=100)
    p.add_argument("--num-frames", type=int, default=200)
    p.add_argument("--peakedness", type=float, default=50.0)
    p.add_argument("--seed", type=int, default=42)
    return parser


def _config(args, top_n_default=None) -> DecoderConfig:
    if args.top_n is not None and args.top_n < 1:
        raise UsageError("top-n must be >= 1")
    if not 0.0 <= args.rel_threshold <= 1.0:
        raise UsageError("rel-threshold must be in [0, 1]")
    if args.beam_size < 1:
        raise UsageError("beam-size must be >= 1")
    if args.threads < 1:
        raise UsageError("threads must be >= 1")
    try:
        return DecoderConfig(
            beam_size=args.beam_size, beam_threshold=args.beam_threshold,
            top_n=args.top_n if args.top_n is not None else top_n_default,
            rel_threshold=args.rel_threshold, lm_weight=args.lm_weight,
            word_score=args.word_score, sil_score=args.sil_score,
            unk_logprob=args.unk_logprob)
    except DecoderError as e:
        raise UsageError(str(e)) from None


def _resources(args, top_n_default=None):
    cfg = _config(args, top_n_default)
    vocab = load_vocab(args.vocab, args.blank_token, args.word_sep_token, args.unk_token)
    try:
        cfg.resolved_top_n(vocab.size)
    except DecoderError as e:
        raise UsageError(str(e)) from None
    model = parse_arpa(args.lm) if args.lm else None
    if model is not None:
        model.unk_logprob = args.unk_logprob
    return cfg, vocab, model


def _kind(args):
    return "logits" if args.input_kind == "logits" else "probabilities"


def _fmt(args):
    return None if args.format == "auto" else args.format


def _emit(args, text: str):
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_decode(args) -> int:
    cfg, vocab, model = _resources(args)
    em = load_emissions(args.emissions, _fmt(args), _kind(args))
    r = decode(em, vocab, model, cfg)
    if args.json:
        s = summarize(r.stats)
        obj = {
            "id": Path(args.emissions).stem,
            "transcript": r.transcript,
            "log_score": r.best.score,
            "wall_time": None if args.no_timing else r.stats.wall_time,
            "beams_mean": s.beam_mean,
        }
        _emit(args, json.dumps(obj, sort_keys=True) + "\n")
    else:
        _emit(args, r.transcript + "\n")
    return 0


def _corpus(args):
    return bench.load_corpus(args.manifest, _fmt(args), _kind(args))


def cmd_decode_corpus(args) -> int:
    cfg, vocab, model = _resources(args)
    utts = _corpus(args)
    res = bench.decode_corpus(utts, vocab, model, cfg, args.threads)
    lines = []
    for r in res:
        if args.json:
            s = summarize(r.stats)
            lines.append(json.dumps({
                "id": r.id, "transcript": r.transcript, "log_score": r.log_score,
                "wall_time": None if args.no_timing else r.stats.wall_time,
                "beams_mean": s.beam_mean}, sort_keys=True))
        else:
            lines.append(f"{r.id}\t{r.transcript}")
    _emit(args, "\n".join(lines) + "\n")
    refs = [(r.reference, r.transcript) for r in res if r.reference is not None]
    if refs:
        w = corpus_wer(refs)
        print(f"WER {w.wer:.3f} (S={w.substitutions} I={w.insertions} D={w.deletions} "
              f"N={w.ref_words})", file=sys.stderr)
    return 0


def _sweep_outputs(args, result: bench.SweepResult, cfg, vocab, extra: dict):
    out = Path(args.out) if args.out else Path(f"{args.command}.csv")
    result.to_csv(out, timing=not args.no_timing)
    bench.write_metadata(
        out.with_suffix(".json"),
        command=args.command,
        config=bench.config_dict(cfg, vocab.size),
        corpus_sha256=bench.corpus_hash(args.manifest),
        lm=Path(args.lm).name if args.lm else None,
        seed=args.seed,
        timing=not args.no_timing,
        vocab_size=vocab.size,
        **extra,
    )
    if args.json:
        print(json.dumps([r.__dict__ for r in result.rows], sort_keys=True))
    return 0


def cmd_sweep_topn(args) -> int:
    cfg, vocab, model = _resources(args)
    utts = _corpus(args)
    values = args.n_values or list(range(1, vocab.size + 1))
    bad = [n for n in values if not 1 <= n <= vocab.size]
    if bad:
        raise UsageError(f"n-values outside [1, {vocab.size}]: {bad}")
    res = bench.sweep_topn(utts, vocab, model, cfg, values, args.threads)
    return _sweep_outputs(args, res, cfg, vocab, {"n_values": sorted(set(values))})


def cmd_sweep_relthres(args) -> int:
    cfg, vocab, model = _resources(args, top_n_default=4)
    utts = _corpus(args)
    values = args.r_values or list(bench.DEFAULT_R_VALUES)
    if any(not 0.0 <= r <= 1.0 for r in values):
        raise UsageError("r-values must lie in [0, 1]")
    top_n = cfg.resolved_top_n(vocab.size)
    res = bench.sweep_relthres(utts, vocab, model, cfg, values, top_n, args.threads)
    return _sweep_outputs(args, res, cfg, vocab, {"r_values": sorted(set(values))})


def cmd_index_stats(args) -> int:
    cfg, vocab, model = _resources(args)
    utts = _corpus(args)
    summary = bench.index_stats(utts, vocab, model, cfg, args.threads, args.all_expansions)
    if args.json:
        rows = [{"index": k, "count": n, "mean_emission": m, "cumulative_fraction": c}
                for k, n, m, c in bench.index_rows(summary)]
        _emit(args, json.dumps(rows, sort_keys=True) + "\n")
    else:
        out = Path(args.out) if args.out else Path("index-stats.csv")
        bench.write_index_csv(summary, out)
    return 0


def cmd_synth(args) -> int:
    vocab = letter_vocabulary()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "vocab.txt").write_text("\n".join(LETTER_TOKENS) + "\n", encoding="utf-8")
    corpus = generate_corpus(
        args.num_utts, args.num_frames, vocab.size, args.peakedness, args.seed,
        blank_id=vocab.blank_id, word_sep_id=vocab.word_sep_id,
        label_ids=range(vocab.word_sep_id + 1, vocab.size))
    rows = []
    for i, (em, ref) in enumerate(corpus):
        name = f"utt{i:04d}.fltp"
        save_emissions(em, out / name)
        rows.append((f"utt{i:04d}", name, vocab.render(ref)))
    bench.write_manifest(out / "manifest.tsv", rows)
    return 0


COMMANDS = {
    "decode": cmd_decode,
    "decode-corpus": cmd_decode_corpus,
    "sweep-topn": cmd_sweep_topn,
    "sweep-relthres": cmd_sweep_relthres,
    "index-stats": cmd_index_stats,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.print_usage(sys.stderr)
        print(f"fltop: error: {e}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as e:
        print(f"fltop: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
