"""Corpus decoding, parameter sweeps and index statistics.

A corpus is described by a UTF-8 TSV manifest with columns
``id, emissions_path, reference`` (reference may be empty). Relative
emission paths are resolved against the manifest's directory.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .decoder import DecoderConfig, decode
from .emissions import EmissionMatrix, load_emissions
from .metrics import corpus_wer
from .stats import DecodeStats, StatsSummary, aggregate, summarize

SWEEP_COLUMNS = ("param", "wer", "wall_time_s", "mean_beams", "total_expansions")
INDEX_COLUMNS = ("index", "count", "mean_emission", "cumulative_fraction")
DEFAULT_R_VALUES = (0.0, 0.001, 0.003, 0.007, 0.01, 0.03, 0.1, 0.5)


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    emissions_path: Path
    reference: Optional[str] = None


@dataclass
class Utterance:
    id: str
    emissions: EmissionMatrix
    reference: Optional[str] = None


def load_manifest(path) -> list[ManifestEntry]:
    path = Path(path)
    entries, seen = [], set()
    with path.open(encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) not in (2, 3):
                raise ManifestError(f"{path}:{lineno}: expected 2 or 3 tab-separated columns")
            uid, epath = cols[0], Path(cols[1])
            if uid in seen:
                raise ManifestError(f"{path}:{lineno}: duplicate utterance id {uid!r}")
            seen.add(uid)
            ref = cols[2] if len(cols) == 3 and cols[2] != "" else None
            if not epath.is_absolute():
                epath = path.parent / epath
            entries.append(ManifestEntry(uid, epath, ref))
    return entries


def write_manifest(path, rows: Iterable[tuple[str, str, Optional[str]]]):
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        for uid, epath, ref in rows:
            fh.write(f"{uid}\t{epath}\t{ref or ''}\n")


def load_corpus(manifest, format: Optional[str] = None,
                input_kind: str = "probabilities") -> list[Utterance]:
    out = []
    for e in load_manifest(manifest):
        try:
            em = load_emissions(e.emissions_path, format, input_kind)
        except (OSError, ValueError) as exc:
            raise ManifestError(f"utterance {e.id}: {exc}") from exc
        out.append(Utterance(e.id, em, e.reference))
    return out


def corpus_hash(manifest) -> str:
    """SHA-256 over the manifest text and every referenced emission file."""
    h = hashlib.sha256()
    manifest = Path(manifest)
    h.update(manifest.read_bytes())
    for e in load_manifest(manifest):
        h.update(e.id.encode())
        h.update(e.emissions_path.read_bytes())
    return h.hexdigest()


@dataclass
class UttResult:
    id: str
    transcript: str
    log_score: float
    stats: DecodeStats
    reference: Optional[str] = None


def decode_corpus(utts: Sequence[Utterance], vocab, model=None,
                  cfg: Optional[DecoderConfig] = None, threads: int = 1,
                  instrument: bool = False,
                  all_expansions: bool = False) -> list[UttResult]:
    """Decode every utterance; results come back sorted by utterance id."""
    cfg = cfg or DecoderConfig()

    def one(u: Utterance) -> UttResult:
        try:
            r = decode(u.emissions, vocab, model, cfg, instrument, all_expansions)
        except ValueError as exc:
            raise ValueError(f"utterance {u.id}: {exc}") from exc
        return UttResult(u.id, r.transcript, r.best.score, r.stats, u.reference)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, utts))
    else:
        results = [one(u) for u in utts]
    return sorted(results, key=lambda r: r.id)


@dataclass(frozen=True)
class SweepRow:
    param: float
    wer: float
    wall_time: float
    mean_beams: float
    total_expansions: int


@dataclass
class SweepResult:
    param_name: str
    rows: list = field(default_factory=list)

    def to_csv(self, path, timing: bool = True):
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SWEEP_COLUMNS)
            for r in self.rows:
                w.writerow([_num(r.param), _num(r.wer),
                            _num(r.wall_time) if timing else "nan",
                            _num(r.mean_beams), r.total_expansions])

    @classmethod
    def read_csv(cls, path, param_name: str = "param") -> "SweepResult":
        with Path(path).open(encoding="utf-8", newline="") as fh:
            rows = [SweepRow(float(d["param"]), float(d["wer"]), float(d["wall_time_s"]),
                             float(d["mean_beams"]), int(d["total_expansions"]))
                    for d in csv.DictReader(fh)]
        return cls(param_name, rows)


def _num(x) -> str:
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def _require_refs(utts: Sequence[Utterance]):
    missing = [u.id for u in utts if u.reference is None]
    if missing:
        raise ManifestError(f"sweeps need references; missing for {missing[:5]}")


def run_config(utts, vocab, model, cfg, threads=1) -> SweepRow:
    res = decode_corpus(utts, vocab, model, cfg, threads)
    st = aggregate(r.stats for r in res)
    wer = corpus_wer((r.reference, r.transcript) for r in res).wer
    mean_beams = summarize(st).beam_mean
    return SweepRow(math.nan, wer, st.wall_time,
                    mean_beams if mean_beams is not None else 0.0, st.expansions)


def sweep_topn(utts, vocab, model=None, cfg: Optional[DecoderConfig] = None,
               n_values: Optional[Iterable[int]] = None, threads: int = 1) -> SweepResult:
    """One row per N with the relative threshold disabled."""
    _require_refs(utts)
    cfg = cfg or DecoderConfig()
    values = sorted(set(n_values)) if n_values else range(1, vocab.size + 1)
    out = SweepResult("top_n")
    for n in values:
        row = run_config(utts, vocab, model, replace(cfg, top_n=n, rel_threshold=0.0), threads)
        out.rows.append(replace(row, param=n))
    return out


def sweep_relthres(utts, vocab, model=None, cfg: Optional[DecoderConfig] = None,
                   r_values: Optional[Iterable[float]] = None, top_n: int = 4,
                   threads: int = 1) -> SweepResult:
    """One row per R at fixed N."""
    _require_refs(utts)
    cfg = cfg or DecoderConfig()
    values = sorted(set(r_values)) if r_values else DEFAULT_R_VALUES
    out = SweepResult("rel_threshold")
    for r in values:
        row = run_config(utts, vocab, model, replace(cfg, top_n=top_n, rel_threshold=r), threads)
        out.rows.append(replace(row, param=r))
    return out


def index_stats(utts, vocab, model=None, cfg: Optional[DecoderConfig] = None,
                threads: int = 1, all_expansions: bool = False) -> StatsSummary:
    """Chosen-index tallies pooled over the corpus (best-beam trail by default)."""
    res = decode_corpus(utts, vocab, model, cfg, threads, instrument=True,
                        all_expansions=all_expansions)
    return summarize(aggregate(r.stats for r in res))


def index_rows(summary: StatsSummary) -> list[tuple[int, int, float, float]]:
    cum = summary.cumulative_fraction()
    return [(k, summary.index_counts[k], summary.index_mean_emission[k], cum[k])
            for k in sorted(summary.index_counts)]


def write_index_csv(summary: StatsSummary, path):
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(INDEX_COLUMNS)
        for k, n, mean, cum in index_rows(summary):
            w.writerow([k, n, _num(mean), _num(cum)])


def write_metadata(path, **meta):
    Path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def config_dict(cfg: DecoderConfig, vocab_size: int) -> dict:
    d = asdict(cfg)
    d["top_n"] = cfg.resolved_top_n(vocab_size)
    return d
