"""Per-frame emission matrices: loading, saving, validation and synthesis.

Emissions are kept in probability domain. Two on-disk formats are supported:

* binary: ``b"FLTP"``, ``u16`` version (1), ``u32`` T, ``u32`` V, then T*V
  little-endian ``f32`` values, row-major.
* json: ``{"T": int, "V": int, "probs": [[...], ...]}``.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

MAGIC = b"FLTP"
VERSION = 1
ROW_SUM_TOL = 1e-4
_HEADER = struct.Struct("<4sHII")


class EmissionError(ValueError):
    """Raised for malformed or invalid emission input."""


def softmax_row(row) -> np.ndarray:
    """Numerically stable softmax of a single row of scores."""
    x = np.asarray(row, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise EmissionError("softmax_row needs a non-empty 1-D row")
    if not np.all(np.isfinite(x)):
        raise EmissionError("softmax_row got a non-finite entry")
    return softmax(x[None, :])[0]


def softmax(rows: np.ndarray) -> np.ndarray:
    x = np.asarray(rows, dtype=np.float64)
    z = np.exp(x - x.max(axis=1, keepdims=True))
    return z / z.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class EmissionMatrix:
    """T x V matrix of per-frame token probabilities (read-only)."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=np.float64, copy=True)
        if p.ndim != 2:
            raise EmissionError(f"emissions must be 2-D, got shape {p.shape}")
        if p.shape[1] < 2:
            raise EmissionError("vocab_size must be >= 2")
        for t in range(p.shape[0]):
            row = p[t]
            if not np.all(np.isfinite(row)):
                raise EmissionError(f"non-finite value at frame {t}")
            if np.any(row < 0):
                raise EmissionError(f"negative probability at frame {t}")
            s = float(row.sum())
            if abs(s - 1.0) > ROW_SUM_TOL:
                raise EmissionError(
                    f"row sum {s:.6g} exceeds tolerance at frame {t}")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def num_frames(self) -> int:
        return self.probs.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.probs.shape[1]

    @classmethod
    def empty(cls, vocab_size: int) -> "EmissionMatrix":
        return cls(np.zeros((0, vocab_size)))


def _guess_format(path: Path) -> str:
    return "json" if path.suffix.lower() == ".json" else "binary"


def _read_binary(path: Path) -> np.ndarray:
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise EmissionError(f"{path}: truncated header")
    magic, version, T, V = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise EmissionError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise EmissionError(f"{path}: unsupported version {version}")
    body = data[_HEADER.size:]
    if len(body) != 4 * T * V:
        raise EmissionError(
            f"{path}: dimension mismatch, header says {T}x{V} "
            f"but body holds {len(body) // 4} values")
    return np.frombuffer(body, dtype="<f4").reshape(T, V).astype(np.float64)


def _read_json(path: Path) -> np.ndarray:
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
        T, V, rows = int(obj["T"]), int(obj["V"]), obj["probs"]
    except (KeyError, TypeError, ValueError) as e:
        raise EmissionError(f"{path}: malformed header ({e})") from e
    if len(rows) != T:
        raise EmissionError(f"{path}: expected {T} frames, got {len(rows)}")
    for t, row in enumerate(rows):
        if len(row) != V:
            raise EmissionError(
                f"{path}: dimension mismatch at frame {t}: {len(row)} != {V}")
    return np.array(rows, dtype=np.float64).reshape(T, V)


def load_emissions(path, format: Optional[str] = None,
                   input_kind: str = "probabilities") -> EmissionMatrix:
    """Load and validate an emission file.

    ``format`` is ``"binary"`` or ``"json"`` (inferred from the suffix when
    omitted). With ``input_kind="logits"`` each row is softmax-normalised.
    """
    path = Path(path)
    fmt = format or _guess_format(path)
    if fmt == "binary":
        raw = _read_binary(path)
    elif fmt == "json":
        raw = _read_json(path)
    else:
        raise EmissionError(f"unknown emission format {fmt!r}")

    if input_kind in ("logits", "logit"):
        for t in range(raw.shape[0]):
            if not np.all(np.isfinite(raw[t])):
                raise EmissionError(f"non-finite value at frame {t}")
        if raw.shape[0]:
            raw = softmax(raw)
    elif input_kind not in ("probabilities", "probs"):
        raise EmissionError(f"unknown input kind {input_kind!r}")
    return EmissionMatrix(raw)


def save_emissions(em: EmissionMatrix, path, format: Optional[str] = None):
    path = Path(path)
    fmt = format or _guess_format(path)
    T, V = em.probs.shape
    if fmt == "binary":
        body = em.probs.astype("<f4").tobytes()
        path.write_bytes(_HEADER.pack(MAGIC, VERSION, T, V) + body)
    elif fmt == "json":
        obj = {"T": T, "V": V, "probs": em.probs.tolist()}
        path.write_text(json.dumps(obj), encoding="utf-8")
    else:
        raise EmissionError(f"unknown emission format {fmt!r}")


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the seeded emission generator.

    ``peakedness`` is the typical weight of the planted winner relative to
    the Dirichlet noise row. Per frame it is scaled by a log-uniform
    confidence factor in [1/20, 20], so the winner keeps at least
    ``k / (1 + k)`` of the mass with ``k = peakedness / 20`` (above 0.7 for
    peakedness 50).
    """

    num_frames: int
    vocab_size: int
    peakedness: float
    seed: int
    blank_id: int = 0
    word_sep_id: Optional[int] = None
    label_ids: Optional[Sequence[int]] = field(default=None)

    def __post_init__(self):
        if self.num_frames < 0:
            raise ValueError("num_frames must be >= 0")
        if self.vocab_size < 2:
            raise ValueError("vocab_size must be >= 2")
        if not self.peakedness > 0:
            raise ValueError("peakedness must be > 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not 0 <= self.blank_id < self.vocab_size:
            raise ValueError("blank_id out of range")

    def labels(self) -> list[int]:
        if self.label_ids is not None:
            return [int(i) for i in self.label_ids]
        skip = {self.blank_id, self.word_sep_id}
        return [i for i in range(self.vocab_size) if i not in skip]


CONFIDENCE_SPREAD = 20.0
NOISE_CONCENTRATION = 0.1


def _planted_path(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    """Per-frame winner ids laid out as a plausible CTC alignment."""
    labels = spec.labels()
    T = spec.num_frames
    path: list[int] = []
    word_left = int(rng.integers(2, 8))
    prev = None
    while len(path) < T:
        if spec.word_sep_id is not None and word_left == 0:
            tok = spec.word_sep_id
            word_left = int(rng.integers(2, 8))
        else:
            tok = labels[int(rng.integers(len(labels)))] if labels else spec.blank_id
            word_left -= 1
        n_blank = int(rng.integers(0, 3))
        if tok == prev and n_blank == 0:
            n_blank = 1
        path.extend([spec.blank_id] * n_blank)
        path.extend([tok] * int(rng.integers(1, 4)))
        prev = tok
    return np.array(path[:T], dtype=np.int64)


def collapse(path, blank_id: int) -> list[int]:
    """Standard CTC collapse: merge repeats, then drop blanks."""
    out = []
    prev = None
    for tok in path:
        tok = int(tok)
        if tok != prev and tok != blank_id:
            out.append(tok)
        prev = tok
    return out


def generate_synthetic(spec: SyntheticSpec) -> tuple[EmissionMatrix, list[int]]:
    """Seeded emission matrix plus its planted collapsed label sequence.

    Each row is a symmetric Dirichlet draw mixed with a one-hot on the planted
    winner: ``(d + k_t * e_w) / (1 + k_t)`` with ``k_t = peakedness * c_t``.
    """
    rng = np.random.default_rng(spec.seed)
    T, V = spec.num_frames, spec.vocab_size
    path = _planted_path(spec, rng)
    noise = rng.dirichlet(np.full(V, NOISE_CONCENTRATION), size=T)
    spread = np.log(CONFIDENCE_SPREAD)
    k = spec.peakedness * np.exp(rng.uniform(-spread, spread, size=T))
    probs = noise / (1.0 + k)[:, None]
    probs[np.arange(T), path] += k / (1.0 + k)
    probs /= probs.sum(axis=1, keepdims=True)
    return EmissionMatrix(probs), collapse(path, spec.blank_id)


def generate_corpus(num_utterances: int, num_frames: int, vocab_size: int,
                    peakedness: float, seed: int, **kwargs):
    """Seeded list of ``(EmissionMatrix, reference ids)`` pairs."""
    seeds = np.random.SeedSequence(seed).generate_state(
        max(num_utterances, 1), dtype=np.uint64)[:num_utterances]
    return [
        generate_synthetic(SyntheticSpec(num_frames, vocab_size, peakedness,
                                         int(s), **kwargs))
        for s in seeds
    ]
