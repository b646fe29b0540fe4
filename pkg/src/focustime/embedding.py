"""Event-label embeddings trained with skip-gram negative sampling.

Each activity session is one "sentence" of event labels. The distance
between two labels is ``(1 - cosine) / 2`` which lies in ``[0, 1]``.
"""

from __future__ import annotations

import json
import struct
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _sgns
from .errors import ConfigError, FormatError, LookupLabelError, TrainingError
from .model import Session

MAGIC = b"FTEM"
FORMAT_VERSION = 1
NOISE_POWER = 0.75
# scale of the integer cumulative noise table, as in word2vec
_TABLE_DOMAIN = 2**31 - 1


@dataclass(frozen=True)
class TrainConfig:
    dims: int = 20
    context_window: int = 5
    min_count: int = 200
    negative_samples: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    min_learning_rate: float = 1e-4
    seed: int = 1

    def __post_init__(self):
        for name in ("context_window", "min_count", "negative_samples", "epochs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.dims < 2:
            raise ConfigError("dims must be >= 2")
        if not (self.learning_rate > 0 and self.min_learning_rate > 0):
            raise ConfigError("learning rates must be positive")


@dataclass(frozen=True)
class Corpus:
    sentences: list[list[str]]
    counts: dict[str, int]

    @property
    def vocab(self) -> list[str]:
        """Labels ordered by descending frequency, ties by label text."""
        return sorted(self.counts, key=lambda w: (-self.counts[w], w))

    @property
    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)


def build_corpus(sessions: Iterable[Session | Sequence[str]], min_count: int = 200) -> Corpus:
    """Turn sessions into label sentences, dropping labels rarer than ``min_count``."""
    raw = []
    for s in sessions:
        if isinstance(s, Session):
            raw.append([ev.label for ev in s.events])
        else:
            raw.append(list(s))
    if not raw:
        raise ConfigError("no sessions to build a corpus from")
    counts = Counter(w for sent in raw for w in sent)
    keep = {w: c for w, c in counts.items() if c >= min_count}
    if not keep:
        raise ConfigError(
            f"every label occurs fewer than min_count={min_count} times; lower min_count"
        )
    sentences = []
    for sent in raw:
        kept = [w for w in sent if w in keep]
        if kept:
            sentences.append(kept)
    return Corpus(sentences, dict(sorted(keep.items())))


@dataclass(frozen=True, eq=False)
class EmbeddingModel:
    vocab: tuple[str, ...]
    vectors: np.ndarray
    config: TrainConfig = field(default_factory=TrainConfig)
    corpus_stats: dict = field(default_factory=dict)

    def __post_init__(self):
        vecs = np.ascontiguousarray(self.vectors, dtype=np.float32)
        if vecs.ndim != 2 or vecs.shape[0] != len(self.vocab):
            raise ConfigError("vectors must have one row per vocab entry")
        if len(set(self.vocab)) != len(self.vocab):
            raise ConfigError("duplicate vocab entries")
        if not np.all(np.isfinite(vecs)):
            raise ConfigError("vectors contain non-finite values")
        vecs.setflags(write=False)
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "_index", {w: i for i, w in enumerate(self.vocab)})
        norms = np.linalg.norm(vecs.astype(np.float64), axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(norms > 0, vecs / norms, 0.0)
        object.__setattr__(self, "_unit", unit)

    @property
    def dims(self) -> int:
        return self.vectors.shape[1]

    def __contains__(self, label) -> bool:
        return label in self._index

    def __len__(self) -> int:
        return len(self.vocab)

    def __eq__(self, other):
        if not isinstance(other, EmbeddingModel):
            return NotImplemented
        return (
            self.vocab == other.vocab
            and self.config == other.config
            and self.corpus_stats == other.corpus_stats
            and self.vectors.tobytes() == other.vectors.tobytes()
        )

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise LookupLabelError(label) from None

    def vector(self, label: str) -> np.ndarray:
        return self.vectors[self.index(label)]

    def similarity(self, a: str, b: str) -> float:
        ia, ib = self.index(a), self.index(b)
        if ia == ib:
            return 1.0
        return float(np.clip(self._unit[ia] @ self._unit[ib], -1.0, 1.0))

    def distance(self, a: str, b: str) -> float:
        ia, ib = self.index(a), self.index(b)
        if ia == ib:
            return 0.0
        return (1.0 - self.similarity(a, b)) / 2.0

    def distance_matrix(self, labels: Sequence[str] | None = None) -> np.ndarray:
        """Symmetric pairwise distances with an exact zero diagonal."""
        idx = np.arange(len(self.vocab)) if labels is None else np.array(
            [self.index(w) for w in labels], dtype=np.int64
        )
        unit = self._unit[idx]
        cos = np.clip(unit @ unit.T, -1.0, 1.0)
        dist = (1.0 - cos) / 2.0
        dist = (dist + dist.T) / 2.0
        same = idx[:, None] == idx[None, :]
        dist[same] = 0.0
        return dist

    def nearest(self, label: str, k: int = 10) -> list[tuple[str, float]]:
        """The ``k`` closest other labels, ascending distance, ties by vocab order."""
        if k < 1:
            raise ConfigError("k must be >= 1")
        i = self.index(label)
        cos = np.clip(self._unit @ self._unit[i], -1.0, 1.0)
        dist = (1.0 - cos) / 2.0
        order = [j for j in np.argsort(dist, kind="stable") if j != i]
        return [(self.vocab[j], float(dist[j])) for j in order[:k]]


def distance(model: EmbeddingModel, a: str, b: str) -> float:
    return model.distance(a, b)


def nearest(model: EmbeddingModel, label: str, k: int = 10) -> list[tuple[str, float]]:
    return model.nearest(label, k)


def _noise_table(counts: np.ndarray) -> np.ndarray:
    weights = counts.astype(np.float64) ** NOISE_POWER
    cum = np.cumsum(weights) / weights.sum()
    table = np.round(cum * _TABLE_DOMAIN).astype(np.int64)
    table[-1] = _TABLE_DOMAIN
    return table


def train(corpus: Corpus, config: TrainConfig | None = None, workers: int = 1) -> EmbeddingModel:
    """Fit label vectors on ``corpus``.

    With ``workers == 1`` the result is a pure function of corpus and config.
    More workers run lock-free updates across sentence chunks and are not
    reproducible.
    """
    config = config or TrainConfig()
    vocab = corpus.vocab
    if not vocab or not corpus.sentences:
        raise ConfigError("empty corpus")
    index = {w: i for i, w in enumerate(vocab)}
    tokens = np.fromiter(
        (index[w] for sent in corpus.sentences for w in sent if w in index), dtype=np.int64
    )
    lengths = [sum(1 for w in sent if w in index) for sent in corpus.sentences]
    bounds = np.zeros(len(lengths) + 1, dtype=np.int64)
    np.cumsum(lengths, out=bounds[1:])
    counts = np.array([corpus.counts[w] for w in vocab], dtype=np.int64)
    cum_table = _noise_table(counts)

    rng = np.random.Generator(np.random.PCG64(config.seed))
    dims = config.dims
    syn0 = rng.uniform(-0.5 / dims, 0.5 / dims, size=(len(vocab), dims))
    syn1 = np.zeros((len(vocab), dims))
    state = np.uint64(config.seed & ((1 << 48) - 1))

    a0, a1, n_epochs = config.learning_rate, config.min_learning_rate, config.epochs
    n_sent = len(lengths)
    for epoch in range(n_epochs):
        hi = a0 - (a0 - a1) * epoch / n_epochs
        lo = a0 - (a0 - a1) * (epoch + 1) / n_epochs
        if workers <= 1:
            state = _sgns.train_range(tokens, bounds, 0, n_sent, syn0, syn1, cum_table,
                                      config.context_window, config.negative_samples,
                                      hi, lo, state)
        else:
            edges = np.linspace(0, n_sent, workers + 1).astype(np.int64)
            seeds = rng.integers(1, 2**48, size=workers, dtype=np.uint64)
            _sgns.train_parallel(tokens, bounds, edges, syn0, syn1, cum_table,
                                 config.context_window, config.negative_samples,
                                 hi, lo, seeds)
        if not (np.all(np.isfinite(syn0)) and np.all(np.isfinite(syn1))):
            raise TrainingError(f"training diverged in epoch {epoch + 1}", epoch=epoch + 1)

    vectors = syn0.astype(np.float32)
    if np.any(~vectors.any(axis=1)):
        raise TrainingError("a trained vector collapsed to zero", epoch=n_epochs)
    stats = {"n_tokens": int(tokens.size), "n_sentences": n_sent}
    return EmbeddingModel(tuple(vocab), vectors, config, stats)


def save(model: EmbeddingModel, path) -> None:
    buf = bytearray()
    buf += MAGIC
    buf += struct.pack("<III", FORMAT_VERSION, model.dims, len(model.vocab))
    vecs = model.vectors.astype("<f4", copy=False)
    for label, vec in zip(model.vocab, vecs):
        raw = label.encode("utf-8")
        buf += struct.pack("<H", len(raw))
        buf += raw
        buf += vec.tobytes()
    trailer = json.dumps(
        {"config": asdict(model.config), "corpus_stats": model.corpus_stats}, sort_keys=True
    ).encode("utf-8")
    buf += struct.pack("<I", len(trailer))
    buf += trailer
    with open(path, "wb") as fh:
        fh.write(bytes(buf))


def load(path) -> EmbeddingModel:
    with open(path, "rb") as fh:
        data = fh.read()
    return loads(data)


def loads(data: bytes) -> EmbeddingModel:
    if len(data) < 16:
        raise FormatError("model file truncated or empty")
    if data[:4] != MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}; not a model file")
    version, dims, n = struct.unpack_from("<III", data, 4)
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported model format version {version}")
    off = 16
    vocab, rows = [], []
    try:
        for _ in range(n):
            (ln,) = struct.unpack_from("<H", data, off)
            off += 2
            if off + ln + 4 * dims > len(data):
                raise FormatError("model file truncated")
            vocab.append(data[off:off + ln].decode("utf-8"))
            off += ln
            rows.append(np.frombuffer(data, dtype="<f4", count=dims, offset=off))
            off += 4 * dims
        (tlen,) = struct.unpack_from("<I", data, off)
        off += 4
        if off + tlen != len(data):
            raise FormatError("model trailer length mismatch")
        trailer = json.loads(data[off:off + tlen].decode("utf-8"))
        config = TrainConfig(**trailer["config"])
    except (struct.error, UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise FormatError(f"corrupt model file: {exc}") from exc
    vectors = np.array(rows, dtype=np.float32).reshape(n, dims)
    return EmbeddingModel(tuple(vocab), vectors, config, trailer["corpus_stats"])
