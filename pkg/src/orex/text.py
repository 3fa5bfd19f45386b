"""Vocabulary, embeddings and perturbation boxes.

A text is a fixed-length word sequence embedded as the concatenation of its
per-word vectors.  Each word can be perturbed inside a per-word box: either
an eps hyper-cube (inf-norm ball) around its embedding or the bounding box
of its k nearest neighbours in embedding space.  Fixing a subset E of word
positions and boxing the rest yields the text-level perturbation set that
all robustness queries range over.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import BinaryIO, Sequence, Union

import numpy as np

from .errors import InvalidIndex, InvalidInput, ModelFormatError, TooLong, UnknownWord
from .model import canonical_dumps

PAD = "<PAD>"

EUCLIDEAN = "euclidean"
COSINE = "cosine"


@dataclass(frozen=True, eq=False)
class Vocabulary:
    words: tuple
    pad: str = PAD

    def __post_init__(self):
        if len(set(self.words)) != len(self.words):
            raise InvalidInput("vocabulary contains duplicate words")
        if self.pad not in self.words:
            raise InvalidInput(f"padding token {self.pad!r} missing from vocabulary")
        object.__setattr__(self, "_index", {w: i for i, w in enumerate(self.words)})

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def index(self, word: str) -> int:
        try:
            return self._index[word]
        except KeyError:
            raise UnknownWord(word) from None


@dataclass(frozen=True, eq=False)
class EmbeddingTable:
    dim: int
    vectors: np.ndarray  # (|W|, dim), rows aligned with the vocabulary

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != self.dim:
            raise InvalidInput(f"vectors must be (|W|, {self.dim}), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidInput("embedding table contains non-finite entries")
        object.__setattr__(self, "vectors", v)


@dataclass(frozen=True, eq=False)
class TextInput:
    tokens: tuple       # length l, PAD-padded
    point: np.ndarray   # concatenated embeddings, length l*d
    dim: int            # d

    @property
    def length(self) -> int:
        return len(self.tokens)

    def block(self, i: int) -> np.ndarray:
        return self.point[i * self.dim : (i + 1) * self.dim]


@dataclass(frozen=True)
class EpsBall:
    """Inf-norm hyper-cube of radius eps around each word vector."""

    eps: float

    def __post_init__(self):
        if not (np.isfinite(self.eps) and self.eps > 0):
            raise InvalidInput(f"eps must be finite and positive, got {self.eps}")


@dataclass(frozen=True)
class KnnBox:
    """Bounding box of the k nearest vocabulary words (query included)."""

    k: int
    metric: str = EUCLIDEAN

    def __post_init__(self):
        if self.k < 1:
            raise InvalidInput(f"k must be >= 1, got {self.k}")
        if self.metric not in (EUCLIDEAN, COSINE):
            raise InvalidInput(f"metric must be euclidean or cosine, got {self.metric!r}")


PerturbationSpec = Union[EpsBall, KnnBox]


@dataclass(frozen=True, eq=False)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=np.float64)
        hi = np.asarray(self.hi, dtype=np.float64)
        if lo.shape != hi.shape:
            raise InvalidInput("box bounds have mismatched shapes")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise InvalidInput("box bounds must be finite")
        if np.any(lo > hi):
            raise InvalidInput("box has lo > hi in some coordinate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def is_degenerate(self) -> bool:
        return bool(np.all(self.lo == self.hi))


def encode(text: Sequence[str], length: int, vocab: Vocabulary, table: EmbeddingTable) -> TextInput:
    """Embed a word list, right-padding with the PAD token up to `length`."""
    if len(text) > length:
        raise TooLong(f"{len(text)} words exceed the input length {length}")
    tokens = tuple(text) + (vocab.pad,) * (length - len(text))
    rows = [table.vectors[vocab.index(w)] for w in tokens]
    return TextInput(tokens=tokens, point=np.concatenate(rows), dim=table.dim)


def _distances(word: str, metric: str, vocab: Vocabulary, table: EmbeddingTable) -> np.ndarray:
    q = table.vectors[vocab.index(word)]
    if metric == EUCLIDEAN:
        return np.linalg.norm(table.vectors - q, axis=1)
    # Cosine distance 1 - cos(u, v), totalized: equal vectors are at 0 and a
    # zero vector is at 2 from every non-equal vector, so PAD stays isolated.
    norms = np.linalg.norm(table.vectors, axis=1)
    qn = np.linalg.norm(q)
    dist = np.empty(len(vocab))
    for i, v in enumerate(table.vectors):
        if np.array_equal(v, q):
            dist[i] = 0.0
        elif qn == 0.0 or norms[i] == 0.0:
            dist[i] = 2.0
        else:
            dist[i] = 1.0 - float(np.dot(v, q)) / (norms[i] * qn)
    return dist


def knn(word: str, k: int, metric: str, vocab: Vocabulary, table: EmbeddingTable) -> list:
    """The k closest words to `word` (itself always first; ties by vocab index)."""
    if not (1 <= k <= len(vocab)):
        raise InvalidInput(f"k must be in [1, {len(vocab)}], got {k}")
    qi = vocab.index(word)
    dist = _distances(word, metric, vocab, table)
    order = sorted((i for i in range(len(vocab)) if i != qi), key=lambda i: (dist[i], i))
    return [word] + [vocab.words[i] for i in order[: k - 1]]


def bounding_box_of_words(words: Sequence[str], vocab: Vocabulary, table: EmbeddingTable) -> Box:
    """Componentwise min/max box over the embeddings of an explicit word list."""
    if not words:
        raise InvalidInput("bounding box of an empty word list")
    rows = np.stack([table.vectors[vocab.index(w)] for w in words])
    return Box(lo=rows.min(axis=0), hi=rows.max(axis=0))


def word_box(word: str, spec: PerturbationSpec, vocab: Vocabulary, table: EmbeddingTable) -> Box:
    """Per-word perturbation region in R^d; always contains the word's vector."""
    x = table.vectors[vocab.index(word)]
    if isinstance(spec, EpsBall):
        return Box(lo=x - spec.eps, hi=x + spec.eps)
    return bounding_box_of_words(knn(word, spec.k, spec.metric, vocab, table), vocab, table)


def build_perturbation(
    t: TextInput,
    fixed: Sequence[int],
    spec: PerturbationSpec,
    vocab: Vocabulary,
    table: EmbeddingTable,
) -> Box:
    """Text-level box: degenerate on fixed word positions, word_box elsewhere."""
    fixed = set(fixed)
    for i in fixed:
        if not (0 <= i < t.length):
            raise InvalidIndex(f"word index {i} outside 0..{t.length - 1}")
    lo = t.point.copy()
    hi = t.point.copy()
    for i in range(t.length):
        if i in fixed:
            continue
        wb = word_box(t.tokens[i], spec, vocab, table)
        lo[i * t.dim : (i + 1) * t.dim] = wb.lo
        hi[i * t.dim : (i + 1) * t.dim] = wb.hi
    return Box(lo=lo, hi=hi)


# --- embedding files ---------------------------------------------------------

def embedding_to_obj(vocab: Vocabulary, table: EmbeddingTable) -> dict:
    return {
        "dim": table.dim,
        "words": list(vocab.words),
        "vectors": [[float(v) for v in row] for row in table.vectors],
    }


def save_embedding(vocab: Vocabulary, table: EmbeddingTable) -> bytes:
    return canonical_dumps(embedding_to_obj(vocab, table)).encode("utf-8")


def embedding_from_obj(obj: dict) -> tuple:
    if not isinstance(obj, dict):
        raise ModelFormatError("embedding file must hold a JSON object")
    for key in ("dim", "words", "vectors"):
        if key not in obj:
            raise ModelFormatError(f"missing key {key!r}", "$")
    words = obj["words"]
    if not isinstance(words, list) or not all(isinstance(w, str) for w in words):
        raise ModelFormatError("must be a list of strings", "words")
    try:
        vectors = np.asarray(obj["vectors"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"not a numeric matrix: {exc}", "vectors") from exc
    if vectors.ndim != 2 or vectors.shape[0] != len(words):
        raise ModelFormatError(
            f"vectors shape {vectors.shape} does not match {len(words)} words", "vectors"
        )
    try:
        vocab = Vocabulary(words=tuple(words))
        table = EmbeddingTable(dim=int(obj["dim"]), vectors=vectors)
    except InvalidInput as exc:
        raise ModelFormatError(str(exc)) from exc
    return vocab, table


def load_embedding(source: Union[str, bytes, BinaryIO]) -> tuple:
    if isinstance(source, bytes):
        data = source
    elif isinstance(source, (io.IOBase,)) or hasattr(source, "read"):
        data = source.read()
    else:
        with open(source, "rb") as fh:
            data = fh.read()
    try:
        obj = json.loads(data.decode("utf-8") if isinstance(data, bytes) else data)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"not valid UTF-8 JSON: {exc}") from exc
    return embedding_from_obj(obj)
