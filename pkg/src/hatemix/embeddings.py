"""Skip-gram negative-sampling word embeddings plus similarity analyses.

Training is single-threaded and fully deterministic given the config seed:
subsampling draws, window shrinking, and negative draws all come from one
generator consumed in corpus order. Only center vectors are exported.

Interchange format: plain text, header ``"V dim"``, then one line per token
(token followed by ``dim`` floats). Values are printed with 17 significant
digits, so a save/load round trip is bit-exact.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import PAD, UNK, Document, Vocabulary, build_vocabulary, tokenize
from .errors import UserInputError

logger = logging.getLogger(__name__)

_RESERVED_ROWS = 2  # PAD and UNK occupy rows 0 and 1, never trained


@dataclass
class SkipGramConfig:
    dim: int = 300
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    min_count: int = 5
    initial_learning_rate: float = 0.025
    min_learning_rate: float = 1e-4
    subsample_threshold: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        for name in ("dim", "window", "negatives", "epochs", "min_count"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")


@dataclass
class EmbeddingMatrix:
    """Token-aligned vector matrix; row i is the vector of tokens[i].

    ``vocab`` is present for matrices trained here (or loaded from files
    carrying the reserved PAD/UNK rows); externally produced files may lack
    it and then support only similarity lookups, not document encoding.
    """

    tokens: list[str]
    vectors: np.ndarray
    vocab: Vocabulary | None = None
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.tokens):
            raise ValueError("vectors must be (len(tokens), dim)")
        if not np.isfinite(self.vectors).all():
            raise ValueError("embedding matrix contains non-finite values")
        self._index = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self._index) != len(self.tokens):
            raise ValueError("duplicate tokens in embedding matrix")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def row(self, token: str) -> np.ndarray:
        try:
            return self.vectors[self._index[token]]
        except KeyError:
            raise UserInputError(f"token {token!r} not in embedding vocabulary") from None

    def require_vocab(self) -> Vocabulary:
        if self.vocab is None:
            raise UserInputError(
                "embedding file lacks the reserved <pad>/<unk> rows needed for encoding"
            )
        return self.vocab


def _sigmoid(x: np.ndarray) -> np.ndarray:
    t = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + t), t / (1.0 + t))


def _softplus(x: np.ndarray) -> np.ndarray:
    # log(1 + e^x), stable for large |x|
    return np.log1p(np.exp(-np.abs(x))) + np.maximum(x, 0.0)


def train_embeddings(docs: list[Document], cfg: SkipGramConfig, loss_callback=None) -> EmbeddingMatrix:
    """Train center vectors with skip-gram negative sampling.

    Negatives are drawn from the unigram distribution raised to 0.75; tokens
    are subsampled with keep probability min(1, sqrt(t/f) + t/f); the
    learning rate decays linearly from the initial value to the floor. If
    given, ``loss_callback(epoch, mean_loss)`` is invoked per epoch.
    """
    vocab = build_vocabulary(docs, cfg.min_count)
    n_vocab = len(vocab)
    if n_vocab <= _RESERVED_ROWS:
        raise UserInputError("empty corpus after min-count filtering")

    sentences = []
    for doc in docs:
        ids = [vocab.token_to_index[t] for t in tokenize(doc.text) if t in vocab]
        if ids:
            sentences.append(np.asarray(ids, dtype=np.int64))
    if not sentences:
        raise UserInputError("empty corpus after min-count filtering")

    counts = np.zeros(n_vocab, dtype=np.float64)
    for tok, c in vocab.counts.items():
        counts[vocab.token_to_index[tok]] = c
    total = counts.sum()

    # keep probability per vocab index (subsampling of frequent words)
    freq = counts / total
    with np.errstate(divide="ignore"):
        keep = np.minimum(
            1.0,
            np.sqrt(cfg.subsample_threshold / freq) + cfg.subsample_threshold / freq,
        )
    keep[:_RESERVED_ROWS] = 0.0

    # cumulative noise table over real tokens, unigram^0.75
    noise_ids = np.arange(_RESERVED_ROWS, n_vocab)
    noise_weights = counts[noise_ids] ** 0.75
    noise_cum = np.cumsum(noise_weights)
    noise_total = noise_cum[-1]

    rng = np.random.default_rng(cfg.seed)
    syn0 = (rng.random((n_vocab, cfg.dim)) - 0.5) / cfg.dim
    syn0[:_RESERVED_ROWS] = 0.0
    syn1 = np.zeros((n_vocab, cfg.dim))

    labels = np.zeros(cfg.negatives + 1)
    labels[0] = 1.0
    targets = np.empty(cfg.negatives + 1, dtype=np.int64)

    total_sentences = cfg.epochs * len(sentences)
    processed = 0
    only_one_real_token = len(noise_ids) == 1
    for epoch in range(cfg.epochs):
        epoch_loss = 0.0
        epoch_pairs = 0
        for sent in sentences:
            alpha = max(
                cfg.min_learning_rate,
                cfg.initial_learning_rate * (1.0 - processed / total_sentences),
            )
            processed += 1
            kept = sent[rng.random(len(sent)) < keep[sent]]
            for i, center in enumerate(kept):
                span = int(rng.integers(1, cfg.window + 1))
                window_ids = np.concatenate(
                    (kept[max(0, i - span):i], kept[i + 1:i + 1 + span])
                )
                for context in window_ids:
                    targets[0] = context
                    for j in range(1, cfg.negatives + 1):
                        draw = int(np.searchsorted(noise_cum, rng.random() * noise_total))
                        if not only_one_real_token:
                            for _ in range(16):  # bounded redraw, keeps determinism
                                if noise_ids[draw] != context:
                                    break
                                draw = int(np.searchsorted(noise_cum, rng.random() * noise_total))
                        targets[j] = noise_ids[draw]
                    l1 = syn0[center]
                    l2 = syn1[targets]
                    scores = l2 @ l1
                    g = (labels - _sigmoid(scores)) * alpha
                    syn1[targets] += np.outer(g, l1)
                    syn0[center] += g @ l2
                    epoch_loss += _softplus(-scores[0]) + _softplus(scores[1:]).sum()
                    epoch_pairs += 1
        mean_loss = epoch_loss / max(epoch_pairs, 1)
        logger.info("skip-gram epoch %d/%d: mean pair loss %.6f", epoch + 1, cfg.epochs, mean_loss)
        if loss_callback is not None:
            loss_callback(epoch, mean_loss)

    return EmbeddingMatrix(tokens=list(vocab.index_to_token), vectors=syn0, vocab=vocab)


# ---------------------------------------------------------------------------
# similarity analyses
# ---------------------------------------------------------------------------


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"vector shapes differ: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("undefined similarity for a zero vector")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def group_similarity(reference: str, group: list[str], emb: EmbeddingMatrix) -> float:
    """Mean cosine similarity of ``reference`` against the in-vocabulary
    members of ``group``; out-of-vocabulary members are skipped and logged."""
    if reference not in emb:
        raise UserInputError(f"reference token {reference!r} not in embedding vocabulary")
    ref = emb.row(reference)
    in_vocab = [tok for tok in group if tok in emb]
    if not in_vocab:
        raise UserInputError(f"no group token of {group!r} is in the embedding vocabulary")
    skipped = len(group) - len(in_vocab)
    if skipped:
        logger.warning("group similarity: skipped %d out-of-vocabulary token(s)", skipped)
    return float(np.mean([cosine_similarity(ref, emb.row(tok)) for tok in in_vocab]))


def coverage_check(words: list[str], emb: EmbeddingMatrix) -> tuple[list[str], list[str]]:
    """Partition ``words`` into (present, missing), preserving order."""
    present = [w for w in words if w in emb]
    missing = [w for w in words if w not in emb]
    return present, missing


def nearest_neighbors(word: str, k: int, emb: EmbeddingMatrix) -> list[tuple[str, float]]:
    """Top-k tokens by cosine similarity, excluding the query and any
    zero-norm rows; ties broken lexicographically."""
    if word not in emb:
        raise UserInputError(f"token {word!r} not in embedding vocabulary")
    if not 1 <= k < len(emb):
        raise ValueError(f"k must satisfy 1 <= k < vocabulary size, got {k}")
    q = emb.row(word)
    nq = np.linalg.norm(q)
    if nq == 0.0:
        raise ValueError("undefined similarity for a zero vector")
    norms = np.linalg.norm(emb.vectors, axis=1)
    scored = []
    for i, tok in enumerate(emb.tokens):
        if tok == word or norms[i] == 0.0:
            continue
        sim = float(np.clip(emb.vectors[i] @ q / (norms[i] * nq), -1.0, 1.0))
        scored.append((tok, sim))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:k]


@dataclass(frozen=True)
class SimilarityRow:
    group_name: str
    domain_similarity: float
    general_similarity: float | None = None


@dataclass(frozen=True)
class SimilarityReport:
    reference_word: str
    rows: list[SimilarityRow]

    def to_csv(self) -> str:
        lines = ["group_name,domain_similarity,general_similarity"]
        for row in self.rows:
            general = "" if row.general_similarity is None else f"{row.general_similarity:.6f}"
            lines.append(f"{row.group_name},{row.domain_similarity:.6f},{general}")
        return "\n".join(lines) + "\n"


def build_similarity_report(
    reference: str,
    groups: list[tuple[str, list[str]]],
    emb: EmbeddingMatrix,
    general_emb: EmbeddingMatrix | None = None,
) -> SimilarityReport:
    """Group-mean similarity rows for the domain matrix, with a general
    column when a second matrix is supplied (blank where it lacks the words)."""
    rows = []
    for name, words in groups:
        domain = group_similarity(reference, words, emb)
        general = None
        if general_emb is not None:
            try:
                general = group_similarity(reference, words, general_emb)
            except UserInputError as exc:
                logger.warning("general embeddings: %s", exc)
        rows.append(SimilarityRow(name, domain, general))
    return SimilarityReport(reference_word=reference, rows=rows)


# ---------------------------------------------------------------------------
# interchange format
# ---------------------------------------------------------------------------


def save_embeddings(emb: EmbeddingMatrix, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(emb)} {emb.dim}\n")
        for tok, vec in zip(emb.tokens, emb.vectors):
            if any(ch.isspace() for ch in tok):
                raise ValueError(f"token {tok!r} contains whitespace")
            fh.write(tok + " " + " ".join(f"{x:.17g}" for x in vec) + "\n")


def load_embeddings(path) -> EmbeddingMatrix:
    path = Path(path)
    if not path.exists():
        raise UserInputError(f"embedding file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        try:
            n_rows, dim = int(header[0]), int(header[1])
            if len(header) != 2 or n_rows < 1 or dim < 1:
                raise ValueError
        except (ValueError, IndexError):
            raise UserInputError(f"{path}:1: malformed header, expected \"V dim\"") from None
        tokens: list[str] = []
        seen: set[str] = set()
        vectors = np.empty((n_rows, dim))
        for lineno, line in enumerate(fh, start=2):
            row = lineno - 2
            if row >= n_rows:
                raise UserInputError(f"{path}:{lineno}: more rows than the header's {n_rows}")
            parts = line.split()
            if len(parts) != dim + 1:
                raise UserInputError(
                    f"{path}:{lineno}: expected a token and {dim} values, got {len(parts)} fields"
                )
            tok = parts[0]
            if tok in seen:
                raise UserInputError(f"{path}:{lineno}: duplicate token {tok!r}")
            seen.add(tok)
            tokens.append(tok)
            try:
                vectors[row] = [float(x) for x in parts[1:]]
            except ValueError:
                raise UserInputError(f"{path}:{lineno}: non-numeric value") from None
    if len(tokens) != n_rows:
        raise UserInputError(f"{path}: header promises {n_rows} rows, found {len(tokens)}")
    vocab = None
    if len(tokens) >= 2 and tokens[0] == PAD and tokens[1] == UNK:
        vocab = Vocabulary.from_tokens(tokens)
    return EmbeddingMatrix(tokens=tokens, vectors=vectors, vocab=vocab)
