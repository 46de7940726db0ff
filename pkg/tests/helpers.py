"""Shared fixtures-as-functions and the finite-difference gradient checker."""

from __future__ import annotations

import json

import numpy as np

from hatemix.autodiff import Tape, Tensor, backward
from hatemix.corpus import PAD, UNK, Document, Vocabulary
from hatemix.embeddings import EmbeddingMatrix


def relative_error(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a) + abs(b), 1e-6)


def check_gradients(make_loss, arrays: dict[str, np.ndarray], n_coords: int = 20,
                    h: float = 1e-5, tol: float = 1e-4, seed: int = 0) -> None:
    """Compare backprop against central finite differences.

    ``make_loss`` maps {name: Tensor} to a scalar Tensor and must be
    deterministic; it is re-evaluated untaped for each probe. Up to
    ``n_coords`` random coordinates are probed per array.
    """
    tensors = {name: Tensor(arr.copy()) for name, arr in arrays.items()}
    with Tape() as tape:
        loss = make_loss(tensors)
        backward(tape, loss)
    grads = {name: tensors[name].grad for name in arrays}

    def eval_loss(perturbed: dict[str, np.ndarray]) -> float:
        return make_loss({name: Tensor(arr) for name, arr in perturbed.items()}).item()

    rng = np.random.default_rng(seed)
    for name, arr in arrays.items():
        grad = grads[name]
        assert grad is not None, f"no gradient reached {name!r}"
        assert grad.shape == arr.shape
        count = min(n_coords, arr.size)
        coords = rng.choice(arr.size, size=count, replace=False)
        for flat_index in coords:
            idx = np.unravel_index(flat_index, arr.shape)
            plus = {k: v.copy() for k, v in arrays.items()}
            minus = {k: v.copy() for k, v in arrays.items()}
            plus[name][idx] += h
            minus[name][idx] -= h
            fd = (eval_loss(plus) - eval_loss(minus)) / (2.0 * h)
            bp = float(grad[idx])
            rel = relative_error(fd, bp)
            assert rel < tol, (
                f"{name}{list(idx)}: finite diff {fd:.10g} vs backprop {bp:.10g} "
                f"(relative error {rel:.3g})"
            )


# ---------------------------------------------------------------------------
# synthetic corpora
# ---------------------------------------------------------------------------


def make_separable_corpus(n: int = 64, seed: int = 7):
    """Labeled docs where exactly the positive ones contain 'bad*' words.

    Returns (docs, embedding matrix, max_len); linearly separable, so every
    architecture can reach 100% training accuracy.
    """
    rng = np.random.default_rng(seed)
    good = [f"good{i}" for i in range(6)]
    bad = [f"bad{i}" for i in range(6)]
    filler = [f"w{i}" for i in range(8)]
    docs = []
    for i in range(n):
        label = i % 2
        pool = bad if label else good
        words = list(rng.choice(filler, size=4)) + list(rng.choice(pool, size=2))
        rng.shuffle(words)
        docs.append(Document(id=f"d{i}", text=" ".join(words), label=label))
    tokens = [PAD, UNK] + good + bad + filler
    vocab = Vocabulary.from_tokens(tokens)
    vectors = rng.normal(scale=1.0, size=(len(tokens), 16))
    vectors[0] = 0.0
    emb = EmbeddingMatrix(tokens=tokens, vectors=vectors, vocab=vocab)
    return docs, emb, 6


def make_cluster_corpus(n_words: int = 20, docs_per_cluster: int = 120,
                        sentence_len: int = 8, seed: int = 3):
    """Two topic clusters with disjoint vocabularies; returns (docs, a, b)."""
    rng = np.random.default_rng(seed)
    a = [f"alpha{i}" for i in range(n_words)]
    b = [f"beta{i}" for i in range(n_words)]
    docs = []
    for i in range(docs_per_cluster):
        docs.append(Document(id=f"a{i}", text=" ".join(rng.choice(a, size=sentence_len))))
        docs.append(Document(id=f"b{i}", text=" ".join(rng.choice(b, size=sentence_len))))
    return docs, a, b


CODEMIXED_HATE = ["nafrat", "gussa", "kutta", "stupid", "idiot", "gandi"]
CODEMIXED_NEUTRAL = [
    "cricket", "movie", "khana", "dost", "school", "paani",
    "love", "happy", "chai", "game", "acchi", "baat",
]


def make_codemixed_corpus(n: int = 200, seed: int = 42) -> list[Document]:
    """Synthetic code-mixed labeled tweets (English + romanized Hindi)."""
    rng = np.random.default_rng(seed)
    docs = []
    for i in range(n):
        label = i % 2
        words = list(rng.choice(CODEMIXED_NEUTRAL, size=8))
        if label:
            words[rng.integers(0, 8)] = str(rng.choice(CODEMIXED_HATE))
            words[rng.integers(0, 8)] = str(rng.choice(CODEMIXED_HATE))
        docs.append(Document(id=f"t{i}", text=" ".join(words), label=label))
    return docs


def write_corpus_jsonl(path, docs: list[Document]) -> None:
    lines = []
    for doc in docs:
        record = {"id": doc.id, "text": doc.text}
        if doc.label is not None:
            record["label"] = doc.label
        if doc.is_retweet:
            record["retweet"] = True
        lines.append(json.dumps(record))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def make_embedding_matrix(real_tokens: list[str], dim: int = 8, seed: int = 0,
                          scale: float = 1.0) -> EmbeddingMatrix:
    """Random embedding matrix with the reserved rows in place (PAD row zero)."""
    tokens = [PAD, UNK] + list(real_tokens)
    rng = np.random.default_rng(seed)
    vectors = rng.normal(scale=scale, size=(len(tokens), dim))
    vectors[0] = 0.0
    return EmbeddingMatrix(tokens=tokens, vectors=vectors,
                           vocab=Vocabulary.from_tokens(tokens))
