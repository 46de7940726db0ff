"""Corpus ingestion: tokenization, vocabularies, encoding, and statistics.

Input formats:

* corpus: JSON Lines, one object per line —
  ``{"id": "...", "text": "...", "label": 0|1, "retweet": true}`` where
  ``label`` and ``retweet`` are optional; UTF-8.
* lexicon: plain text, one lowercase romanized word per line, ``#`` comments.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import UserInputError

PAD = "<pad>"
UNK = "<unk>"
PAD_INDEX = 0
UNK_INDEX = 1

MENTION = "<mention>"
URL = "<url>"
_PLACEHOLDERS = {MENTION, URL}

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")
# branches: kept placeholder | hashtag (captures the bare word) | word | punctuation run
_TOKEN_RE = re.compile(r"<url>|<mention>|#(\w+)|\w+|[^\w\s]+")
_PUNCT_RUN_RE = re.compile(r"[^\w\s]+")


@dataclass(frozen=True)
class Document:
    """One short text with a stable id and an optional binary label."""

    id: str
    text: str
    label: int | None = None
    is_retweet: bool = False

    def __post_init__(self):
        if not self.id:
            raise ValueError("document id must be non-empty")
        if self.label is not None and self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


def tokenize(text: str) -> list[str]:
    """Lowercase tokens with mentions collapsed to ``<mention>``, URLs to
    ``<url>``, hashtags stripped of ``#``, and punctuation runs kept as
    separate tokens.

    Idempotent: re-tokenizing the space-joined output reproduces it.
    """
    if not text:
        return []
    text = text.lower()
    text = _URL_RE.sub(f" {URL} ", text)
    text = _MENTION_RE.sub(f" {MENTION} ", text)
    tokens = []
    for m in _TOKEN_RE.finditer(text):
        hashtag_word = m.group(1)
        tokens.append(hashtag_word if hashtag_word is not None else m.group(0))
    return tokens


@dataclass
class Vocabulary:
    """Bijective token/index mapping with reserved PAD=0 and UNK=1 slots."""

    token_to_index: dict[str, int]
    index_to_token: list[str]
    counts: dict[str, int]

    def __len__(self) -> int:
        return len(self.index_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_index

    def index(self, token: str) -> int:
        """Index of ``token``, falling back to UNK."""
        return self.token_to_index.get(token, UNK_INDEX)

    @classmethod
    def from_tokens(cls, tokens: list[str], counts: dict[str, int] | None = None) -> "Vocabulary":
        """Rebuild a vocabulary from an explicit index-ordered token list."""
        if len(tokens) < 2 or tokens[0] != PAD or tokens[1] != UNK:
            raise ValueError(f"token list must start with {PAD!r}, {UNK!r}")
        if len(set(tokens)) != len(tokens):
            raise ValueError("duplicate tokens in vocabulary")
        return cls(
            token_to_index={t: i for i, t in enumerate(tokens)},
            index_to_token=list(tokens),
            counts=dict(counts or {}),
        )


def build_vocabulary(docs: list[Document], min_count: int = 1) -> Vocabulary:
    """Vocabulary over all tokens occurring at least ``min_count`` times.

    Non-reserved indices are assigned by descending count, ties broken
    lexicographically, so builds are deterministic across runs and platforms.
    """
    if not docs:
        raise UserInputError("empty corpus")
    if min_count < 1:
        raise ValueError("min_count must be a positive integer")
    counts: Counter[str] = Counter()
    for doc in docs:
        counts.update(tokenize(doc.text))
    kept = sorted(
        (tok for tok, c in counts.items() if c >= min_count),
        key=lambda tok: (-counts[tok], tok),
    )
    index_to_token = [PAD, UNK, *kept]
    return Vocabulary(
        token_to_index={tok: i for i, tok in enumerate(index_to_token)},
        index_to_token=index_to_token,
        counts={tok: counts[tok] for tok in kept},
    )


def encode_tokens(tokens: list[str], vocab: Vocabulary, max_len: int) -> list[int]:
    """Map tokens to indices (missing -> UNK), truncate at the right to
    ``max_len``, right-pad with PAD."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    ids = [vocab.index(tok) for tok in tokens[:max_len]]
    ids.extend([PAD_INDEX] * (max_len - len(ids)))
    return ids


def encode(doc: Document, vocab: Vocabulary, max_len: int) -> list[int]:
    return encode_tokens(tokenize(doc.text), vocab, max_len)


def decode(indices: list[int], vocab: Vocabulary) -> list[str]:
    """Tokens for ``indices`` up to (not including) the first PAD."""
    tokens = []
    for i in indices:
        if i == PAD_INDEX:
            break
        tokens.append(vocab.index_to_token[i])
    return tokens


@dataclass(frozen=True)
class LanguageLexicon:
    """Set of romanized word forms tagged as Hindi.

    Replaces the external translation service as the language identifier;
    any mapping token -> Hindi? can be swapped in by building a lexicon.
    """

    entries: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        for word in self.entries:
            if not word or word != word.lower() or any(ch.isspace() for ch in word):
                raise ValueError(f"lexicon entries must be lowercase and whitespace-free: {word!r}")

    def __contains__(self, token: str) -> bool:
        return token in self.entries

    def __len__(self) -> int:
        return len(self.entries)


def read_lexicon(path) -> LanguageLexicon:
    path = Path(path)
    if not path.exists():
        raise UserInputError(f"lexicon file not found: {path}")
    words = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            entry = line.split("#", 1)[0].strip()
            if not entry:
                continue
            if any(ch.isspace() for ch in entry):
                raise UserInputError(f"{path}:{lineno}: one word per line, got {entry!r}")
            words.add(entry.lower())
    return LanguageLexicon(entries=frozenset(words))


def _is_word_token(token: str) -> bool:
    return token not in _PLACEHOLDERS and _PUNCT_RUN_RE.fullmatch(token) is None


def hindi_proportion(tokens: list[str], lexicon: LanguageLexicon) -> float:
    """Fraction of word tokens found in the lexicon.

    Word tokens exclude ``<mention>``, ``<url>``, and pure-punctuation
    tokens; an empty denominator yields 0.
    """
    words = [tok for tok in tokens if _is_word_token(tok)]
    if not words:
        return 0.0
    return sum(1 for tok in words if tok in lexicon) / len(words)


@dataclass(frozen=True)
class CorpusStats:
    """Corpus-level aggregates for the dataset-statistics report."""

    num_documents: int
    num_retweets: int
    total_tokens: int
    vocab_size: int  # non-reserved entries only
    pct_hindi_tokens_mean: float

    def __post_init__(self):
        if self.vocab_size > self.total_tokens:
            raise ValueError("vocab_size cannot exceed total_tokens")
        if self.num_retweets > self.num_documents:
            raise ValueError("num_retweets cannot exceed num_documents")
        if not 0.0 <= self.pct_hindi_tokens_mean <= 100.0:
            raise ValueError("pct_hindi_tokens_mean must be within [0, 100]")


def corpus_stats(docs: list[Document], vocab: Vocabulary, lexicon: LanguageLexicon) -> CorpusStats:
    """Aggregate counts plus the unweighted mean per-document Hindi share."""
    if not docs:
        raise UserInputError("empty corpus")
    token_lists = [tokenize(doc.text) for doc in docs]
    proportions = [hindi_proportion(tokens, lexicon) for tokens in token_lists]
    return CorpusStats(
        num_documents=len(docs),
        num_retweets=sum(1 for doc in docs if doc.is_retweet),
        total_tokens=sum(len(tokens) for tokens in token_lists),
        vocab_size=len(vocab) - 2,
        pct_hindi_tokens_mean=100.0 * sum(proportions) / len(proportions),
    )


def read_corpus(path, require_labels: bool = False) -> list[Document]:
    """Load a JSONL corpus, validating ids, labels, and uniqueness."""
    path = Path(path)
    if not path.exists():
        raise UserInputError(f"corpus file not found: {path}")
    docs: list[Document] = []
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise UserInputError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            if not isinstance(obj, dict):
                raise UserInputError(f"{path}:{lineno}: expected a JSON object")
            doc_id = obj.get("id")
            if not isinstance(doc_id, str) or not doc_id:
                raise UserInputError(f"{path}:{lineno}: missing or empty \"id\"")
            if doc_id in seen_ids:
                raise UserInputError(f"{path}:{lineno}: duplicate id {doc_id!r}")
            seen_ids.add(doc_id)
            text = obj.get("text")
            if not isinstance(text, str):
                raise UserInputError(f"{path}:{lineno}: missing \"text\"")
            label = obj.get("label")
            if label is not None and (isinstance(label, bool) or label not in (0, 1)):
                raise UserInputError(f"{path}:{lineno}: label must be 0 or 1, got {label!r}")
            if require_labels and label is None:
                raise UserInputError(f"{path}:{lineno}: unlabeled document {doc_id!r}")
            retweet = obj.get("retweet", False)
            if not isinstance(retweet, bool):
                raise UserInputError(f"{path}:{lineno}: \"retweet\" must be boolean")
            docs.append(Document(id=doc_id, text=text, label=label, is_retweet=retweet))
    if not docs:
        raise UserInputError(f"{path}: empty corpus")
    return docs
