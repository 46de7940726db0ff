"""Stratified k-fold cross-validation, confusion metrics, and reports.

Every fold retrains from a fresh initialization under a fold-indexed derived
seed, so folds never share state and the whole run is reproducible from one
master seed; because sub-seeds are derived independently, folds may run in
parallel worker processes and still aggregate bitwise-identically.

Reports default to averaging fold metrics (the pooled-confusion alternative
is computed too and selectable via metadata["aggregation"]).
"""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .autodiff import Tape, binary_cross_entropy
from .corpus import Document, encode
from .embeddings import EmbeddingMatrix
from .errors import UserInputError
from .models import ClassifierModel, ModelSpec, build_model
from .optim import AdamConfig, adam_step
from .seeds import derive_seed

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )


@dataclass(frozen=True)
class Metrics:
    """Precision, recall, F-score, accuracy, all as percentages."""

    precision: float
    recall: float
    f_score: float
    accuracy: float

    def __post_init__(self):
        for name in ("precision", "recall", "f_score", "accuracy"):
            v = getattr(self, name)
            if not 0.0 <= v <= 100.0:
                raise ValueError(f"{name} must lie in [0, 100], got {v}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.precision, self.recall, self.f_score, self.accuracy)


def metrics_from_confusion(cm: ConfusionMatrix) -> Metrics:
    """Percent metrics with the zero-denominator -> 0 convention (warned)."""
    if cm.total == 0:
        raise ValueError("metrics over zero samples")
    if cm.tp + cm.fp > 0:
        precision = 100.0 * cm.tp / (cm.tp + cm.fp)
    else:
        precision = 0.0
        logger.warning("no positive predictions: precision set to 0")
    if cm.tp + cm.fn > 0:
        recall = 100.0 * cm.tp / (cm.tp + cm.fn)
    else:
        recall = 0.0
        logger.warning("no positive gold labels: recall set to 0")
    if precision + recall > 0:
        f_score = 2.0 * precision * recall / (precision + recall)
    else:
        f_score = 0.0
        logger.warning("precision and recall both 0: F-score set to 0")
    accuracy = 100.0 * (cm.tp + cm.tn) / cm.total
    return Metrics(precision, recall, f_score, accuracy)


def compute_metrics(probs, gold, threshold: float = 0.5) -> tuple[ConfusionMatrix, Metrics]:
    """Threshold probabilities (predict 1 iff p >= threshold) and score."""
    p = np.asarray(probs, dtype=np.float64)
    y = np.asarray(gold)
    if p.ndim != 1 or y.ndim != 1:
        raise ValueError("probs and gold must be one-dimensional")
    if p.shape != y.shape:
        raise ValueError(f"length mismatch: {p.shape[0]} probs vs {y.shape[0]} labels")
    if p.size == 0:
        raise ValueError("cannot compute metrics on empty input")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("gold labels must be 0 or 1")
    pred = p >= threshold
    actual = y == 1
    cm = ConfusionMatrix(
        tp=int(np.sum(pred & actual)),
        fp=int(np.sum(pred & ~actual)),
        fn=int(np.sum(~pred & actual)),
        tn=int(np.sum(~pred & ~actual)),
    )
    return cm, metrics_from_confusion(cm)


def mean_metrics(items: list[Metrics]) -> Metrics:
    """Arithmetic mean per field (so mean F is the mean of fold Fs)."""
    if not items:
        raise ValueError("mean of zero Metrics")
    cols = np.array([m.as_tuple() for m in items])
    return Metrics(*(float(v) for v in cols.mean(axis=0)))


# ---------------------------------------------------------------------------
# fold assignment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FoldAssignment:
    """Fold index per document position; produced by stratified dealing."""

    folds: tuple[int, ...]
    k: int
    seed: int

    def __post_init__(self):
        if any(not 0 <= f < self.k for f in self.folds):
            raise ValueError("fold indices must lie in [0, k)")

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.folds) == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.folds) != fold)


def stratified_kfold(labels, k: int = 10, seed: int = 0) -> FoldAssignment:
    """Shuffle each class with the seeded generator, deal round-robin.

    Per-class counts across folds then differ by at most one. A single-class
    input degrades to plain shuffled k-fold.
    """
    y = np.asarray(labels)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("labels must be a non-empty one-dimensional sequence")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if k > y.size:
        raise ValueError(f"k={k} exceeds the {y.size} available samples")
    rng = np.random.default_rng(seed)
    folds = np.empty(y.size, dtype=np.int64)
    for cls in (0, 1):
        members = np.flatnonzero(y == cls)
        dealt = rng.permutation(members)
        folds[dealt] = np.arange(dealt.size) % k
    return FoldAssignment(folds=tuple(int(f) for f in folds), k=k, seed=seed)


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


def _require_labels(docs: list[Document]) -> np.ndarray:
    for doc in docs:
        if doc.label is None:
            raise UserInputError(f"document {doc.id!r} is unlabeled")
    return np.array([doc.label for doc in docs], dtype=np.int64)


def encode_docs(docs: list[Document], vocab, max_len: int) -> np.ndarray:
    return np.array([encode(doc, vocab, max_len) for doc in docs], dtype=np.int64)


def fit_encoded(
    spec: ModelSpec,
    x: np.ndarray,
    y: np.ndarray,
    embedding_vectors: np.ndarray,
    seed: int,
    adam: AdamConfig | None = None,
    loss_callback=None,
) -> ClassifierModel:
    """Mini-batch Adam on already-encoded sequences.

    Initialization and the shuffle/dropout stream use separate sub-seeds of
    ``seed``; the final partial batch is used as-is; per-epoch mean loss is
    logged and passed to ``loss_callback(epoch, loss, model)`` when given.
    """
    if len(x) == 0:
        raise ValueError("empty training set")
    if len(x) != len(y):
        raise ValueError(f"{len(x)} sequences vs {len(y)} labels")
    adam = adam or AdamConfig()
    model = build_model(replace(spec, seed=derive_seed(seed, "init")), embedding_vectors)
    rng = np.random.default_rng(derive_seed(seed, "train"))
    targets = y.astype(np.float64)
    for epoch in range(spec.epochs):
        order = rng.permutation(len(x))
        batch_losses = []
        for start in range(0, len(x), spec.batch_size):
            batch = order[start:start + spec.batch_size]
            with Tape() as tape:
                probs = model.forward(x[batch], training=True, rng=rng)
                loss = binary_cross_entropy(probs, targets[batch])
                tape.backward(loss)
            for param in model.trainable_parameters().values():
                if param.value.grad is not None:
                    adam_step(param, param.value.grad, adam)
            batch_losses.append(loss.item())
        mean_loss = float(np.mean(batch_losses))
        logger.info(
            "%s epoch %d/%d: mean batch loss %.6f",
            spec.architecture, epoch + 1, spec.epochs, mean_loss,
        )
        if loss_callback is not None:
            loss_callback(epoch, mean_loss, model)
    return model


def train_model(
    spec: ModelSpec,
    train_docs: list[Document],
    embeddings: EmbeddingMatrix,
    seed: int,
    loss_callback=None,
) -> ClassifierModel:
    """Encode documents against the embedding vocabulary and fit."""
    if not train_docs:
        raise ValueError("empty training set")
    vocab = embeddings.require_vocab()
    y = _require_labels(train_docs)
    x = encode_docs(train_docs, vocab, spec.max_len)
    return fit_encoded(spec, x, y, embeddings.vectors, seed, loss_callback=loss_callback)


def _default_train_fn(spec, x_train, y_train, embedding_vectors, seed):
    return fit_encoded(spec, x_train, y_train, embedding_vectors, seed)


def _run_fold(args):
    """One fold end to end; top-level so worker processes can import it."""
    fold, spec, x, y, embedding_vectors, train_idx, test_idx, fold_seed, train_fn = args
    trainer = train_fn or _default_train_fn
    model = trainer(spec, x[train_idx], y[train_idx], embedding_vectors, fold_seed)
    probs = model.predict_proba(x[test_idx])
    cm, metrics = compute_metrics(probs, y[test_idx])
    return fold, cm, metrics


# ---------------------------------------------------------------------------
# cross-validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ArchitectureResult:
    architecture: str
    fold_metrics: tuple[Metrics, ...]
    fold_confusions: tuple[ConfusionMatrix, ...]
    mean_metrics: Metrics
    pooled_metrics: Metrics


@dataclass(frozen=True)
class CVReport:
    results: tuple[ArchitectureResult, ...]
    metadata: dict

    def selected_metrics(self, result: ArchitectureResult) -> Metrics:
        if self.metadata.get("aggregation") == "pooled":
            return result.pooled_metrics
        return result.mean_metrics


def cross_validate(
    spec: ModelSpec,
    docs: list[Document],
    embeddings: EmbeddingMatrix,
    k: int = 10,
    seed: int = 0,
    jobs: int = 1,
    train_fn=None,
    corpus_checksum: str | None = None,
    aggregation: str = "fold-mean",
) -> CVReport:
    """Train/evaluate ``spec`` across stratified folds of ``docs``.

    Every document is evaluated exactly once. ``train_fn`` replaces the
    default trainer (same signature as fit_encoded minus the keyword args)
    and exists so evaluation logic can be tested with degenerate models.
    """
    if aggregation not in ("fold-mean", "pooled"):
        raise ValueError(f"unknown aggregation {aggregation!r}")
    y = _require_labels(docs)
    vocab = embeddings.require_vocab()
    x = encode_docs(docs, vocab, spec.max_len)
    assignment = stratified_kfold(y, k, derive_seed(seed, "folds"))
    tasks = [
        (
            fold,
            spec,
            x,
            y,
            embeddings.vectors,
            assignment.train_indices(fold),
            assignment.test_indices(fold),
            derive_seed(seed, f"fold-{fold}"),
            train_fn,
        )
        for fold in range(k)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_fold, tasks))
    else:
        outcomes = [_run_fold(t) for t in tasks]
    outcomes.sort(key=lambda item: item[0])
    confusions = tuple(cm for _, cm, _ in outcomes)
    fold_metrics = tuple(m for _, _, m in outcomes)
    pooled_cm = confusions[0]
    for cm in confusions[1:]:
        pooled_cm = pooled_cm + cm
    result = ArchitectureResult(
        architecture=spec.architecture,
        fold_metrics=fold_metrics,
        fold_confusions=confusions,
        mean_metrics=mean_metrics(list(fold_metrics)),
        pooled_metrics=metrics_from_confusion(pooled_cm),
    )
    metadata = {
        "toolkit_version": __version__,
        "seed": seed,
        "k": k,
        "stratified": True,
        "aggregation": aggregation,
        "corpus_sha256": corpus_checksum,
        "n_documents": len(docs),
        "model_specs": {spec.architecture: spec.to_dict()},
    }
    return CVReport(results=(result,), metadata=metadata)


def combine_reports(reports: list[CVReport]) -> CVReport:
    """Merge single-architecture reports from one run into one report."""
    if not reports:
        raise ValueError("no reports to combine")
    base = dict(reports[0].metadata)
    results = []
    specs = {}
    for report in reports:
        for key in ("seed", "k", "corpus_sha256", "aggregation", "n_documents"):
            if report.metadata.get(key) != base.get(key):
                raise ValueError(f"reports disagree on {key}, cannot combine")
        results.extend(report.results)
        specs.update(report.metadata.get("model_specs", {}))
    base["model_specs"] = specs
    return CVReport(results=tuple(results), metadata=base)


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

CSV_HEADER = ["architecture", "fold", "precision", "recall", "f_score", "accuracy"]


def render_report(report: CVReport, format: str = "table") -> str:
    """Render P/R/F/A percentages with two decimals.

    ``table`` gives one aggregate row per architecture; ``csv`` adds the
    per-fold rows, with the aggregate in a ``mean`` row.
    """
    if format == "table":
        lines = [f"{'Architecture':<14}{'P(%)':>8}{'R(%)':>8}{'F(%)':>8}{'A(%)':>8}"]
        for result in report.results:
            m = report.selected_metrics(result)
            lines.append(
                f"{result.architecture:<14}{m.precision:>8.2f}{m.recall:>8.2f}"
                f"{m.f_score:>8.2f}{m.accuracy:>8.2f}"
            )
        return "\n".join(lines) + "\n"
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for result in report.results:
            for fold, m in enumerate(result.fold_metrics):
                writer.writerow(
                    [result.architecture, fold] + [f"{v:.2f}" for v in m.as_tuple()]
                )
            agg = report.selected_metrics(result)
            writer.writerow(
                [result.architecture, "mean"] + [f"{v:.2f}" for v in agg.as_tuple()]
            )
        return buf.getvalue()
    raise ValueError(f"unknown report format {format!r}")


def parse_report_csv(text: str) -> dict[str, dict]:
    """Invert render_report(..., "csv"): {architecture: {"folds": [...], "mean": ...}}
    with each entry a (P, R, F, A) float tuple."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != CSV_HEADER:
        raise ValueError("unrecognized report header")
    out: dict[str, dict] = {}
    for arch, fold, *values in rows[1:]:
        entry = out.setdefault(arch, {"folds": [], "mean": None})
        parsed = tuple(float(v) for v in values)
        if fold == "mean":
            entry["mean"] = parsed
        else:
            entry["folds"].append((int(fold), parsed))
    for entry in out.values():
        entry["folds"] = [m for _, m in sorted(entry["folds"])]
    return out
