"""Command-line interface: stats, train-embeddings, probe, cross-validate,
predict.

Conventions shared by every subcommand:

* exit codes: 0 success, 1 internal error, 2 user/input error;
* one ``--seed`` flag; everything stochastic runs off named sub-seeds of it;
* ``--config`` points at a key=value text file whose entries fill in any
  option not given on the command line (flags win);
* commands that write artifacts take ``--out DIR`` and drop an
  ``effective_config.txt`` audit file there, so a run can be reproduced from
  its own output directory. Report commands render a PNG figure next to the
  CSV. No output embeds a timestamp; reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import (
    LanguageLexicon,
    Vocabulary,
    build_vocabulary,
    corpus_stats,
    encode,
    read_corpus,
    read_lexicon,
    tokenize,
)
from .embeddings import (
    SkipGramConfig,
    build_similarity_report,
    load_embeddings,
    save_embeddings,
    train_embeddings,
)
from .errors import UserInputError
from .evaluation import combine_reports, cross_validate, render_report, train_model
from .figures import save_cv_figure, save_similarity_figure
from .models import ARCHITECTURES, ModelSpec, build_model, load_model, save_model
from .seeds import derive_seed

logger = logging.getLogger(__name__)

MAX_DERIVED_LEN = 100


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


# ---------------------------------------------------------------------------
# config files and option resolution
# ---------------------------------------------------------------------------


def read_config(path) -> dict[str, str]:
    """key=value lines; blank lines and '#' comments ignored."""
    path = Path(path)
    if not path.exists():
        raise UserInputError(f"config file not found: {path}")
    entries: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UserInputError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not key:
                raise UserInputError(f"{path}:{lineno}: empty key")
            if key in entries:
                raise UserInputError(f"{path}:{lineno}: duplicate key {key!r}")
            entries[key] = value
    return entries


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(","))


def resolve_options(args, schema: dict, defaults: dict) -> dict:
    """defaults < config file < explicit flags, validated against ``schema``."""
    resolved = dict(defaults)
    config = read_config(args.config) if getattr(args, "config", None) else {}
    for key, value in config.items():
        if key not in schema:
            raise UserInputError(
                f"unknown config key {key!r} (valid: {', '.join(sorted(schema))})"
            )
        try:
            resolved[key] = schema[key](value)
        except ValueError as exc:
            raise UserInputError(f"config key {key!r}: {exc}") from None
    for key in schema:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            resolved[key] = flag_value
    return resolved


def _prepare_outdir(out) -> Path:
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    return outdir


def _format_config_value(value) -> str:
    if isinstance(value, (tuple, list)):
        return ",".join(str(v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def write_effective_config(outdir: Path, entries: dict) -> None:
    lines = [f"{key}={_format_config_value(entries[key])}" for key in sorted(entries)]
    (outdir / "effective_config.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_stats(args) -> int:
    docs = read_corpus(args.corpus)
    lexicon = read_lexicon(args.lexicon) if args.lexicon else LanguageLexicon(frozenset())
    vocab = build_vocabulary(docs)
    stats = corpus_stats(docs, vocab, lexicon)
    rows = [
        ("documents", str(stats.num_documents)),
        ("retweets", str(stats.num_retweets)),
        ("total_tokens", str(stats.total_tokens)),
        ("vocabulary_size", str(stats.vocab_size)),
        ("mean_hindi_token_pct", f"{stats.pct_hindi_tokens_mean:.2f}"),
    ]
    width = max(len(name) for name, _ in rows)
    for name, value in rows:
        print(f"{name:<{width}}  {value}")
    if args.out:
        outdir = _prepare_outdir(args.out)
        csv_text = "statistic,value\n" + "".join(f"{n},{v}\n" for n, v in rows)
        (outdir / "stats.csv").write_text(csv_text, encoding="utf-8")
    return 0


_SGNS_SCHEMA = {
    "dim": int,
    "window": int,
    "negatives": int,
    "epochs": int,
    "min_count": int,
    "initial_learning_rate": float,
    "min_learning_rate": float,
    "subsample_threshold": float,
}


def cmd_train_embeddings(args) -> int:
    docs = read_corpus(args.corpus)
    defaults = {key: getattr(SkipGramConfig, key) for key in _SGNS_SCHEMA}
    opts = resolve_options(args, _SGNS_SCHEMA, defaults)
    try:
        cfg = SkipGramConfig(seed=derive_seed(args.seed, "sgns"), **opts)
    except ValueError as exc:
        raise UserInputError(str(exc)) from None
    emb = train_embeddings(docs, cfg)
    outdir = _prepare_outdir(args.out)
    save_embeddings(emb, outdir / "embeddings.txt")
    write_effective_config(outdir, {"command": "train-embeddings", "seed": args.seed, **opts})
    print(f"wrote {outdir / 'embeddings.txt'}: {len(emb)} tokens, dim {emb.dim}")
    return 0


def read_groups_file(path) -> list[tuple[str, list[str]]]:
    """Lines of ``name: word word ...``; '#' comments allowed."""
    path = Path(path)
    if not path.exists():
        raise UserInputError(f"groups file not found: {path}")
    groups: list[tuple[str, list[str]]] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise UserInputError(f"{path}:{lineno}: expected \"name: word word ...\"")
            name, _, rest = line.partition(":")
            name = name.strip()
            words = [w.lower() for w in rest.split()]
            if not name:
                raise UserInputError(f"{path}:{lineno}: empty group name")
            if name in seen:
                raise UserInputError(f"{path}:{lineno}: duplicate group {name!r}")
            if not words:
                raise UserInputError(f"{path}:{lineno}: group {name!r} has no words")
            seen.add(name)
            groups.append((name, words))
    if not groups:
        raise UserInputError(f"{path}: no groups defined")
    return groups


def cmd_probe(args) -> int:
    emb = load_embeddings(args.embeddings)
    general = load_embeddings(args.embeddings_general) if args.embeddings_general else None
    groups = read_groups_file(args.groups)
    report = build_similarity_report(args.reference.lower(), groups, emb, general)
    csv_text = report.to_csv()
    outdir = _prepare_outdir(args.out)
    (outdir / "similarity.csv").write_text(csv_text, encoding="utf-8")
    save_similarity_figure(report, outdir / "similarity.png")
    write_effective_config(
        outdir,
        {
            "command": "probe",
            "reference": report.reference_word,
            "embeddings": args.embeddings,
            "embeddings_general": args.embeddings_general or "",
            "groups": args.groups,
        },
    )
    print(csv_text, end="")
    return 0


_CV_SCHEMA = {
    "epochs": int,
    "batch_size": int,
    "max_len": int,
    "dropout_rate": float,
    "recurrent_dropout_rate": float,
    "lstm_units": int,
    "filters_per_size": int,
    "filter_sizes": _parse_int_list,
    "aggregation": str,
    "freeze_embeddings": _parse_bool,
}

_CV_DEFAULTS = {
    "epochs": 5,
    "batch_size": 64,
    "max_len": None,
    "dropout_rate": 0.5,
    "recurrent_dropout_rate": 0.2,
    "lstm_units": 100,
    "filters_per_size": 64,
    "filter_sizes": (2, 3, 4),
    "aggregation": "fold-mean",
    "freeze_embeddings": False,
}


def parse_arch_list(text: str) -> list[str]:
    archs = [a.strip() for a in text.split(",") if a.strip()]
    if not archs:
        raise UserInputError("no architecture given")
    for arch in archs:
        if arch not in ARCHITECTURES:
            raise UserInputError(
                f"unknown architecture {arch!r}; valid names: {', '.join(ARCHITECTURES)}"
            )
    if len(set(archs)) != len(archs):
        raise UserInputError("duplicate architecture names")
    return archs


def derive_max_len(docs) -> int:
    longest = max(len(tokenize(doc.text)) for doc in docs)
    return max(1, min(longest, MAX_DERIVED_LEN))


def _build_spec(arch: str, opts: dict, emb_dim: int, max_len: int, seed: int) -> ModelSpec:
    try:
        return ModelSpec(
            architecture=arch,
            max_len=max_len,
            embedding_dim=emb_dim,
            filter_sizes=opts["filter_sizes"],
            filters_per_size=opts["filters_per_size"],
            lstm_units=opts["lstm_units"],
            dropout_rate=opts["dropout_rate"],
            recurrent_dropout_rate=opts["recurrent_dropout_rate"],
            batch_size=opts["batch_size"],
            epochs=opts["epochs"],
            embeddings_trainable=not opts["freeze_embeddings"],
            seed=seed,
        )
    except ValueError as exc:
        raise UserInputError(str(exc)) from None


def cmd_cross_validate(args) -> int:
    docs = read_corpus(args.corpus, require_labels=True)
    emb = load_embeddings(args.embeddings)
    emb.require_vocab()
    archs = parse_arch_list(args.arch)
    opts = resolve_options(args, _CV_SCHEMA, _CV_DEFAULTS)
    if opts["aggregation"] not in ("fold-mean", "pooled"):
        raise UserInputError(
            f"unknown aggregation {opts['aggregation']!r}; valid: fold-mean, pooled"
        )
    if not 2 <= args.k <= len(docs):
        raise UserInputError(f"k must lie in [2, {len(docs)}] for this corpus, got {args.k}")
    if args.jobs < 1:
        raise UserInputError("--jobs must be at least 1")
    max_len = opts["max_len"] if opts["max_len"] is not None else derive_max_len(docs)
    checksum = file_sha256(args.corpus)
    reports = []
    for arch in archs:
        spec = _build_spec(arch, opts, emb.dim, max_len, args.seed)
        probe = build_model(spec, emb.vectors)
        if probe.dense_weights.value.shape[0] != spec.pooled_width:
            raise AssertionError(
                f"{arch}: dense input width {probe.dense_weights.value.shape[0]} "
                f"!= pooled width {spec.pooled_width}"
            )
        logger.info("%s: pooled feature width %d", arch, spec.pooled_width)
        reports.append(
            cross_validate(
                spec,
                docs,
                emb,
                k=args.k,
                seed=args.seed,
                jobs=args.jobs,
                corpus_checksum=checksum,
                aggregation=opts["aggregation"],
            )
        )
    report = combine_reports(reports)
    outdir = _prepare_outdir(args.out)
    (outdir / "cv_report.csv").write_text(render_report(report, "csv"), encoding="utf-8")
    table = render_report(report, "table")
    (outdir / "cv_report.txt").write_text(table, encoding="utf-8")
    (outdir / "cv_metadata.json").write_text(
        json.dumps(report.metadata, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    save_cv_figure(report, outdir / "cv_metrics.png")
    write_effective_config(
        outdir,
        {
            "command": "cross-validate",
            "arch": ",".join(archs),
            "k": args.k,
            "seed": args.seed,
            "jobs": args.jobs,
            "corpus_sha256": checksum,
            **{key: opts[key] for key in sorted(_CV_SCHEMA)},
            "max_len": max_len,
        },
    )
    if args.save_model:
        for arch in archs:
            spec = _build_spec(arch, opts, emb.dim, max_len, args.seed)
            model = train_model(spec, docs, emb, derive_seed(args.seed, f"final-{arch}"))
            save_model(model, emb.tokens, outdir / f"model_{arch}.ckpt")
    print(table, end="")
    return 0


def cmd_predict(args) -> int:
    model, tokens = load_model(args.model)
    docs = read_corpus(args.corpus)
    try:
        vocab = Vocabulary.from_tokens(tokens)
    except ValueError as exc:
        raise UserInputError(f"{args.model}: bad checkpoint vocabulary: {exc}") from None
    x = np.array(
        [encode(doc, vocab, model.spec.max_len) for doc in docs], dtype=np.int64
    )
    probs = model.predict_proba(x)
    lines = ["id,probability,prediction"]
    for doc, p in zip(docs, probs):
        lines.append(f"{doc.id},{p:.6f},{int(p >= 0.5)}")
    text = "\n".join(lines) + "\n"
    outdir = _prepare_outdir(args.out)
    (outdir / "predictions.csv").write_text(text, encoding="utf-8")
    write_effective_config(
        outdir, {"command": "predict", "model": args.model, "corpus": args.corpus}
    )
    print(f"wrote {outdir / 'predictions.csv'}: {len(docs)} documents")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hatemix",
        description="Hate-speech detection toolkit for code-mixed short texts.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    stats = sub.add_parser("stats", help="corpus statistics table")
    stats.add_argument("--corpus", required=True)
    stats.add_argument("--lexicon", help="romanized-word list for language counting")
    stats.add_argument("--out", help="directory for stats.csv")
    stats.set_defaults(func=cmd_stats)

    train_emb = sub.add_parser("train-embeddings", help="train skip-gram vectors")
    train_emb.add_argument("--corpus", required=True)
    train_emb.add_argument("--out", required=True)
    train_emb.add_argument("--config")
    train_emb.add_argument("--seed", type=int, default=0)
    train_emb.add_argument("--dim", type=int)
    train_emb.add_argument("--window", type=int)
    train_emb.add_argument("--negatives", type=int)
    train_emb.add_argument("--epochs", type=int)
    train_emb.add_argument("--min-count", type=int)
    train_emb.set_defaults(func=cmd_train_embeddings)

    probe = sub.add_parser("probe", help="group cosine-similarity report")
    probe.add_argument("--embeddings", required=True)
    probe.add_argument("--embeddings-general", help="second matrix for comparison")
    probe.add_argument("--reference", required=True)
    probe.add_argument("--groups", required=True, help="file of name: word word ...")
    probe.add_argument("--out", required=True)
    probe.set_defaults(func=cmd_probe)

    cv = sub.add_parser("cross-validate", help="stratified k-fold evaluation")
    cv.add_argument("--corpus", required=True)
    cv.add_argument("--embeddings", required=True)
    cv.add_argument("--arch", required=True,
                    help="architecture name or comma list: cnn1d, lstm, bilstm")
    cv.add_argument("--k", type=int, default=10)
    cv.add_argument("--seed", type=int, default=0)
    cv.add_argument("--jobs", type=int, default=1)
    cv.add_argument("--out", required=True)
    cv.add_argument("--config")
    cv.add_argument("--max-len", type=int)
    cv.add_argument("--epochs", type=int)
    cv.add_argument("--batch-size", type=int)
    cv.add_argument("--aggregation", choices=("fold-mean", "pooled"))
    cv.add_argument("--freeze-embeddings", action="store_true", default=None,
                    help="leave the embedding table untouched during training")
    cv.add_argument("--save-model", action="store_true",
                    help="also train on the full corpus and write checkpoints")
    cv.set_defaults(func=cmd_cross_validate)

    predict = sub.add_parser("predict", help="score documents with a checkpoint")
    predict.add_argument("--model", required=True)
    predict.add_argument("--corpus", required=True)
    predict.add_argument("--out", required=True)
    predict.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING)
    try:
        return args.func(args)
    except UserInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    sys.exit(main())
