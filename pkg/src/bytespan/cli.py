"""Command-line pipeline: signals -> train -> tokenize -> evaluate."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from . import __version__
from .bpe import train_bpe_vocab
from .corpus import (
    Document,
    SignalFileError,
    load_documents,
    read_manifest,
    read_signal_file,
    signal_quantile,
    write_signal_file,
)
from .evaluate import ALL_METRICS, MetricError, evaluate, read_gold_dir, read_lexdec_file
from .learn import (
    count_spans,
    learn_balanced,
    learn_frequency,
    learn_incremental,
    learn_seeded,
)
from .ngram import NGramByteModel, train_ngram
from .segment import ConstraintConfig
from .tokenizer import Tokenizer
from .vocab import VocabFormatError, load_vocab, save_vocab

log = logging.getLogger("bytespan")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

SPAN_METHODS = ("frequency", "incremental", "seed-bpe", "balanced")
METHODS = (*SPAN_METHODS, "bpe", "bpe-wp")
MODES = {"longest-prefix": "longest_prefix", "bpe": "bpe_merges"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fingerprint(paths: Sequence[str | Path]) -> dict[str, str]:
    out = {}
    for p in paths:
        h = hashlib.sha256()
        with open(p, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                h.update(chunk)
        out[Path(p).name] = h.hexdigest()
    return out


def _add_corpus_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("inputs", nargs="*", type=Path, help="raw text files, one document each")
    p.add_argument("--manifest", type=Path, help='line-delimited {"doc_id", "path", "language"} file')
    p.add_argument("--language", help="language tag for raw input files")


def _corpus(args, required: bool = True) -> tuple[list[Document], list[Path]]:
    if args.manifest and args.inputs:
        raise UsageError("give either input files or --manifest, not both")
    if args.manifest:
        return read_manifest(args.manifest), [args.manifest]
    if args.inputs:
        return load_documents(args.inputs, args.language), list(args.inputs)
    if required:
        raise UsageError("no input documents")
    return [], []


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bytespan", description=__doc__)
    parser.add_argument("--version", action="version", version=f"bytespan {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sig = sub.add_parser("signals", help="compute per-byte information signals")
    sig_sub = sig.add_subparsers(dest="provider", required=True, parser_class=_Parser)
    ng = sig_sub.add_parser("ngram", help="byte n-gram model with absolute discounting")
    _add_corpus_args(ng)
    ng.add_argument("-o", "--output", type=Path, required=True, help="signal file to write")
    ng.add_argument("--order", type=int, default=5)
    ng.add_argument("--discount", type=float, default=0.75)
    ng.add_argument("--lm-manifest", type=Path,
                    help="train the model on these documents instead of the scored ones")
    ng.add_argument("--save-model", type=Path)
    ng.add_argument("--load-model", type=Path, help="score with a saved model instead of training")

    tr = sub.add_parser("train", help="learn a vocabulary")
    tr.add_argument("--method", choices=METHODS, required=True)
    tr.add_argument("--signals", type=Path, help="signal file (required for span methods)")
    _add_corpus_args(tr)
    tr.add_argument("-o", "--output", type=Path, required=True, help="vocabulary file to write")
    tr.add_argument("--vocab-size", type=int, required=True)
    tr.add_argument("--constraint", choices=("global", "monotonic", "combined"),
                    help="default: global for incremental, combined otherwise")
    tr.add_argument("--signal", choices=("surprisal", "entropy"), default="surprisal")
    tr.add_argument("--theta-f", type=int, help="minimum span count (default 20 for incremental, else 1)")
    tr.add_argument("--theta-g", type=float, help="absolute global threshold in bits")
    tr.add_argument("--theta-g-quantile", type=float, default=0.30,
                    help="global threshold as a quantile of the signal (default 0.30)")
    tr.add_argument("--theta-m", type=float, default=0.0)
    tr.add_argument("--seed-fraction", type=float, default=0.5)
    tr.add_argument("--workers", type=int, default=1, help="counting processes; output does not depend on it")
    tr.add_argument("--dump-counts", type=Path, help="write the span frequency table for audit")

    tk = sub.add_parser("tokenize", help="encode documents as line-delimited id arrays")
    tk.add_argument("--vocab", type=Path, required=True)
    tk.add_argument("--mode", choices=tuple(MODES), help="default: the vocabulary's training inference")
    _add_corpus_args(tk)
    tk.add_argument("-o", "--output", type=Path, help="default: stdout")

    ev = sub.add_parser("evaluate", help="intrinsic metrics for a vocabulary")
    ev.add_argument("--vocab", type=Path, required=True)
    ev.add_argument("--mode", choices=tuple(MODES))
    _add_corpus_args(ev)
    ev.add_argument("--metrics", default="all", help=f"'all' or comma list of {','.join(ALL_METRICS)}")
    ev.add_argument("--gold", type=Path, help="directory (or file) of gold segmentations")
    ev.add_argument("--lexdec", type=Path, help="lexical decision records")
    ev.add_argument("--alpha", type=float, default=2.5, help="Rényi order")
    ev.add_argument("-o", "--output", type=Path, help="report path; TSV tables are written next to it")
    return parser


def _run_signals(args) -> None:
    if args.order < 1:
        raise UsageError("--order must be at least 1")
    if not 0 < args.discount < 1:
        raise UsageError("--discount must be in (0, 1)")
    docs, paths = _corpus(args)
    if args.load_model:
        model = NGramByteModel.load(args.load_model)
    else:
        lm_docs = read_manifest(args.lm_manifest) if args.lm_manifest else docs
        model = train_ngram(lm_docs, args.order, args.discount)
    if args.save_model:
        model.save(args.save_model)
    write_signal_file((model.score(d) for d in docs), args.output)


def _resolve_constraint(args, tracks) -> ConstraintConfig:
    kind = args.constraint or ("global" if args.method == "incremental" else "combined")
    if kind == "monotonic":
        return ConstraintConfig(kind, args.signal, theta_m=args.theta_m)
    theta = args.theta_g
    if theta is None:
        theta = float(signal_quantile(tracks, args.signal, args.theta_g_quantile))
    return ConstraintConfig(kind, args.signal, theta_g=theta, theta_m=args.theta_m)


def _check_train_args(args) -> None:
    if args.method == "incremental" and args.constraint not in (None, "global"):
        raise UsageError(
            f"--method incremental cannot use the {args.constraint} constraint: it already yields "
            "more distinct spans than most vocabulary sizes at the lowest threshold, so raising "
            "the global threshold has nothing to do; use --constraint global"
        )
    if args.vocab_size < (512 if args.method == "bpe" else 768):
        raise UsageError("--vocab-size is below the base vocabulary size")
    if not 0.0 <= args.seed_fraction <= 1.0:
        raise UsageError("--seed-fraction must be in [0, 1]")
    if not 0.0 <= args.theta_g_quantile <= 1.0:
        raise UsageError("--theta-g-quantile must be in [0, 1]")
    if args.theta_m < 0:
        raise UsageError("--theta-m must be non-negative")
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    if args.method in SPAN_METHODS and args.signals is None:
        raise UsageError(f"--method {args.method} needs --signals")


def _run_train(args) -> None:
    _check_train_args(args)
    config = {
        "method": args.method,
        "vocab_size": args.vocab_size,
        "signal": args.signal,
    }
    inputs: list[Path] = []
    tracks = []
    if args.signals:
        tracks = read_signal_file(args.signals)
        inputs.append(args.signals)
    docs, paths = _corpus(args, required=not tracks)
    inputs.extend(paths)
    raw = [d.data for d in docs] if docs else [t.data for t in tracks]
    meta_base = {"tool": "bytespan", "tool_version": __version__, "inputs": _fingerprint(inputs)}

    if args.method in ("bpe", "bpe-wp"):
        base, inference = ("bpe", "bpe_merges") if args.method == "bpe" else ("wordpiece", "longest_prefix")
        vocab = train_bpe_vocab(raw, args.vocab_size, base)
        vocab.metadata = {"config": {**config, "inference": inference}, **meta_base}
        save_vocab(vocab, args.output)
        return

    theta_f = args.theta_f if args.theta_f is not None else (20 if args.method == "incremental" else 1)
    config["theta_f"] = theta_f
    if args.method == "incremental":
        vocab = learn_incremental(tracks, args.vocab_size, theta_f, signal=args.signal,
                                  workers=args.workers)
        config["constraint"] = "global"
    else:
        cfg = _resolve_constraint(args, tracks)
        config["constraint"] = cfg.as_dict()
        if args.theta_g is None and cfg.kind != "monotonic":
            config["theta_g_quantile"] = args.theta_g_quantile
        if args.method == "seed-bpe":
            config["seed_fraction"] = args.seed_fraction
            vocab = learn_seeded(tracks, cfg, args.vocab_size, args.seed_fraction, theta_f,
                                 corpus=raw, workers=args.workers)
        else:
            table = count_spans(tracks, cfg, args.workers)
            if args.dump_counts:
                table.dump(args.dump_counts)
            if args.method == "frequency":
                vocab = learn_frequency(table, args.vocab_size, theta_f)
            else:
                if any(t.language is None for t in tracks):
                    raise SignalFileError("--method balanced needs a language tag on every document")
                vocab = learn_balanced(table.by_language, args.vocab_size, theta_f)
    config["inference"] = "longest_prefix"
    vocab.metadata = {"config": config, "learner": vocab.metadata, **meta_base}
    save_vocab(vocab, args.output)


def _tokenizer(args):
    vocab = load_vocab(args.vocab)
    if args.mode:
        mode = MODES[args.mode]
    else:
        mode = vocab.metadata.get("config", {}).get("inference", "longest_prefix")
    if mode == "bpe_merges" and not vocab.merges:
        raise VocabFormatError(f"{args.vocab} has no merge rules for --mode bpe")
    return Tokenizer(vocab, mode)


def _run_tokenize(args) -> None:
    tok = _tokenizer(args)
    docs, _ = _corpus(args)
    lines = [json.dumps({"doc_id": d.doc_id, "ids": tok.encode(d.data)}, separators=(",", ":"))
             for d in docs]
    text = "\n".join(lines) + "\n"
    if args.output:
        args.output.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _run_evaluate(args) -> None:
    metrics = list(ALL_METRICS) if args.metrics == "all" else [m.strip() for m in args.metrics.split(",")]
    unknown = set(metrics) - set(ALL_METRICS)
    if unknown:
        raise UsageError(f"unknown metrics {sorted(unknown)}; choose from {', '.join(ALL_METRICS)}")
    if args.alpha == 1:
        raise UsageError("--alpha 1 is the Shannon limit and is not supported")
    if "morph" in metrics and args.metrics != "all" and not args.gold:
        raise UsageError("the morph metric needs --gold")
    if "cognitive" in metrics and args.metrics != "all" and not args.lexdec:
        raise UsageError("the cognitive metric needs --lexdec")
    tok = _tokenizer(args)
    docs, paths = _corpus(args, required=bool({"fertility", "renyi"} & set(metrics)) and args.metrics != "all")
    gold = read_gold_dir(args.gold) if args.gold else []
    lexdec = read_lexdec_file(args.lexdec) if args.lexdec else []
    report = evaluate(tok, docs, metrics, gold, lexdec, args.alpha)
    fingerprints = [args.vocab, *paths]
    if args.gold:
        fingerprints.extend(sorted(args.gold.glob("*.jsonl")) if args.gold.is_dir() else [args.gold])
    if args.lexdec:
        fingerprints.append(args.lexdec)
    report.config["inputs"] = _fingerprint(fingerprints)
    if args.output:
        report.write(args.output)
    else:
        sys.stdout.write(json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n")


COMMANDS = {"signals": _run_signals, "train": _run_train, "tokenize": _run_tokenize,
            "evaluate": _run_evaluate}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"bytespan: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, SignalFileError, VocabFormatError, MetricError, ValueError) as exc:
        print(f"bytespan: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
