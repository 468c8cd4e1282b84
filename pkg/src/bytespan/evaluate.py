"""Intrinsic tokeniser metrics."""

from __future__ import annotations

import json
import logging
import math
from collections import Counter, defaultdict
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Document, is_whitespace_only, iter_pretokens
from .tokenizer import Tokenizer
from .vocab import Marker, Symbol, Vocabulary

log = logging.getLogger(__name__)

DEFAULT_ALPHA = 2.5


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class GoldSegmentation:
    word: bytes
    segments: tuple[bytes, ...]
    resource: str

    def __post_init__(self) -> None:
        if not self.segments or any(not s for s in self.segments):
            raise ValueError(f"{self.word!r}: segments must be non-empty")
        if b"".join(self.segments) != self.word:
            raise ValueError(f"{self.word!r}: segments do not concatenate to the word")

    def boundaries(self) -> set[int]:
        return set(np.cumsum([len(s) for s in self.segments[:-1]]).tolist())


@dataclass(frozen=True)
class LexicalDecisionRecord:
    item: bytes
    is_word: bool
    mean_rt: float
    mean_accuracy: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.mean_accuracy <= 1.0:
            raise ValueError(f"{self.item!r}: accuracy outside [0, 1]")
        if not math.isfinite(self.mean_rt):
            raise ValueError(f"{self.item!r}: reaction time is not finite")


@dataclass
class MetricReport:
    metrics: dict[str, float] = field(default_factory=dict)
    per_language: dict[str, dict[str, float]] = field(default_factory=dict)
    per_resource: dict[str, dict[str, float]] = field(default_factory=dict)
    length_histogram: dict[int, int] = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "metrics": self.metrics,
            "per_language": self.per_language,
            "per_resource": self.per_resource,
            "length_histogram": {str(k): v for k, v in sorted(self.length_histogram.items())},
            "config": self.config,
            "warnings": self.warnings,
        }

    def write(self, path: str | Path) -> None:
        """Write the JSON report plus one TSV per table next to it."""
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n", encoding="utf-8")
        stem = path.with_suffix("")
        if self.length_histogram:
            rows = ["length\tcount"] + [f"{k}\t{v}" for k, v in sorted(self.length_histogram.items())]
            Path(f"{stem}.lengths.tsv").write_text("\n".join(rows) + "\n", encoding="utf-8")
        for name, table in (("languages", self.per_language), ("resources", self.per_resource)):
            if table:
                rows = ["key\tmetric\tvalue"]
                for key in sorted(table):
                    rows.extend(f"{key}\t{m}\t{v!r}" for m, v in sorted(table[key].items()))
                Path(f"{stem}.{name}.tsv").write_text("\n".join(rows) + "\n", encoding="utf-8")


# -- token distribution statistics -----------------------------------------


def _content_pretokens(tokenizer: Tokenizer, data: bytes):
    for s, e, w, ids in tokenizer.encode_pretokens(data):
        if not is_whitespace_only(data[s:e]):
            yield ids


def fertility(tokenizer: Tokenizer, corpus: Iterable[bytes]) -> float:
    """Tokens per pre-token, ignoring whitespace-only pre-tokens."""
    tokens = words = 0
    for data in corpus:
        for ids in _content_pretokens(tokenizer, data):
            tokens += len(ids)
            words += 1
    if words == 0:
        raise MetricError("corpus has no words")
    return tokens / words


def token_counts(tokenizer: Tokenizer, corpus: Iterable[bytes]) -> Counter:
    counts: Counter = Counter()
    for data in corpus:
        counts.update(tokenizer.encode(data))
    return counts


def renyi_efficiency(counts: Mapping | Sequence[float] | np.ndarray, alpha: float = DEFAULT_ALPHA,
                     vocab_size: int | None = None) -> float:
    """Order-``alpha`` Rényi entropy of token frequencies over ``log |V|``.

    Unused vocabulary entries add nothing to the sum but still count in |V|.
    """
    if alpha == 1:
        raise MetricError("alpha = 1 is the Shannon limit; use shannon_efficiency")
    c = np.asarray(list(counts.values()) if isinstance(counts, Mapping) else counts, dtype=np.float64)
    c = c[c > 0]
    if c.size == 0:
        raise MetricError("no token counts")
    vocab_size = c.size if vocab_size is None else vocab_size
    if vocab_size < 2:
        raise MetricError("vocabulary size must be at least 2")
    p = c / c.sum()
    if math.isinf(alpha):
        h = -math.log(p.max())
    else:
        h = math.log(np.sum(p**alpha)) / (1.0 - alpha)
    return max(h, 0.0) / math.log(vocab_size)


def shannon_efficiency(counts: Mapping | Sequence[float] | np.ndarray,
                       vocab_size: int | None = None) -> float:
    c = np.asarray(list(counts.values()) if isinstance(counts, Mapping) else counts, dtype=np.float64)
    c = c[c > 0]
    if c.size == 0:
        raise MetricError("no token counts")
    vocab_size = c.size if vocab_size is None else vocab_size
    p = c / c.sum()
    return float(-(p * np.log(p)).sum() / math.log(vocab_size))


def token_length_distribution(vocab: Vocabulary) -> dict[int, int]:
    return dict(sorted(Counter(len(s.data) for s in vocab.symbols).items()))


def vocab_overlap(v1: Vocabulary, v2: Vocabulary) -> float:
    """Shared (marker, bytes) symbols over the smaller vocabulary's size."""
    small, large = sorted((v1, v2), key=len)
    if len(small) == 0:
        return 0.0
    return sum(1 for s in small.symbols if s in large) / len(small)


# -- morphological alignment -----------------------------------------------


@dataclass
class MorphAlignment:
    macro_f1: float
    per_resource_f1: dict[str, float]
    coverage: float
    per_resource_coverage: dict[str, float]
    retained: int
    total: int
    warnings: list[str] = field(default_factory=list)


def _word_position_symbols(vocab: Vocabulary, gold: GoldSegmentation) -> list[Symbol]:
    """Markers each gold segment would carry when the word follows a space."""
    spaced = b" " + gold.word
    starts = {s: w for s, _, w in iter_pretokens(spaced)}
    out = []
    offset = 1
    for i, seg in enumerate(gold.segments):
        w = starts.get(offset)
        if i == 0:
            out.append(Symbol(Marker.WORD_INITIAL, b" " + seg))
        elif w is None:
            out.append(Symbol(vocab.inner_marker, seg))
        else:
            out.append(Symbol(Marker.WORD_INITIAL if w else Marker.PLAIN, seg))
        offset += len(seg)
    return out


def word_boundaries(tokenizer: Tokenizer, word: bytes) -> set[int]:
    """Internal token boundaries of ``word`` tokenised after a space."""
    spaced = b" " + word
    ends = []
    for s, _, _, ids in tokenizer.encode_pretokens(spaced):
        pos = s
        for i in ids:
            pos += len(tokenizer.vocab.symbols[i].data)
            ends.append(pos - 1)
    return {b for b in ends if 0 < b < len(word)}


def boundary_f1(predicted: set[int], gold: set[int]) -> float:
    if not predicted and not gold:
        return 1.0
    return 2 * len(predicted & gold) / (len(predicted) + len(gold))


def morph_alignment(tokenizer: Tokenizer, gold: Iterable[GoldSegmentation]) -> MorphAlignment:
    """Boundary F1 against gold segmentations, macro-averaged over resources.

    A word only counts if every gold segment is a vocabulary symbol; skipped
    words lower the coverage instead.
    """
    vocab = tokenizer.vocab
    scores: dict[str, list[float]] = defaultdict(list)
    totals: Counter = Counter()
    for g in gold:
        totals[g.resource] += 1
        if not all(s in vocab for s in _word_position_symbols(vocab, g)):
            continue
        scores[g.resource].append(boundary_f1(word_boundaries(tokenizer, g.word), g.boundaries()))
    if not totals:
        raise MetricError("no gold resources")
    warnings = []
    per_f1 = {}
    for res in sorted(totals):
        if scores[res]:
            per_f1[res] = float(np.mean(scores[res]))
        else:
            msg = f"resource {res!r} has no words covered by the vocabulary"
            warnings.append(msg)
            log.warning(msg)
    retained = sum(len(v) for v in scores.values())
    total = sum(totals.values())
    return MorphAlignment(
        macro_f1=float(np.mean(list(per_f1.values()))) if per_f1 else float("nan"),
        per_resource_f1=per_f1,
        coverage=retained / total,
        per_resource_coverage={r: len(scores[r]) / totals[r] for r in sorted(totals)},
        retained=retained,
        total=total,
        warnings=warnings,
    )


# -- cognitive plausibility ------------------------------------------------

# expected sign of corr(token count, measure) per condition
COGNITIVE_SIGNS = {
    ("word", "rt"): -1.0,
    ("word", "accuracy"): -1.0,
    ("nonword", "rt"): 1.0,
    ("nonword", "accuracy"): 1.0,
}


@dataclass
class CognitiveResult:
    score: float
    correlations: dict[str, float]
    warnings: list[str] = field(default_factory=list)


def _pearson(x: np.ndarray, y: np.ndarray) -> float | None:
    if x.std() == 0 or y.std() == 0:
        return None
    return float(np.corrcoef(x, y)[0, 1])


def cognitive_plausibility(tokenizer: Tokenizer,
                           records: Iterable[LexicalDecisionRecord]) -> CognitiveResult:
    """Sign-adjusted mean Pearson correlation between token counts and
    lexical-decision reaction time / accuracy over words and nonwords."""
    records = list(records)
    groups = {"word": [r for r in records if r.is_word],
              "nonword": [r for r in records if not r.is_word]}
    for name, group in groups.items():
        if len(group) < 3:
            raise MetricError(f"need at least 3 {name} items, got {len(group)}")
    correlations: dict[str, float] = {}
    warnings = []
    adjusted = []
    for (kind, measure), sign in COGNITIVE_SIGNS.items():
        group = groups[kind]
        n_tokens = np.array([len(tokenizer.encode(b" " + r.item)) for r in group], dtype=float)
        values = np.array([r.mean_rt if measure == "rt" else r.mean_accuracy for r in group])
        r = _pearson(n_tokens, values)
        key = f"{kind}_{measure}"
        if r is None:
            msg = f"condition {key} has zero variance and was dropped"
            warnings.append(msg)
            log.warning(msg)
            continue
        correlations[key] = r
        adjusted.append(sign * r)
    if not adjusted:
        raise MetricError("every condition has zero variance")
    return CognitiveResult(float(np.mean(adjusted)), correlations, warnings)


# -- file formats ----------------------------------------------------------


def read_gold_file(path: str | Path, resource: str | None = None) -> list[GoldSegmentation]:
    """Line-delimited ``{"word", "segments", "resource"}`` records."""
    path = Path(path)
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out.append(GoldSegmentation(
                    rec["word"].encode("utf-8"),
                    tuple(s.encode("utf-8") for s in rec["segments"]),
                    rec.get("resource") or resource or path.stem,
                ))
            except (json.JSONDecodeError, KeyError, TypeError, AttributeError, ValueError) as exc:
                raise MetricError(f"{path}:{lineno}: bad gold record ({exc})") from None
    return out


def read_gold_dir(path: str | Path) -> list[GoldSegmentation]:
    path = Path(path)
    if path.is_file():
        return read_gold_file(path)
    out = []
    for f in sorted(path.glob("*.jsonl")):
        out.extend(read_gold_file(f))
    return out


def read_lexdec_file(path: str | Path) -> list[LexicalDecisionRecord]:
    """Line-delimited ``{"item", "is_word", "rt_ms", "accuracy"}`` records."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out.append(LexicalDecisionRecord(
                    rec["item"].encode("utf-8"), bool(rec["is_word"]),
                    float(rec["rt_ms"]), float(rec["accuracy"]),
                ))
            except (json.JSONDecodeError, KeyError, TypeError, AttributeError, ValueError) as exc:
                raise MetricError(f"{path}:{lineno}: bad lexical decision record ({exc})") from None
    return out


# -- orchestration ---------------------------------------------------------

ALL_METRICS = ("fertility", "renyi", "morph", "cognitive", "lengths")


def evaluate(tokenizer: Tokenizer, documents: Sequence[Document] = (),
             metrics: Iterable[str] = ALL_METRICS, gold: Sequence[GoldSegmentation] = (),
             lexdec: Sequence[LexicalDecisionRecord] = (), alpha: float = DEFAULT_ALPHA,
             ) -> MetricReport:
    metrics = list(metrics)
    unknown = set(metrics) - set(ALL_METRICS)
    if unknown:
        raise MetricError(f"unknown metrics: {sorted(unknown)}")
    report = MetricReport(config={"alpha": alpha, "mode": tokenizer.mode, "metrics": metrics,
                                  "vocab_size": len(tokenizer.vocab),
                                  "vocab_metadata": tokenizer.vocab.metadata})
    by_lang: dict[str, list[bytes]] = defaultdict(list)
    for d in documents:
        if d.language is not None:
            by_lang[d.language].append(d.data)
    texts = [d.data for d in documents]
    if "fertility" in metrics and texts:
        report.metrics["fertility"] = fertility(tokenizer, texts)
        for lang, docs in sorted(by_lang.items()):
            report.per_language.setdefault(lang, {})["fertility"] = fertility(tokenizer, docs)
    if "renyi" in metrics and texts:
        v = len(tokenizer.vocab)
        report.metrics["renyi_efficiency"] = renyi_efficiency(token_counts(tokenizer, texts), alpha, v)
        for lang, docs in sorted(by_lang.items()):
            report.per_language.setdefault(lang, {})["renyi_efficiency"] = renyi_efficiency(
                token_counts(tokenizer, docs), alpha, v)
    if "morph" in metrics and gold:
        m = morph_alignment(tokenizer, gold)
        report.metrics["morph_alignment"] = m.macro_f1
        report.metrics["morph_coverage"] = m.coverage
        for res in m.per_resource_coverage:
            row = report.per_resource.setdefault(res, {})
            row["coverage"] = m.per_resource_coverage[res]
            if res in m.per_resource_f1:
                row["f1"] = m.per_resource_f1[res]
        report.warnings.extend(m.warnings)
    if "cognitive" in metrics and lexdec:
        c = cognitive_plausibility(tokenizer, lexdec)
        report.metrics["cognitive_plausibility"] = c.score
        report.metrics.update({f"cognitive_{k}": v for k, v in c.correlations.items()})
        report.warnings.extend(c.warnings)
    if "lengths" in metrics:
        report.length_histogram = token_length_distribution(tokenizer.vocab)
    return report


__all__ = [
    "ALL_METRICS",
    "COGNITIVE_SIGNS",
    "CognitiveResult",
    "DEFAULT_ALPHA",
    "GoldSegmentation",
    "LexicalDecisionRecord",
    "MetricError",
    "MetricReport",
    "MorphAlignment",
    "boundary_f1",
    "cognitive_plausibility",
    "evaluate",
    "fertility",
    "morph_alignment",
    "read_gold_dir",
    "read_gold_file",
    "read_lexdec_file",
    "renyi_efficiency",
    "shannon_efficiency",
    "token_counts",
    "token_length_distribution",
    "vocab_overlap",
    "word_boundaries",
]
