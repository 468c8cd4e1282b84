"""Learning fixed-size vocabularies from information-driven byte spans."""

from __future__ import annotations

import json
import logging
import math
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bpe import pretoken_counts, train_bpe
from .corpus import SignalTrack, signal_quantile
from .segment import ConstraintConfig, span_starts
from .tokenizer import Tokenizer
from .vocab import MARKER_RANK, Marker, Symbol, Vocabulary, symbol_sort_key

log = logging.getLogger(__name__)

BASE_SIZE = 768


@dataclass
class SpanFrequencyTable:
    counts: Counter = field(default_factory=Counter)
    by_language: dict[str, Counter] = field(default_factory=dict)

    def __iadd__(self, other: SpanFrequencyTable) -> SpanFrequencyTable:
        self.counts.update(other.counts)
        for lang, c in other.by_language.items():
            self.by_language.setdefault(lang, Counter()).update(c)
        return self

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpanFrequencyTable):
            return NotImplemented
        return self.counts == other.counts and self.by_language == other.by_language

    def dump(self, path: str | Path) -> None:
        """Line-delimited audit dump, pooled counts first then per language."""
        rows = [(None, sym, c) for sym, c in self.counts.items()]
        for lang in sorted(self.by_language):
            rows.extend((lang, sym, c) for sym, c in self.by_language[lang].items())
        rows.sort(key=lambda r: (r[0] is not None, r[0] or "", -r[2], symbol_sort_key(r[1])))
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for lang, sym, c in rows:
                rec = {"marker": sym.marker.value, "bytes_hex": sym.data.hex(),
                       "count": c, "language": lang}
                fh.write(json.dumps(rec) + "\n")


def _count_track(track: SignalTrack, cfg: ConstraintConfig) -> Counter:
    data = track.data
    edges = span_starts(track, cfg).tolist()
    flags = dict(zip(track.boundaries, track.word_initial))
    counts: Counter = Counter()
    for s, e in zip(edges, edges[1:]):
        w = flags.get(s)
        if w is None:
            marker = Marker.CONTINUATION
        else:
            marker = Marker.WORD_INITIAL if w else Marker.PLAIN
        counts[Symbol(marker, data[s:e])] += 1
    return counts


def _count_batch(batch: list[SignalTrack], cfg: ConstraintConfig) -> SpanFrequencyTable:
    table = SpanFrequencyTable()
    for track in batch:
        c = _count_track(track, cfg)
        table.counts.update(c)
        if track.language is not None:
            table.by_language.setdefault(track.language, Counter()).update(c)
    return table


def count_spans(tracks: Iterable[SignalTrack], cfg: ConstraintConfig,
                workers: int = 1) -> SpanFrequencyTable:
    """Count marker-qualified spans over a corpus.

    The first span of a pre-token is word-initial when the pre-token starts
    with whitespace and plain otherwise; every later span is a continuation.
    Counts are exact and do not depend on document order or ``workers``.
    """
    tracks = list(tracks)
    if workers <= 1 or len(tracks) < 2:
        return _count_batch(tracks, cfg)
    n = min(workers, len(tracks))
    batches = [tracks[i::n] for i in range(n)]
    table = SpanFrequencyTable()
    with ProcessPoolExecutor(max_workers=n) as pool:
        for part in pool.map(_count_batch, batches, [cfg] * n):
            table += part
    return table


def ranked_candidates(counts: Mapping[Symbol, int], theta_f: int = 1) -> list[Symbol]:
    """Multi-byte spans with count >= theta_f, most frequent first."""
    eligible = [(c, s) for s, c in counts.items() if c >= theta_f and len(s.data) > 1]
    eligible.sort(key=lambda cs: (-cs[0], len(cs[1].data), cs[1].data, MARKER_RANK[cs[1].marker]))
    return [s for _, s in eligible]


def _flag_short(vocab: Vocabulary, target: int) -> None:
    if len(vocab) < target:
        msg = f"only {len(vocab)} of {target} symbols could be filled"
        vocab.metadata.setdefault("warnings", []).append(msg)
        log.warning(msg)


def learn_frequency(table: SpanFrequencyTable | Mapping[Symbol, int], vocab_size: int,
                    theta_f: int = 1, metadata: dict | None = None) -> Vocabulary:
    """Base symbols plus the most frequent spans, up to ``vocab_size``."""
    if vocab_size < BASE_SIZE:
        raise ValueError(f"vocab_size must be at least {BASE_SIZE}")
    counts = table.counts if isinstance(table, SpanFrequencyTable) else table
    vocab = Vocabulary("wordpiece", {"method": "frequency", "theta_f": theta_f, **(metadata or {})})
    for sym in ranked_candidates(counts, theta_f):
        if len(vocab) >= vocab_size:
            break
        vocab.add(sym)
    _flag_short(vocab, vocab_size)
    return vocab


def default_schedule(tracks: Sequence[SignalTrack], signal: str) -> list[float]:
    """Thresholds at the 5th, 10th, ..., 95th percentile of the signal."""
    qs = np.arange(5, 100, 5) / 100.0
    return np.unique(signal_quantile(tracks, signal, qs)).tolist()


def learn_incremental(tracks: Sequence[SignalTrack], vocab_size: int, theta_f: int = 20,
                      schedule: Sequence[float] | None = None, signal: str = "surprisal",
                      workers: int = 1, metadata: dict | None = None) -> Vocabulary:
    """Raise a global threshold until enough frequent spans exist.

    Each threshold re-segments the whole corpus, so longer spans found at a
    higher threshold replace the shorter ones they absorb.
    """
    if vocab_size < BASE_SIZE:
        raise ValueError(f"vocab_size must be at least {BASE_SIZE}")
    tracks = list(tracks)
    if schedule is None:
        schedule = default_schedule(tracks, signal)
    schedule = [float(t) for t in schedule]
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be strictly increasing")
    meta = {"method": "incremental", "theta_f": theta_f, "signal": signal,
            "schedule": schedule, **(metadata or {})}
    need = vocab_size - BASE_SIZE
    if need == 0:
        return Vocabulary("wordpiece", {**meta, "theta_g": None, "passes": []})

    if not schedule:
        raise ValueError("empty schedule")
    passes = []
    best: tuple[int, float, list[Symbol]] | None = None
    for theta in schedule:
        cfg = ConstraintConfig("global", signal, theta_g=theta)
        ranked = ranked_candidates(count_spans(tracks, cfg, workers).counts, theta_f)
        passes.append({"theta_g": theta, "eligible": len(ranked)})
        if best is None or len(ranked) > best[0]:
            best = (len(ranked), theta, ranked)
        if len(ranked) >= need:
            best = (len(ranked), theta, ranked)
            break
    _, theta, ranked = best
    vocab = Vocabulary("wordpiece", {**meta, "theta_g": theta, "passes": passes})
    for sym in ranked[:need]:
        vocab.add(sym)
    _flag_short(vocab, vocab_size)
    return vocab


def seed_size(vocab_size: int, fraction: float) -> int:
    return BASE_SIZE + math.floor(fraction * (vocab_size - BASE_SIZE))


def learn_seeded(tracks: Sequence[SignalTrack], cfg: ConstraintConfig, vocab_size: int,
                 seed_fraction: float = 0.5, theta_f: int = 1,
                 corpus: Iterable[bytes] | None = None, workers: int = 1,
                 metadata: dict | None = None) -> Vocabulary:
    """Learn a frequency seed from spans, then fill the rest with BPE merges.

    The raw ``corpus`` (default: the tracks' bytes) is tokenised with the
    seed by longest-prefix matching and BPE continues from those sequences.
    """
    if not 0.0 <= seed_fraction <= 1.0:
        raise ValueError("seed_fraction must be in [0, 1]")
    tracks = list(tracks)
    n_seed = seed_size(vocab_size, seed_fraction)
    if n_seed > BASE_SIZE:
        seed = learn_frequency(count_spans(tracks, cfg, workers), n_seed, theta_f)
    else:
        seed = Vocabulary("wordpiece")
    seeded = len(seed)
    if seed_fraction == 1.0:
        # no BPE budget, even when the seed ran out of spans
        vocab, merges = seed, []
    else:
        tok = Tokenizer(seed)
        docs = corpus if corpus is not None else (t.data for t in tracks)
        sequences: Counter = Counter()
        for (piece, w), c in pretoken_counts(docs).items():
            sequences[tok.encode_pretoken(piece, w)] += c
        vocab, merges = train_bpe(sequences, vocab_size, seed)
    vocab.metadata = {
        "method": "seed-bpe",
        "seed_fraction": seed_fraction,
        "theta_f": theta_f,
        "seed_target": n_seed,
        "seed_size": seeded,
        "bpe_merges": len(merges),
        **(metadata or {}),
    }
    _flag_short(vocab, vocab_size)
    return vocab


def learn_balanced(tables: Mapping[str, Mapping[Symbol, int]], vocab_size: int,
                   theta_f: int = 1, metadata: dict | None = None) -> Vocabulary:
    """Fill the vocabulary round-robin over languages in sorted order.

    On its turn a language adds its most frequent span not yet in the
    vocabulary; spans already claimed are skipped without using the turn.
    """
    if not tables:
        raise ValueError("need at least one language table")
    if vocab_size < BASE_SIZE:
        raise ValueError(f"vocab_size must be at least {BASE_SIZE}")
    langs = sorted(tables)
    queues = {lang: ranked_candidates(tables[lang], theta_f) for lang in langs}
    pos = dict.fromkeys(langs, 0)
    added = dict.fromkeys(langs, 0)
    vocab = Vocabulary("wordpiece", {"method": "balanced", "theta_f": theta_f,
                                     "languages": langs, **(metadata or {})})
    active = list(langs)
    while active and len(vocab) < vocab_size:
        still = []
        for lang in active:
            if len(vocab) >= vocab_size:
                still.append(lang)
                continue
            queue, i = queues[lang], pos[lang]
            while i < len(queue) and queue[i] in vocab:
                i += 1
            if i < len(queue):
                vocab.add(queue[i])
                added[lang] += 1
                pos[lang] = i + 1
                still.append(lang)
            else:
                pos[lang] = i
        active = still
    vocab.metadata["per_language"] = added
    _flag_short(vocab, vocab_size)
    return vocab


__all__ = [
    "BASE_SIZE",
    "SpanFrequencyTable",
    "count_spans",
    "default_schedule",
    "learn_balanced",
    "learn_frequency",
    "learn_incremental",
    "learn_seeded",
    "ranked_candidates",
    "seed_size",
]
