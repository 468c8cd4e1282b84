"""Byte-pair encoding: trainer and merge replay."""

from __future__ import annotations

import heapq
from collections import Counter, defaultdict
from collections.abc import Iterable, Mapping, Sequence

from .corpus import iter_pretokens
from .vocab import BaseKind, Marker, MergeRule, Symbol, Vocabulary

MIN_PAIR_FREQUENCY = 2

RankTable = Mapping[tuple[int, int], tuple[int, int]]


def pretoken_counts(corpus: Iterable[bytes]) -> Counter:
    """Count ``(pre-token bytes, word_initial)`` over documents."""
    counts: Counter = Counter()
    for data in corpus:
        counts.update((data[s:e], w) for s, e, w in iter_pretokens(data))
    return counts


def initial_sequence(vocab: Vocabulary, piece: bytes, word_initial: bool) -> list[int]:
    """Single-byte base ids for a pre-token before any merges."""
    first = Marker.WORD_INITIAL if word_initial else Marker.PLAIN
    inner = vocab.inner_marker
    index = vocab.id_of
    return [index(Symbol(first if i == 0 else inner, bytes([b]))) for i, b in enumerate(piece)]


def _merge_word(word: list[int], left: int, right: int, result: int) -> list[int]:
    out = []
    i, n = 0, len(word)
    while i < n:
        if i + 1 < n and word[i] == left and word[i + 1] == right:
            out.append(result)
            i += 2
        else:
            out.append(word[i])
            i += 1
    return out


def train_bpe(
    sequences: Mapping[tuple[int, ...], int],
    vocab_size: int,
    vocab: Vocabulary,
    min_frequency: int = MIN_PAIR_FREQUENCY,
) -> tuple[Vocabulary, list[MergeRule]]:
    """Greedy BPE over weighted id sequences, one sequence per distinct pre-token.

    The most frequent adjacent pair is merged each round; ties go to the pair
    with the smaller ``(left id, right id)``, so older symbols win. Training
    stops at ``vocab_size`` symbols or when no pair occurs ``min_frequency``
    times. ``vocab`` is copied, never modified.
    """
    if vocab_size < len(vocab):
        raise ValueError(f"target size {vocab_size} is below the starting size {len(vocab)}")
    vocab = vocab.copy()
    symbols = vocab.symbols
    items = sorted((tuple(s), c) for s, c in sequences.items() if c > 0)
    words = [list(s) for s, _ in items]
    freqs = [c for _, c in items]

    pair_counts: dict[tuple[int, int], int] = defaultdict(int)
    where: dict[tuple[int, int], set[int]] = defaultdict(set)
    for wi, word in enumerate(words):
        f = freqs[wi]
        for pair in zip(word, word[1:]):
            pair_counts[pair] += f
            where[pair].add(wi)
    heap = [(-c, left, right) for (left, right), c in pair_counts.items()]
    heapq.heapify(heap)

    merges: list[MergeRule] = []
    rank = len(vocab.merges)
    while len(vocab) < vocab_size:
        while heap and pair_counts.get((heap[0][1], heap[0][2]), 0) != -heap[0][0]:
            heapq.heappop(heap)
        if not heap or -heap[0][0] < min_frequency:
            break
        _, left, right = heapq.heappop(heap)
        lsym, rsym = symbols[left], symbols[right]
        result = vocab.add(Symbol(lsym.marker, lsym.data + rsym.data))
        merges.append(MergeRule(rank, left, right, result))
        rank += 1

        changed: set[tuple[int, int]] = set()
        for wi in where.pop((left, right), ()):
            word, f = words[wi], freqs[wi]
            new = _merge_word(word, left, right, result)
            if len(new) == len(word):
                continue
            for pair in zip(word, word[1:]):
                pair_counts[pair] -= f
                changed.add(pair)
            for pair in zip(new, new[1:]):
                pair_counts[pair] += f
                where[pair].add(wi)
                changed.add(pair)
            words[wi] = new
        for pair in changed:
            c = pair_counts[pair]
            if c > 0:
                heapq.heappush(heap, (-c, pair[0], pair[1]))
            else:
                del pair_counts[pair]
                where.pop(pair, None)
    vocab.merges = vocab.merges + merges
    return vocab, merges


def rank_table(merges: Iterable[MergeRule]) -> dict[tuple[int, int], tuple[int, int]]:
    table: dict[tuple[int, int], tuple[int, int]] = {}
    for m in merges:
        table.setdefault((m.left, m.right), (m.rank, m.result))
    return table


def apply_merges(merges: Sequence[MergeRule] | RankTable, sequence: Sequence[int]) -> list[int]:
    """Replay merges on one pre-token, lowest rank first, until none applies."""
    ranks = merges if isinstance(merges, Mapping) else rank_table(merges)
    word = list(sequence)
    while len(word) > 1:
        best = None
        for pair in zip(word, word[1:]):
            hit = ranks.get(pair)
            if hit is not None and (best is None or hit[0] < best[0][0]):
                best = (hit, pair)
        if best is None:
            break
        (_, result), (left, right) = best
        word = _merge_word(word, left, right, result)
    return word


def train_bpe_vocab(corpus: Iterable[bytes], vocab_size: int, base: BaseKind = "bpe",
                    metadata: dict | None = None) -> Vocabulary:
    """Train a BPE vocabulary from raw documents starting at a byte base."""
    start = Vocabulary(base, metadata)
    counts = pretoken_counts(corpus)
    sequences: Counter = Counter()
    for (piece, w), c in counts.items():
        sequences[tuple(initial_sequence(start, piece, w))] += c
    vocab, _ = train_bpe(sequences, vocab_size, start)
    return vocab


__all__ = [
    "MIN_PAIR_FREQUENCY",
    "apply_merges",
    "initial_sequence",
    "pretoken_counts",
    "rank_table",
    "train_bpe",
    "train_bpe_vocab",
]
