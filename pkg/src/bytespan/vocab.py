"""Vocabulary symbols, merge rules and the versioned vocabulary file."""

from __future__ import annotations

import json
from collections.abc import Iterable
from enum import Enum
from pathlib import Path
from typing import Literal, NamedTuple

VOCAB_FORMAT = "bytespan-vocab"
VOCAB_VERSION = 1

BaseKind = Literal["wordpiece", "bpe"]


class Marker(str, Enum):
    PLAIN = "plain"
    CONTINUATION = "continuation"
    WORD_INITIAL = "word_initial"


MARKER_RANK = {Marker.PLAIN: 0, Marker.CONTINUATION: 1, Marker.WORD_INITIAL: 2}


class Symbol(NamedTuple):
    marker: Marker
    data: bytes

    def __str__(self) -> str:
        text = self.data.decode("utf-8", "backslashreplace")
        if self.marker is Marker.CONTINUATION:
            return "##" + text
        return text


def symbol_sort_key(sym: Symbol) -> tuple[int, bytes, int]:
    """Shorter first, then bytewise, then marker."""
    return len(sym.data), sym.data, MARKER_RANK[sym.marker]


class MergeRule(NamedTuple):
    rank: int
    left: int
    right: int
    result: int


class VocabFormatError(ValueError):
    pass


def base_markers(base: BaseKind) -> tuple[Marker, ...]:
    if base == "wordpiece":
        return (Marker.PLAIN, Marker.CONTINUATION, Marker.WORD_INITIAL)
    if base == "bpe":
        return (Marker.PLAIN, Marker.WORD_INITIAL)
    raise ValueError(f"unknown base kind {base!r}")


def base_symbols(base: BaseKind = "wordpiece") -> list[Symbol]:
    return [Symbol(m, bytes([b])) for m in base_markers(base) for b in range(256)]


class Vocabulary:
    """Bijection between ids and symbols, with provenance metadata.

    Ids are dense and follow insertion order, so the base symbols always
    occupy the first ids.
    """

    def __init__(self, base: BaseKind = "wordpiece", metadata: dict | None = None):
        self.base = base
        self.symbols: list[Symbol] = []
        self._index: dict[Symbol, int] = {}
        self.merges: list[MergeRule] = []
        self.metadata: dict = dict(metadata or {})
        self.version = 0
        for sym in base_symbols(base):
            self.add(sym)

    @property
    def base_size(self) -> int:
        return 256 * len(base_markers(self.base))

    @property
    def inner_marker(self) -> Marker:
        """Marker used for tokens that do not start a pre-token."""
        return Marker.CONTINUATION if self.base == "wordpiece" else Marker.PLAIN

    def __len__(self) -> int:
        return len(self.symbols)

    def __contains__(self, sym: object) -> bool:
        return sym in self._index

    def __iter__(self):
        return iter(self.symbols)

    def add(self, sym: Symbol) -> int:
        """Add ``sym`` if absent; return its id either way."""
        if not sym.data:
            raise ValueError("symbols must hold at least one byte")
        existing = self._index.get(sym)
        if existing is not None:
            return existing
        self._index[sym] = len(self.symbols)
        self.symbols.append(Symbol(Marker(sym.marker), bytes(sym.data)))
        self.version += 1
        return len(self.symbols) - 1

    def id_of(self, sym: Symbol) -> int:
        return self._index[sym]

    def get(self, sym: Symbol) -> int | None:
        return self._index.get(sym)

    def copy(self) -> Vocabulary:
        other = Vocabulary.__new__(Vocabulary)
        other.base = self.base
        other.symbols = list(self.symbols)
        other._index = dict(self._index)
        other.merges = list(self.merges)
        other.metadata = json.loads(json.dumps(self.metadata))
        other.version = self.version
        return other

    def learned(self) -> list[Symbol]:
        return self.symbols[self.base_size :]

    def same_symbols(self, other: Vocabulary) -> bool:
        return self.base == other.base and self.symbols == other.symbols

    def __repr__(self) -> str:
        return f"Vocabulary(base={self.base!r}, size={len(self)}, merges={len(self.merges)})"


def vocab_from_symbols(symbols: Iterable[Symbol], base: BaseKind = "wordpiece",
                       metadata: dict | None = None) -> Vocabulary:
    vocab = Vocabulary(base, metadata)
    for sym in symbols:
        vocab.add(sym)
    return vocab


def dumps_vocab(vocab: Vocabulary) -> str:
    doc = {
        "format": VOCAB_FORMAT,
        "version": VOCAB_VERSION,
        "base": vocab.base,
        "metadata": vocab.metadata,
        "symbols": [
            {"id": i, "marker": s.marker.value, "bytes_hex": s.data.hex()}
            for i, s in enumerate(vocab.symbols)
        ],
        "merges": [list(m) for m in vocab.merges],
    }
    return json.dumps(doc, indent=1, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"


def save_vocab(vocab: Vocabulary, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_vocab(vocab))


def loads_vocab(text: str) -> Vocabulary:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise VocabFormatError(f"corrupt vocabulary file: {exc.msg}") from None
    if not isinstance(doc, dict) or doc.get("format") != VOCAB_FORMAT:
        raise VocabFormatError("not a bytespan vocabulary file")
    if doc.get("version") != VOCAB_VERSION:
        raise VocabFormatError(
            f"vocabulary version {doc.get('version')!r} is not supported (expected {VOCAB_VERSION})"
        )
    base = doc.get("base")
    if base not in ("wordpiece", "bpe"):
        raise VocabFormatError(f"unknown base kind {base!r}")
    try:
        entries = sorted(doc["symbols"], key=lambda e: e["id"])
        symbols = [Symbol(Marker(e["marker"]), bytes.fromhex(e["bytes_hex"])) for e in entries]
        ids = [e["id"] for e in entries]
        merges = [MergeRule(*map(int, m)) for m in doc.get("merges", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise VocabFormatError(f"corrupt vocabulary entry: {exc}") from None
    if ids != list(range(len(ids))):
        raise VocabFormatError("symbol ids must be dense and start at 0")
    if len(set(symbols)) != len(symbols):
        seen: set[Symbol] = set()
        dup = next(s for s in symbols if s in seen or seen.add(s))
        raise VocabFormatError(f"duplicate symbol ({dup.marker.value}, {dup.data.hex()})")
    if any(not s.data for s in symbols):
        raise VocabFormatError("empty symbol")
    expected = base_symbols(base)
    if symbols[: len(expected)] != expected:
        raise VocabFormatError("base symbols missing or out of order")
    vocab = Vocabulary(base, doc.get("metadata") or {})
    for sym in symbols[len(expected) :]:
        vocab.add(sym)
    for rank, m in enumerate(merges):
        ok = m.rank == rank and all(0 <= x < len(vocab) for x in (m.left, m.right, m.result))
        if ok:
            left, right, result = (vocab.symbols[x] for x in (m.left, m.right, m.result))
            ok = result.data == left.data + right.data and result.marker == left.marker
        if not ok:
            raise VocabFormatError(f"invalid merge rule at rank {rank}")
    vocab.merges = merges
    return vocab


def load_vocab(path: str | Path) -> Vocabulary:
    return loads_vocab(Path(path).read_text(encoding="utf-8"))


__all__ = [
    "MARKER_RANK",
    "Marker",
    "MergeRule",
    "Symbol",
    "VocabFormatError",
    "Vocabulary",
    "base_symbols",
    "dumps_vocab",
    "load_vocab",
    "loads_vocab",
    "save_vocab",
    "symbol_sort_key",
    "vocab_from_symbols",
]
