"""Longest-prefix and merge-replay inference over a learned vocabulary."""

from __future__ import annotations

import weakref
from collections.abc import Sequence
from typing import Literal

from .bpe import apply_merges, initial_sequence
from .corpus import iter_pretokens
from .vocab import Marker, Vocabulary, load_vocab, save_vocab

Mode = Literal["longest_prefix", "bpe_merges"]

_END = -1
_CACHE_LIMIT = 1 << 18


class UnknownTokenError(ValueError):
    pass


class PrefixTree:
    """Byte trie mapping symbol bytes to ids."""

    def __init__(self) -> None:
        self.root: dict = {}
        self.max_depth = 0

    def insert(self, data: bytes, value: int) -> None:
        node = self.root
        for b in data:
            node = node.setdefault(b, {})
        node[_END] = value
        self.max_depth = max(self.max_depth, len(data))

    def longest_prefix(self, data: bytes, start: int, end: int) -> tuple[int, int]:
        """Length and id of the longest stored key that prefixes ``data[start:end]``.

        Returns ``(0, -1)`` when nothing matches.
        """
        node = self.root
        best_len, best_id = 0, -1
        i = start
        while i < end:
            node = node.get(data[i])
            if node is None:
                break
            i += 1
            value = node.get(_END)
            if value is not None:
                best_len, best_id = i - start, value
        return best_len, best_id


class Tokenizer:
    """Tokenises bytes with a fixed vocabulary.

    Every pre-token is handled independently. In ``longest_prefix`` mode the
    first token comes from the word-initial symbols (or plain ones when the
    pre-token does not start with whitespace) and the rest from the inner
    marker's symbols, taking the longest match at each step.
    """

    def __init__(self, vocab: Vocabulary, mode: Mode = "longest_prefix"):
        if mode not in ("longest_prefix", "bpe_merges"):
            raise ValueError(f"unknown tokenisation mode {mode!r}")
        self.vocab = vocab
        self.mode = mode
        self._version = vocab.version
        self._trees = {m: PrefixTree() for m in Marker}
        for i, sym in enumerate(vocab.symbols):
            self._trees[sym.marker].insert(sym.data, i)
        self._n_merges = len(vocab.merges)
        self._ranks = {(m.left, m.right): (m.rank, m.result) for m in vocab.merges}
        self._cache: dict[tuple[bytes, bool], tuple[int, ...]] = {}

    def _longest_prefix(self, piece: bytes, word_initial: bool) -> tuple[int, ...]:
        first = self._trees[Marker.WORD_INITIAL if word_initial else Marker.PLAIN]
        inner = self._trees[self.vocab.inner_marker]
        out = []
        pos, end = 0, len(piece)
        tree = first
        while pos < end:
            n, sym_id = tree.longest_prefix(piece, pos, end)
            # base symbols make n >= 1 for every well-formed vocabulary
            if n == 0:
                raise UnknownTokenError(f"no symbol matches byte {piece[pos]:#04x}")
            out.append(sym_id)
            pos += n
            tree = inner
        return tuple(out)

    def encode_pretoken(self, piece: bytes, word_initial: bool) -> tuple[int, ...]:
        key = (piece, word_initial)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if self.mode == "longest_prefix":
            ids = self._longest_prefix(piece, word_initial)
        else:
            ids = tuple(apply_merges(self._ranks, initial_sequence(self.vocab, piece, word_initial)))
        if len(self._cache) >= _CACHE_LIMIT:
            self._cache.clear()
        self._cache[key] = ids
        return ids

    def encode_pretokens(self, data: bytes) -> list[tuple[int, int, bool, tuple[int, ...]]]:
        """``(start, end, word_initial, ids)`` for each pre-token of ``data``."""
        return [
            (s, e, w, self.encode_pretoken(data[s:e], w)) for s, e, w in iter_pretokens(data)
        ]

    def encode(self, data: bytes) -> list[int]:
        ids: list[int] = []
        for s, e, w in iter_pretokens(data):
            ids.extend(self.encode_pretoken(data[s:e], w))
        return ids

    def decode(self, ids: Sequence[int]) -> bytes:
        symbols = self.vocab.symbols
        out = []
        for i in ids:
            if not 0 <= i < len(symbols):
                raise UnknownTokenError(f"unknown token id {i}")
            out.append(symbols[i].data)
        return b"".join(out)


_tokenizers: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()


def get_tokenizer(vocab: Vocabulary, mode: Mode = "longest_prefix") -> Tokenizer:
    per_vocab = _tokenizers.setdefault(vocab, {})
    tok = per_vocab.get(mode)
    if tok is None or tok._version != vocab.version or tok._n_merges != len(vocab.merges):
        tok = per_vocab[mode] = Tokenizer(vocab, mode)
    return tok


def tokenize(vocab: Vocabulary, data: bytes, mode: Mode = "longest_prefix") -> list[int]:
    return get_tokenizer(vocab, mode).encode(data)


def detokenize(vocab: Vocabulary, ids: Sequence[int]) -> bytes:
    return get_tokenizer(vocab).decode(ids)


__all__ = [
    "Mode",
    "PrefixTree",
    "Tokenizer",
    "UnknownTokenError",
    "detokenize",
    "get_tokenizer",
    "load_vocab",
    "save_vocab",
    "tokenize",
]
