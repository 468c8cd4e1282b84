"""Smoothed n-gram byte language model used as a surprisal/entropy source.

Probabilities use absolute discounting interpolated down to a uniform
distribution over the 256 byte values plus end-of-document::

    P_k(x | h) = (max(c(h, x) - D, 0) + D * N1+(h) * P_{k-1}(x | h')) / c(h)

where ``h'`` drops the oldest byte of ``h``. Contexts never seen in training
fall through to the next shorter context.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Document, SignalTrack

EOD = 256
N_OUTCOMES = 257
MAX_ORDER = 7
FORMAT_VERSION = 1

_OUT_BITS = 9
_CHUNK = 4096


@dataclass(frozen=True)
class _Level:
    """Counts for contexts of one fixed length, in sorted CSR layout."""

    keys: np.ndarray  # (context << 9) | outcome, sorted uint64
    counts: np.ndarray  # int64, aligned with keys
    contexts: np.ndarray  # unique contexts, sorted uint64
    starts: np.ndarray  # first index into keys for each context
    totals: np.ndarray  # c(h), float64
    types: np.ndarray  # N1+(h), float64

    @classmethod
    def from_counts(cls, keys: np.ndarray, counts: np.ndarray) -> _Level:
        keys = np.asarray(keys, dtype=np.uint64)
        counts = np.asarray(counts, dtype=np.int64)
        ctx = keys >> np.uint64(_OUT_BITS)
        contexts, starts = np.unique(ctx, return_index=True)
        if keys.size:
            totals = np.add.reduceat(counts, starts).astype(np.float64)
        else:
            totals = np.zeros(0)
        types = np.diff(np.append(starts, keys.size)).astype(np.float64)
        return cls(keys, counts, contexts, starts.astype(np.int64), totals, types)

    @classmethod
    def empty(cls) -> _Level:
        return cls.from_counts(np.zeros(0, np.uint64), np.zeros(0, np.int64))

    def find_contexts(self, ctx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Index of each context in ``self.contexts`` and a found mask."""
        if self.contexts.size == 0:
            return np.zeros(ctx.shape, np.int64), np.zeros(ctx.shape, bool)
        idx = np.searchsorted(self.contexts, ctx)
        idx = np.minimum(idx, self.contexts.size - 1)
        return idx, self.contexts[idx] == ctx

    def pair_counts(self, ctx: np.ndarray, out: np.ndarray) -> np.ndarray:
        if self.keys.size == 0:
            return np.zeros(ctx.shape, np.float64)
        key = (ctx << np.uint64(_OUT_BITS)) | out.astype(np.uint64)
        idx = np.minimum(np.searchsorted(self.keys, key), self.keys.size - 1)
        return np.where(self.keys[idx] == key, self.counts[idx], 0).astype(np.float64)


def _context_values(a: np.ndarray, k: int, stop: int) -> np.ndarray:
    """Packed length-``k`` contexts preceding positions ``k .. stop-1``."""
    m = stop - k
    ctx = np.zeros(m, dtype=np.uint64)
    for j in range(k):
        ctx = (ctx << np.uint64(8)) | a[j : j + m]
    return ctx


class NGramByteModel:
    """Interpolated absolute-discount byte n-gram model over 257 outcomes."""

    def __init__(self, order: int = 5, discount: float = 0.75, levels: list[_Level] | None = None):
        if not 1 <= order <= MAX_ORDER:
            raise ValueError(f"order must be in [1, {MAX_ORDER}], got {order}")
        if not 0.0 < discount < 1.0:
            raise ValueError(f"discount must be in (0, 1), got {discount}")
        self.order = order
        self.discount = float(discount)
        self.levels = levels if levels is not None else [_Level.empty() for _ in range(order)]
        if len(self.levels) != order:
            raise ValueError("need one count level per context length")

    # -- probabilities -------------------------------------------------

    def _dense(self, k: int, ctx: np.ndarray) -> np.ndarray:
        """Full predictive distributions (rows) for length-``k`` contexts."""
        if k < 0:
            return np.full((ctx.size, N_OUTCOMES), 1.0 / N_OUTCOMES)
        parents = ctx & np.uint64((1 << (8 * k - 8)) - 1) if k > 0 else np.zeros_like(ctx)
        uniq, inv = np.unique(parents, return_inverse=True)
        dist = self._dense(k - 1, uniq)[inv.reshape(-1)]
        level = self.levels[k]
        idx, found = level.find_contexts(ctx)
        rows = np.flatnonzero(found)
        if rows.size == 0:
            return dist
        cidx = idx[rows]
        total = level.totals[cidx]
        dist[rows] *= (self.discount * level.types[cidx] / total)[:, None]
        n = level.types[cidx].astype(np.int64)
        entry_rows = np.repeat(rows, n)
        offsets = np.repeat(level.starts[cidx] - np.cumsum(n) + n, n) + np.arange(n.sum())
        outcomes = (level.keys[offsets] & np.uint64((1 << _OUT_BITS) - 1)).astype(np.int64)
        dist[entry_rows, outcomes] += (level.counts[offsets] - self.discount) / np.repeat(total, n)
        return dist

    def distribution(self, context: bytes) -> np.ndarray:
        """Predictive distribution over 256 bytes + end-of-document."""
        context = context[-(self.order - 1) :] if self.order > 1 else b""
        value = int.from_bytes(context, "big") if context else 0
        return self._dense(len(context), np.array([value], dtype=np.uint64))[0]

    def _position_probs(self, a: np.ndarray, outcomes: np.ndarray) -> np.ndarray:
        """P(outcome_i | longest context before i) for every position."""
        n = outcomes.size
        p = np.full(n, 1.0 / N_OUTCOMES)
        for k in range(self.order):
            if k >= n:
                break
            sel = slice(k, n)
            ctx = _context_values(a, k, n) if k else np.zeros(n, np.uint64)
            level = self.levels[k]
            idx, found = level.find_contexts(ctx)
            c = level.pair_counts(ctx, outcomes[sel])
            total = np.where(found, level.totals[idx] if level.totals.size else 0.0, 1.0)
            types = np.where(found, level.types[idx] if level.types.size else 0.0, 0.0)
            upd = (np.maximum(c - self.discount, 0.0) + self.discount * types * p[sel]) / total
            p[sel] = np.where(found, upd, p[sel])
        return p

    def _entropies(self, a: np.ndarray) -> np.ndarray:
        n = a.size
        out = np.empty(n)
        for k in range(min(self.order, n)):
            if k < self.order - 1:
                positions = np.array([k]) if k < n else np.zeros(0, np.int64)
            else:
                positions = np.arange(k, n)
            if positions.size == 0:
                continue
            ctx = _context_values(a, k, n)[positions - k] if k else np.zeros(positions.size, np.uint64)
            uniq, inv = np.unique(ctx, return_inverse=True)
            ent = np.empty(uniq.size)
            for lo in range(0, uniq.size, _CHUNK):
                dist = self._dense(k, uniq[lo : lo + _CHUNK])
                ent[lo : lo + _CHUNK] = -(dist * np.log2(dist)).sum(axis=1)
            out[positions] = ent[inv.reshape(-1)]
        return out

    def score(self, data: bytes | Document, doc_id: str | None = None,
              language: str | None = None) -> SignalTrack:
        """Per-byte surprisal and entropy (bits) for one document."""
        if isinstance(data, Document):
            doc_id = doc_id or data.doc_id
            language = language or data.language
            data = data.data
        a = np.frombuffer(data, dtype=np.uint8).astype(np.uint64)
        probs = self._position_probs(a, a.astype(np.int64))
        surprisal = np.maximum(-np.log2(probs), 0.0)
        entropy = np.maximum(self._entropies(a), 0.0)
        return SignalTrack(doc_id or "doc", data, surprisal, entropy, language)

    # -- persistence ---------------------------------------------------

    def save(self, path: str | Path) -> None:
        arrays = {}
        for k, level in enumerate(self.levels):
            arrays[f"keys_{k}"] = level.keys
            arrays[f"counts_{k}"] = level.counts
        with open(path, "wb") as fh:
            np.savez_compressed(
                fh,
                format_version=np.int64(FORMAT_VERSION),
                order=np.int64(self.order),
                discount=np.float64(self.discount),
                **arrays,
            )

    @classmethod
    def load(cls, path: str | Path) -> NGramByteModel:
        with np.load(path) as z:
            version = int(z["format_version"])
            if version != FORMAT_VERSION:
                raise ValueError(f"unsupported n-gram model version {version}")
            order = int(z["order"])
            levels = [_Level.from_counts(z[f"keys_{k}"], z[f"counts_{k}"]) for k in range(order)]
            return cls(order, float(z["discount"]), levels)


def _merge(keys: list[np.ndarray], counts: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    allk = np.concatenate(keys)
    allc = np.concatenate(counts)
    uniq, inv = np.unique(allk, return_inverse=True)
    return uniq, np.bincount(inv.reshape(-1), weights=allc, minlength=uniq.size).astype(np.int64)


def train_ngram(corpus: Iterable[bytes | Document], order: int = 5,
                discount: float = 0.75) -> NGramByteModel:
    """Count byte n-grams over documents; each document ends with end-of-document."""
    model = NGramByteModel(order, discount)  # validates arguments
    pending: list[list[np.ndarray]] = [[] for _ in range(order)]
    pending_counts: list[list[np.ndarray]] = [[] for _ in range(order)]
    acc_k: list[np.ndarray] = [np.zeros(0, np.uint64) for _ in range(order)]
    acc_c: list[np.ndarray] = [np.zeros(0, np.int64) for _ in range(order)]
    buffered = 0
    n_docs = 0

    def flush() -> None:
        for k in range(order):
            if pending[k]:
                acc_k[k], acc_c[k] = _merge([acc_k[k], *pending[k]], [acc_c[k], *pending_counts[k]])
                pending[k].clear()
                pending_counts[k].clear()

    for doc in corpus:
        data = doc.data if isinstance(doc, Document) else bytes(doc)
        if not data:
            continue
        n_docs += 1
        a = np.frombuffer(data, dtype=np.uint8).astype(np.uint64)
        outcomes = np.append(a, np.uint64(EOD))
        n = a.size
        for k in range(order):
            if k > n:
                break
            ctx = _context_values(a, k, n + 1) if k else np.zeros(n + 1, np.uint64)
            pending[k].append((ctx << np.uint64(_OUT_BITS)) | outcomes[k:])
            pending_counts[k].append(np.ones(n + 1 - k, np.int64))
        buffered += n
        if buffered > 2_000_000:
            flush()
            buffered = 0
    if n_docs == 0:
        raise ValueError("cannot train on an empty corpus")
    flush()
    model.levels = [_Level.from_counts(acc_k[k], acc_c[k]) for k in range(order)]
    return model


__all__ = ["EOD", "N_OUTCOMES", "NGramByteModel", "train_ngram"]
