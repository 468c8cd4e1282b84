"""Byte-level corpus ingestion, pre-tokenisation and the signal file format."""

from __future__ import annotations

import json
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import regex

# Character classes: letters (with combining marks), digits, other. A run of
# whitespace is glued to the front of whatever pre-token follows it.
_PRETOKEN_RE = regex.compile(
    r"(\s*)(?:[\p{L}\p{M}]+|\p{N}+|[^\s\p{L}\p{M}\p{N}]+)|(\s+)",
)


class SignalFileError(ValueError):
    """Raised when a signal file or signal track violates its invariants."""


@dataclass(frozen=True)
class Document:
    doc_id: str
    data: bytes
    language: str | None = None

    def __post_init__(self) -> None:
        if not self.data:
            raise ValueError(f"document {self.doc_id!r} is empty")


def iter_pretokens(data: bytes) -> Iterator[tuple[int, int, bool]]:
    """Yield ``(start, end, word_initial)`` byte ranges of each pre-token.

    ``word_initial`` is true when the pre-token begins with whitespace. Invalid
    UTF-8 bytes are decoded one at a time and fall into the "other" class, so
    a valid multi-byte code point is never split.
    """
    if not data:
        return
    text = data.decode("utf-8", "surrogateescape")
    if data.isascii():
        for m in _PRETOKEN_RE.finditer(text):
            yield m.start(), m.end(), m.start(1) != m.end(1) or m.group(2) is not None
        return
    pos = 0
    for m in _PRETOKEN_RE.finditer(text):
        n = len(m.group().encode("utf-8", "surrogateescape"))
        yield pos, pos + n, m.start(1) != m.end(1) or m.group(2) is not None
        pos += n


def pretokenize(data: bytes) -> tuple[int, ...]:
    """Pre-token boundary offsets of ``data``, always including 0 and ``len(data)``."""
    offsets = [start for start, _, _ in iter_pretokens(data)]
    if not offsets:
        return (0,)
    offsets.append(len(data))
    return tuple(offsets)


@dataclass(frozen=True, eq=False)
class SignalTrack:
    """One document's bytes with aligned per-byte surprisal and entropy (bits).

    Pre-token boundaries are derived from the bytes on construction.
    """

    doc_id: str
    data: bytes
    surprisal: np.ndarray
    entropy: np.ndarray
    language: str | None = None
    boundaries: tuple[int, ...] = field(init=False)
    word_initial: tuple[bool, ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not self.data:
            raise SignalFileError(f"{self.doc_id}: empty document")
        for name in ("surprisal", "entropy"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            if arr.ndim != 1 or len(arr) != len(self.data):
                raise SignalFileError(
                    f"{self.doc_id}: length mismatch, {name} has {arr.size} values "
                    f"for {len(self.data)} bytes"
                )
            bad = np.flatnonzero(~np.isfinite(arr))
            if bad.size:
                raise SignalFileError(
                    f"{self.doc_id}: {name} is non-finite at offset {int(bad[0])}"
                )
            neg = np.flatnonzero(arr < 0)
            if neg.size:
                raise SignalFileError(
                    f"{self.doc_id}: {name} is negative at offset {int(neg[0])}"
                )
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        triples = list(iter_pretokens(self.data))
        object.__setattr__(
            self, "boundaries", tuple(s for s, _, _ in triples) + (len(self.data),)
        )
        object.__setattr__(self, "word_initial", tuple(w for _, _, w in triples))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SignalTrack):
            return NotImplemented
        return (
            self.doc_id == other.doc_id
            and self.data == other.data
            and self.language == other.language
            and np.array_equal(self.surprisal, other.surprisal)
            and np.array_equal(self.entropy, other.entropy)
        )

    def signal(self, name: str) -> np.ndarray:
        if name == "surprisal":
            return self.surprisal
        if name == "entropy":
            return self.entropy
        raise ValueError(f"unknown signal {name!r}")


def _track_record(track: SignalTrack) -> str:
    record = {
        "doc_id": track.doc_id,
        "language": track.language,
        "bytes_hex": track.data.hex(),
        "surprisal": track.surprisal.tolist(),
        "entropy": track.entropy.tolist(),
    }
    return json.dumps(record, ensure_ascii=False, allow_nan=False)


def write_signal_file(tracks: Iterable[SignalTrack], path: str | Path) -> None:
    """Write tracks as UTF-8 JSON lines, one record per document."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for track in tracks:
            fh.write(_track_record(track))
            fh.write("\n")


def _parse_record(line: str, lineno: int) -> SignalTrack:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise SignalFileError(f"line {lineno}: malformed record ({exc.msg})") from None
    if not isinstance(rec, dict):
        raise SignalFileError(f"line {lineno}: record is not an object")
    doc_id = rec.get("doc_id")
    if not isinstance(doc_id, str):
        raise SignalFileError(f"line {lineno}: missing or non-string doc_id")
    for key in ("bytes_hex", "surprisal", "entropy"):
        if key not in rec:
            raise SignalFileError(f"{doc_id}: missing field {key!r}")
    language = rec.get("language")
    if language is not None and not isinstance(language, str):
        raise SignalFileError(f"{doc_id}: language must be a string or null")
    try:
        data = bytes.fromhex(rec["bytes_hex"])
    except (TypeError, ValueError):
        raise SignalFileError(f"{doc_id}: bytes_hex is not valid hex") from None
    arrays = {}
    for key in ("surprisal", "entropy"):
        values = rec[key]
        if not isinstance(values, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in values
        ):
            raise SignalFileError(f"{doc_id}: {key} must be a list of numbers")
        arrays[key] = np.asarray(values, dtype=np.float64)
    return SignalTrack(doc_id, data, arrays["surprisal"], arrays["entropy"], language)


def iter_signal_file(path: str | Path) -> Iterator[SignalTrack]:
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            track = _parse_record(line, lineno)
            if track.doc_id in seen:
                raise SignalFileError(f"{track.doc_id}: duplicate doc_id on line {lineno}")
            seen.add(track.doc_id)
            yield track


def read_signal_file(path: str | Path) -> list[SignalTrack]:
    """Load and validate every track in a signal file."""
    return list(iter_signal_file(path))


def read_manifest(path: str | Path) -> list[Document]:
    """Read a line-delimited ``{"doc_id", "path", "language"}`` manifest.

    Relative paths resolve against the manifest's directory.
    """
    path = Path(path)
    docs: list[Document] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                doc_id, doc_path = rec["doc_id"], rec["path"]
            except (json.JSONDecodeError, KeyError, TypeError):
                raise SignalFileError(f"{path}:{lineno}: malformed manifest record") from None
            if doc_id in seen:
                raise SignalFileError(f"{path}:{lineno}: duplicate doc_id {doc_id!r}")
            seen.add(doc_id)
            data = (path.parent / doc_path).read_bytes()
            docs.append(Document(doc_id, data, rec.get("language")))
    return docs


def write_manifest(entries: Iterable[tuple[str, str, str | None]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc_id, doc_path, language in entries:
            rec = {"doc_id": doc_id, "path": doc_path, "language": language}
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def load_documents(paths: Iterable[str | Path], language: str | None = None) -> list[Document]:
    """Read raw files as documents, using each file's stem as its id."""
    return [Document(Path(p).stem, Path(p).read_bytes(), language) for p in paths]


def signal_quantile(tracks: Iterable[SignalTrack], signal: str, q: float | Iterable[float]):
    values = np.concatenate([t.signal(signal) for t in tracks])
    if values.size == 0:
        raise ValueError("no signal values")
    out = np.quantile(values, q)
    return float(out) if np.ndim(out) == 0 else out


_SPACE_RE = regex.compile(r"\s+")


def is_whitespace_only(data: bytes) -> bool:
    return _SPACE_RE.fullmatch(data.decode("utf-8", "surrogateescape")) is not None


__all__ = [
    "Document",
    "SignalFileError",
    "SignalTrack",
    "is_whitespace_only",
    "iter_pretokens",
    "iter_signal_file",
    "load_documents",
    "pretokenize",
    "read_manifest",
    "read_signal_file",
    "signal_quantile",
    "write_manifest",
    "write_signal_file",
]
