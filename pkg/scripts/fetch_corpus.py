"""Fetch the Gutenberg Shakespeare texts used by the desk-scale run.

The texts ship inside the ``shakespeare`` sdist on PyPI (public domain,
42 plays and poems, about 5 MB of ASCII).  They are extracted once into a cache
directory and reused afterwards.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import tarfile
import tempfile
from pathlib import Path

PACKAGE = "shakespeare==0.6"
MEMBER_DIR = "shksprdata/texts/"
SUFFIX = "_gut.txt"


def cache_dir() -> Path:
    root = os.environ.get("BYTESPAN_CACHE") or Path.home() / ".cache" / "bytespan"
    return Path(root) / "shakespeare"


def fetch(dest: Path | None = None) -> list[Path]:
    """Return the sorted text files, downloading them if the cache is empty."""
    dest = dest or cache_dir()
    texts = sorted(dest.glob(f"*{SUFFIX}"))
    if texts:
        return texts
    dest.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "--no-binary", ":all:",
             "--quiet", "-d", tmp, PACKAGE],
            check=True,
            env={**os.environ, "PIP_DISABLE_PIP_VERSION_CHECK": "1"},
        )
        (archive,) = Path(tmp).glob("*.tar.gz")
        with tarfile.open(archive) as tar:
            for member in tar.getmembers():
                name = member.name
                # modernised texts only; *_gut_f.txt repeat them in folio spelling
                if MEMBER_DIR in name and name.endswith(SUFFIX) and member.isfile():
                    data = tar.extractfile(member).read()
                    (dest / Path(name).name).write_bytes(data)
    return sorted(dest.glob(f"*{SUFFIX}"))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dest", type=Path, help="override the cache directory")
    args = parser.parse_args()
    texts = fetch(args.dest)
    size = sum(p.stat().st_size for p in texts)
    print(f"{len(texts)} texts, {size / 1e6:.1f} MB in {texts[0].parent}")


if __name__ == "__main__":
    main()
