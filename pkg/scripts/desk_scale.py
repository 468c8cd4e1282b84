"""Desk-scale comparison of seeded span tokenisation against BPE baselines.

Texts are split by index mod 3 into n-gram training, tokeniser training and
held-out evaluation thirds.  Three vocabularies of the same size are learned
on the tokeniser third: seed-bpe over combined-constraint spans, BPE-WP (BPE
vocabulary, longest-prefix inference) and plain BPE (merge replay).  Each is
scored on held-out fertility and on morphological boundary F1 against the
bundled gold fixture.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from bytespan.bpe import train_bpe_vocab
from bytespan.corpus import signal_quantile
from bytespan.evaluate import fertility, morph_alignment, read_gold_file, renyi_efficiency, token_counts
from bytespan.learn import learn_seeded
from bytespan.ngram import train_ngram
from bytespan.segment import ConstraintConfig
from bytespan.tokenizer import Tokenizer

sys.path.insert(0, str(Path(__file__).resolve().parent))
from fetch_corpus import fetch  # noqa: E402

GOLD = Path(__file__).resolve().parent.parent / "data" / "morph_gold.jsonl"
log = logging.getLogger("desk_scale")


@dataclass
class DeskConfig:
    vocab_size: int = 8192
    order: int = 5
    discount: float = 0.75
    signal: str = "surprisal"
    constraint: str = "combined"
    theta_g_quantile: float = 0.30
    theta_m: float = 0.0
    seed_fraction: float = 0.5
    fertility_tolerance: float = 0.15


@dataclass
class MethodResult:
    fertility: float
    morph_f1: float
    renyi_efficiency: float
    seconds: float


@dataclass
class DeskResult:
    config: DeskConfig
    corpus_bytes: dict[str, int]
    theta_g: float
    methods: dict[str, MethodResult] = field(default_factory=dict)

    @property
    def fertility_ratio(self) -> float:
        return self.methods["seed-bpe"].fertility / self.methods["bpe-wp"].fertility

    @property
    def fertility_ok(self) -> bool:
        return abs(self.fertility_ratio - 1.0) <= self.config.fertility_tolerance

    @property
    def morph_ok(self) -> bool:
        return self.methods["seed-bpe"].morph_f1 > self.methods["bpe"].morph_f1

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(fertility_ratio=self.fertility_ratio, fertility_ok=self.fertility_ok,
                   morph_ok=self.morph_ok)
        return out


def split_thirds(texts: list[bytes]) -> tuple[list[bytes], list[bytes], list[bytes]]:
    return texts[0::3], texts[1::3], texts[2::3]


def run(texts: list[bytes], cfg: DeskConfig | None = None, gold_path: Path = GOLD) -> DeskResult:
    cfg = cfg or DeskConfig()
    lm_docs, train_docs, eval_docs = split_thirds(texts)
    gold = read_gold_file(gold_path)

    model = train_ngram(lm_docs, order=cfg.order, discount=cfg.discount)
    tracks = [model.score(d, doc_id=str(i)) for i, d in enumerate(train_docs)]
    theta_g = float(signal_quantile(tracks, cfg.signal, cfg.theta_g_quantile))
    constraint = ConstraintConfig(cfg.constraint, theta_g=theta_g, theta_m=cfg.theta_m,
                                  signal=cfg.signal)
    result = DeskResult(cfg, {"lm": sum(map(len, lm_docs)), "train": sum(map(len, train_docs)),
                              "eval": sum(map(len, eval_docs))}, theta_g)

    builders = {
        "seed-bpe": lambda: (learn_seeded(tracks, constraint, cfg.vocab_size, cfg.seed_fraction),
                             "longest_prefix"),
        "bpe-wp": lambda: (train_bpe_vocab(train_docs, cfg.vocab_size, base="wordpiece"),
                           "longest_prefix"),
        "bpe": lambda: (train_bpe_vocab(train_docs, cfg.vocab_size, base="bpe"), "bpe_merges"),
    }
    for name, build in builders.items():
        start = time.perf_counter()
        vocab, mode = build()
        tok = Tokenizer(vocab, mode)
        result.methods[name] = MethodResult(
            fertility=fertility(tok, eval_docs),
            morph_f1=morph_alignment(tok, gold).macro_f1,
            renyi_efficiency=renyi_efficiency(token_counts(tok, eval_docs), vocab_size=len(vocab)),
            seconds=time.perf_counter() - start,
        )
        log.info("%s: %s", name, result.methods[name])
    return result


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--vocab-size", type=int, default=DeskConfig.vocab_size)
    parser.add_argument("--corpus-dir", type=Path, help="directory of *_gut.txt files")
    parser.add_argument("-o", "--output", type=Path, help="write the result as JSON")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    paths = sorted(args.corpus_dir.glob("*_gut.txt")) if args.corpus_dir else fetch()
    result = run([p.read_bytes() for p in paths], DeskConfig(vocab_size=args.vocab_size))
    text = json.dumps(result.to_dict(), indent=2)
    if args.output:
        args.output.write_text(text + "\n")
    print(text)


if __name__ == "__main__":
    main()
