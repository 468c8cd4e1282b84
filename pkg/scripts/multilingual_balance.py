"""Language-balanced versus pooled frequency vocabularies on a synthetic corpus.

Two well-resourced languages in Latin script share the corpus with a
low-resource language written in Armenian script (two UTF-8 bytes per
letter).  Pooled frequency spends nearly the whole budget on the large
languages; the round-robin learner reserves a share for the rare one.
Fertility is measured per language on held-out text.
"""

from __future__ import annotations

import argparse
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from bytespan.corpus import signal_quantile
from bytespan.evaluate import fertility
from bytespan.learn import count_spans, learn_balanced, learn_frequency
from bytespan.ngram import train_ngram
from bytespan.segment import ConstraintConfig
from bytespan.tokenizer import Tokenizer

# three-byte scripts such as Georgian leave an order-5 context with less than
# two letters, so their spans never grow past single letters
ARMENIAN = [chr(c) for c in range(0x0561, 0x0587)]
ALPHABETS = {
    "aa": list("aeioubdfgklmnprst"),
    "bb": list("aeiouychjqvwxzrnt"),
    "cc": ARMENIAN,
}


@dataclass
class BalanceConfig:
    vocab_size: int = 768 + 600
    lexicon_size: int = 800
    zipf_exponent: float = 1.1
    train_words: dict[str, int] = field(default_factory=lambda: {"aa": 40_000, "bb": 40_000, "cc": 2_000})
    eval_words: int = 3_000
    order: int = 5
    theta_g_quantile: float = 0.30
    rare_language: str = "cc"
    seed: int = 0


def make_lexicon(rng: np.random.Generator, alphabet: list[str], size: int) -> list[str]:
    words: set[str] = set()
    while len(words) < size:
        n = int(rng.integers(2, 9))
        words.add("".join(rng.choice(alphabet, n)))
    return sorted(words)


def sample_text(rng: np.random.Generator, lexicon: list[str], n_words: int, exponent: float) -> bytes:
    ranks = np.arange(1, len(lexicon) + 1)
    probs = ranks ** -exponent
    probs /= probs.sum()
    words = rng.choice(len(lexicon), n_words, p=probs)
    return (" ".join(lexicon[i] for i in words) + "\n").encode()


def build_corpus(cfg: BalanceConfig) -> tuple[dict[str, bytes], dict[str, bytes]]:
    rng = np.random.default_rng(cfg.seed)
    train, held_out = {}, {}
    for lang in sorted(ALPHABETS):
        lexicon = make_lexicon(rng, ALPHABETS[lang], cfg.lexicon_size)
        train[lang] = sample_text(rng, lexicon, cfg.train_words[lang], cfg.zipf_exponent)
        held_out[lang] = sample_text(rng, lexicon, cfg.eval_words, cfg.zipf_exponent)
    return train, held_out


@dataclass
class BalanceResult:
    config: BalanceConfig
    fertility: dict[str, dict[str, float]]
    per_language_slots: dict[str, int]

    @property
    def rare_improved(self) -> bool:
        lang = self.config.rare_language
        return self.fertility["balanced"][lang] < self.fertility["frequency"][lang]

    def to_dict(self) -> dict:
        return {**asdict(self), "rare_improved": self.rare_improved}


def run(cfg: BalanceConfig | None = None) -> BalanceResult:
    cfg = cfg or BalanceConfig()
    train, held_out = build_corpus(cfg)
    model = train_ngram(train.values(), order=cfg.order)
    tracks = [model.score(data, doc_id=lang, language=lang) for lang, data in train.items()]
    theta_g = float(signal_quantile(tracks, "surprisal", cfg.theta_g_quantile))
    table = count_spans(tracks, ConstraintConfig("combined", theta_g=theta_g))

    vocabs = {
        "frequency": learn_frequency(table, cfg.vocab_size),
        "balanced": learn_balanced(table.by_language, cfg.vocab_size),
    }
    scores = {}
    for name, vocab in vocabs.items():
        tok = Tokenizer(vocab)
        scores[name] = {lang: fertility(tok, [data]) for lang, data in held_out.items()}
    return BalanceResult(cfg, scores, vocabs["balanced"].metadata["per_language"])


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--vocab-size", type=int, default=BalanceConfig.vocab_size)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    result = run(BalanceConfig(vocab_size=args.vocab_size, seed=args.seed))
    print(json.dumps(result.to_dict(), indent=2, ensure_ascii=False))


if __name__ == "__main__":
    main()
