from __future__ import annotations

import random

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bytespan.bpe import train_bpe_vocab
from bytespan.corpus import SignalTrack
from bytespan.learn import count_spans, learn_frequency
from bytespan.segment import ConstraintConfig
from bytespan.vocab import Marker, Symbol, Vocabulary

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

TOY_TEXT = (
    "the unstable table was stable until the tables turned unstable again; "
    "carbonization of carbon atoms, 12 molecules are 3.5 nm wide. "
    "ça va très bien, naïve café owners said 東京 is far. "
)


def make_track(data: bytes | str, values, doc_id: str = "d", language: str | None = None,
               entropy=None) -> SignalTrack:
    if isinstance(data, str):
        data = data.encode("utf-8")
    values = np.asarray(values, dtype=float)
    return SignalTrack(doc_id, data, values, values if entropy is None else np.asarray(entropy, float),
                       language)


def random_symbols(rng: random.Random, alphabet: bytes, n: int, max_len: int = 6) -> list[Symbol]:
    out = []
    markers = list(Marker)
    for _ in range(n):
        k = rng.randint(2, max_len)
        out.append(Symbol(rng.choice(markers), bytes(rng.choice(alphabet) for _ in range(k))))
    return out


def fixture_vocabularies() -> dict[str, Vocabulary]:
    """Five vocabularies with different bases, sizes and origins."""
    rng = random.Random(7)
    vocabs = {"base-wordpiece": Vocabulary("wordpiece"), "base-bpe": Vocabulary("bpe")}

    random_vocab = Vocabulary("wordpiece")
    for sym in random_symbols(rng, b"ab \xc3\xa9\x00\xff", 300):
        random_vocab.add(sym)
    vocabs["random"] = random_vocab

    corpus = [TOY_TEXT.encode("utf-8") * 3]
    vocabs["bpe-trained"] = train_bpe_vocab(corpus, 600, base="bpe")

    values = np.random.default_rng(3).random(len(corpus[0])) * 6
    track = SignalTrack("toy", corpus[0], values, values)
    table = count_spans([track], ConstraintConfig("combined", theta_g=3.0))
    vocabs["frequency"] = learn_frequency(table, 900)
    return vocabs


@pytest.fixture(scope="session")
def vocabularies() -> dict[str, Vocabulary]:
    return fixture_vocabularies()


# filled by the acceptance module, printed after the run
ACCEPTANCE_RESULTS: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_RESULTS):
            terminalreporter.write_line(ACCEPTANCE_RESULTS[number])
