import random
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import train_bpe_recount

from bytespan.bpe import (
    apply_merges,
    initial_sequence,
    pretoken_counts,
    rank_table,
    train_bpe,
    train_bpe_vocab,
)
from bytespan.corpus import iter_pretokens
from bytespan.vocab import Marker, MergeRule, Symbol, Vocabulary


def sequences_for(corpus, base="bpe"):
    vocab = Vocabulary(base)
    seqs = Counter()
    for (piece, w), c in pretoken_counts(corpus).items():
        seqs[tuple(initial_sequence(vocab, piece, w))] += c
    return vocab, seqs


def replay_in_order(merges, seq):
    """Apply every merge once, in rank order, over the whole sequence."""
    word = list(seq)
    for m in merges:
        out, i = [], 0
        while i < len(word):
            if i + 1 < len(word) and (word[i], word[i + 1]) == (m.left, m.right):
                out.append(m.result)
                i += 2
            else:
                out.append(word[i])
                i += 1
        word = out
    return word


class TestExamples:
    def test_abab_twice(self):
        vocab = train_bpe_vocab([b"abab", b"abab"], 514)
        assert [s.data for s in vocab.learned()] == [b"ab", b"abab"]
        a, b = vocab.id_of(Symbol(Marker.PLAIN, b"a")), vocab.id_of(Symbol(Marker.PLAIN, b"b"))
        assert vocab.merges == [MergeRule(0, a, b, 512), MergeRule(1, 512, 512, 513)]
        assert apply_merges(vocab.merges, [a, b, a, b]) == [513]

    def test_single_abab_stops_at_hapax_pair(self):
        # ("ab", "ab") occurs once, below the minimum pair frequency
        vocab = train_bpe_vocab([b"abab"], 514)
        assert [s.data for s in vocab.learned()] == [b"ab"]

    def test_no_repeated_pair(self):
        vocab = train_bpe_vocab([b"abcdef"], 600)
        assert len(vocab) == 512 and vocab.merges == []

    def test_deterministic(self):
        corpus = [b"the cat sat on the mat with the hat"]
        assert train_bpe_vocab(corpus, 540).merges == train_bpe_vocab(corpus, 540).merges

    def test_target_below_start(self):
        with pytest.raises(ValueError):
            train_bpe({}, 100, Vocabulary("bpe"))

    def test_input_vocab_untouched(self):
        vocab, seqs = sequences_for([b"aa aa"])
        train_bpe(seqs, 520, vocab)
        assert len(vocab) == 512 and vocab.merges == []

    def test_result_takes_left_marker(self):
        vocab = train_bpe_vocab([b" ab ab"], 770, base="wordpiece")
        assert vocab.learned() == [Symbol(Marker.CONTINUATION, b"ab"), Symbol(Marker.WORD_INITIAL, b" ab")]

    def test_existing_symbol_reused(self):
        start = Vocabulary("bpe")
        existing = start.add(Symbol(Marker.PLAIN, b"ab"))
        a, b = start.id_of(Symbol(Marker.PLAIN, b"a")), start.id_of(Symbol(Marker.PLAIN, b"b"))
        vocab, merges = train_bpe({(a, b): 3}, 520, start)
        assert merges[0] == MergeRule(0, a, b, existing)


class TestApplyMerges:
    def test_empty_merges(self):
        assert apply_merges([], [1, 2, 3]) == [1, 2, 3]

    def test_no_pair_present(self):
        merges = [MergeRule(0, 7, 8, 600)]
        assert apply_merges(merges, [1, 2, 3]) == [1, 2, 3]

    def test_lowest_rank_first(self):
        merges = [MergeRule(0, 2, 3, 600), MergeRule(1, 1, 2, 601)]
        assert apply_merges(merges, [1, 2, 3]) == [1, 600]
        assert apply_merges(rank_table(merges), [1, 2, 3]) == [1, 600]


corpus_strategy = st.lists(
    st.text(st.sampled_from(list("aabbc é")), min_size=1, max_size=30).map(str.encode),
    min_size=1, max_size=6,
)


class TestProperties:
    @given(corpus_strategy, st.integers(512, 560))
    def test_matches_recount_oracle(self, corpus, target):
        vocab, seqs = sequences_for(corpus)
        trained, merges = train_bpe(seqs, target, vocab)
        symbols, oracle_merges = train_bpe_recount(dict(seqs), target, vocab)
        assert merges == oracle_merges
        assert trained.symbols == symbols

    @given(corpus_strategy, st.sampled_from(["bpe", "wordpiece"]))
    def test_apply_reproduces_training(self, corpus, base):
        vocab, seqs = sequences_for(corpus, base)
        trained, merges = train_bpe(seqs, len(vocab) + 40, vocab)
        table = rank_table(merges)
        for seq in seqs:
            assert apply_merges(table, seq) == replay_in_order(merges, seq)

    @given(corpus_strategy)
    def test_merge_rules_well_formed(self, corpus):
        vocab, seqs = sequences_for(corpus)
        trained, merges = train_bpe(seqs, 600, vocab)
        assert [m.rank for m in merges] == list(range(len(merges)))
        for m in merges:
            left, right, result = (trained.symbols[i] for i in (m.left, m.right, m.result))
            assert result.data == left.data + right.data
            assert result.marker == left.marker

    @given(corpus_strategy, st.binary(max_size=20))
    def test_concatenation(self, corpus, probe):
        vocab, seqs = sequences_for(corpus)
        trained, merges = train_bpe(seqs, 560, vocab)
        for s, e, w in iter_pretokens(probe):
            ids = apply_merges(merges, initial_sequence(trained, probe[s:e], w))
            assert b"".join(trained.symbols[i].data for i in ids) == probe[s:e]


def test_random_corpora_oracle():
    rng = random.Random(11)
    for _ in range(10):
        words = ["".join(rng.choice("abcde") for _ in range(rng.randint(1, 7))) for _ in range(30)]
        text = " ".join(rng.choice(words) for _ in range(rng.randint(50, 300))).encode()
        vocab, seqs = sequences_for([text], rng.choice(["bpe", "wordpiece"]))
        target = len(vocab) + rng.randint(0, 80)
        trained, merges = train_bpe(seqs, target, vocab)
        assert (trained.symbols, merges) == train_bpe_recount(dict(seqs), target, vocab)
