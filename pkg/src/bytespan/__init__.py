"""Byte-span subword vocabularies driven by per-byte information signals."""

__version__ = "0.1.0"

from .bpe import apply_merges, train_bpe, train_bpe_vocab  # noqa: E402
from .corpus import (  # noqa: E402
    Document,
    SignalFileError,
    SignalTrack,
    pretokenize,
    read_signal_file,
    write_signal_file,
)
from .evaluate import (  # noqa: E402
    GoldSegmentation,
    LexicalDecisionRecord,
    MetricReport,
    cognitive_plausibility,
    fertility,
    morph_alignment,
    renyi_efficiency,
    token_length_distribution,
    vocab_overlap,
)
from .learn import (  # noqa: E402
    SpanFrequencyTable,
    count_spans,
    learn_balanced,
    learn_frequency,
    learn_incremental,
    learn_seeded,
)
from .ngram import NGramByteModel, train_ngram  # noqa: E402
from .segment import ConstraintConfig, Span, segment  # noqa: E402
from .tokenizer import Tokenizer, detokenize, load_vocab, save_vocab, tokenize  # noqa: E402
from .vocab import Marker, MergeRule, Symbol, Vocabulary  # noqa: E402

__all__ = [
    "ConstraintConfig",
    "Document",
    "GoldSegmentation",
    "LexicalDecisionRecord",
    "Marker",
    "MergeRule",
    "MetricReport",
    "NGramByteModel",
    "SignalFileError",
    "SignalTrack",
    "Span",
    "SpanFrequencyTable",
    "Symbol",
    "Tokenizer",
    "Vocabulary",
    "apply_merges",
    "cognitive_plausibility",
    "count_spans",
    "detokenize",
    "fertility",
    "learn_balanced",
    "learn_frequency",
    "learn_incremental",
    "learn_seeded",
    "load_vocab",
    "morph_alignment",
    "pretokenize",
    "read_signal_file",
    "renyi_efficiency",
    "save_vocab",
    "segment",
    "token_length_distribution",
    "tokenize",
    "train_bpe",
    "train_bpe_vocab",
    "train_ngram",
    "vocab_overlap",
    "write_signal_file",
]
