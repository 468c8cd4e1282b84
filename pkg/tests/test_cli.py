import json
import subprocess
import sys

import pytest
from conftest import TOY_TEXT

from bytespan.cli import main
from bytespan.corpus import read_signal_file, write_manifest
from bytespan.vocab import load_vocab


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    entries = []
    for i, lang in enumerate(["en", "en", "fr", "fr"]):
        name = f"doc{i}.txt"
        text = TOY_TEXT * (i + 2) if lang == "en" else "le chat est sur la table, la table est stable. " * 20
        (root / name).write_text(text, encoding="utf-8")
        entries.append((f"doc{i}", name, lang))
    write_manifest(entries, root / "manifest.jsonl")
    assert main(["signals", "ngram", "--manifest", str(root / "manifest.jsonl"),
                 "-o", str(root / "signals.jsonl"), "--order", "3"]) == 0
    return root


def train(root, out, *extra):
    return main(["train", "--signals", str(root / "signals.jsonl"), "-o", str(root / out),
                 "--vocab-size", "840", *extra])


class TestSignals:
    def test_signal_file(self, workspace):
        tracks = read_signal_file(workspace / "signals.jsonl")
        assert [t.doc_id for t in tracks] == ["doc0", "doc1", "doc2", "doc3"]
        assert tracks[2].language == "fr"

    def test_model_round_trip(self, workspace):
        model = workspace / "lm.npz"
        assert main(["signals", "ngram", "--manifest", str(workspace / "manifest.jsonl"),
                     "-o", str(workspace / "s1.jsonl"), "--order", "3", "--save-model", str(model)]) == 0
        assert main(["signals", "ngram", "--manifest", str(workspace / "manifest.jsonl"),
                     "-o", str(workspace / "s2.jsonl"), "--load-model", str(model)]) == 0
        assert (workspace / "s1.jsonl").read_bytes() == (workspace / "s2.jsonl").read_bytes()

    def test_bad_order(self, workspace):
        assert main(["signals", "ngram", str(workspace / "doc0.txt"), "-o", str(workspace / "x"),
                     "--order", "0"]) == 1


class TestTrain:
    @pytest.mark.parametrize("method", ["frequency", "incremental", "seed-bpe", "balanced",
                                        "bpe", "bpe-wp"])
    def test_rerun_and_workers_identical(self, workspace, method):
        assert train(workspace, f"{method}-1.json", "--method", method, "--workers", "1") == 0
        assert train(workspace, f"{method}-4.json", "--method", method, "--workers", "4") == 0
        assert train(workspace, f"{method}-r.json", "--method", method, "--workers", "1") == 0
        first = (workspace / f"{method}-1.json").read_bytes()
        assert first == (workspace / f"{method}-4.json").read_bytes()
        assert first == (workspace / f"{method}-r.json").read_bytes()

    def test_full_seed_equals_frequency(self, workspace):
        assert train(workspace, "seed1.json", "--method", "seed-bpe", "--seed-fraction", "1.0") == 0
        assert train(workspace, "freq.json", "--method", "frequency") == 0
        seeded, freq = load_vocab(workspace / "seed1.json"), load_vocab(workspace / "freq.json")
        assert seeded.same_symbols(freq)

    def test_metadata(self, workspace):
        assert train(workspace, "meta.json", "--method", "seed-bpe") == 0
        meta = load_vocab(workspace / "meta.json").metadata
        cfg = meta["config"]
        assert cfg["constraint"]["kind"] == "combined"
        assert cfg["theta_g_quantile"] == 0.3 and cfg["constraint"]["theta_g"] >= 0
        assert cfg["seed_fraction"] == 0.5 and cfg["theta_f"] == 1
        assert "signals.jsonl" in meta["inputs"]
        assert "workers" not in json.dumps(meta)

    @pytest.mark.parametrize("constraint", ["monotonic", "combined"])
    def test_incremental_rejects_non_global(self, workspace, constraint, capsys):
        code = train(workspace, "x.json", "--method", "incremental", "--constraint", constraint)
        assert code == 1
        assert "incremental" in capsys.readouterr().err

    def test_span_method_needs_signals(self, workspace):
        assert main(["train", "--method", "frequency", str(workspace / "doc0.txt"), "-o",
                     str(workspace / "x.json"), "--vocab-size", "800"]) == 1

    def test_vocab_size_below_base(self, workspace):
        assert train(workspace, "x.json", "--method", "frequency", "--vocab-size", "700") == 1

    def test_bad_flag(self):
        assert_exit(["train", "--nonsense"], 1)

    def test_missing_input_is_data_error(self, workspace):
        assert main(["train", "--method", "bpe", str(workspace / "missing.txt"), "-o",
                     str(workspace / "x.json"), "--vocab-size", "600"]) == 2

    def test_dump_counts(self, workspace):
        assert train(workspace, "d.json", "--method", "frequency",
                     "--dump-counts", str(workspace / "counts.jsonl")) == 0
        first = json.loads((workspace / "counts.jsonl").read_text().splitlines()[0])
        assert set(first) == {"marker", "bytes_hex", "count", "language"}


def assert_exit(argv, code):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == code


class TestTokenizeEvaluate:
    def test_tokenize_round_trip(self, workspace):
        assert train(workspace, "tok.json", "--method", "seed-bpe") == 0
        out = workspace / "ids.jsonl"
        assert main(["tokenize", "--vocab", str(workspace / "tok.json"),
                     "--manifest", str(workspace / "manifest.jsonl"), "-o", str(out)]) == 0
        vocab = load_vocab(workspace / "tok.json")
        rows = [json.loads(line) for line in out.read_text().splitlines()]
        for row in rows:
            data = (workspace / f"{row['doc_id']}.txt").read_bytes()
            assert b"".join(vocab.symbols[i].data for i in row["ids"]) == data

    def test_bpe_mode_needs_merges(self, workspace):
        assert train(workspace, "f.json", "--method", "frequency") == 0
        assert main(["tokenize", "--vocab", str(workspace / "f.json"), "--mode", "bpe",
                     str(workspace / "doc0.txt")]) == 2

    def test_evaluate(self, workspace, tmp_path):
        assert train(workspace, "e.json", "--method", "seed-bpe") == 0
        gold = tmp_path / "gold.jsonl"
        gold.write_text(json.dumps({"word": "tables", "segments": ["table", "s"], "resource": "toy"}) + "\n")
        report = tmp_path / "report.json"
        assert main(["evaluate", "--vocab", str(workspace / "e.json"), "--manifest",
                     str(workspace / "manifest.jsonl"), "--gold", str(gold), "-o", str(report)]) == 0
        doc = json.loads(report.read_text())
        assert doc["metrics"]["fertility"] >= 1
        assert set(doc["per_language"]) == {"en", "fr"}
        assert "morph_coverage" in doc["metrics"]
        assert doc["config"]["alpha"] == 2.5

    def test_unknown_metric(self, workspace):
        assert main(["evaluate", "--vocab", str(workspace / "e.json"), "--metrics", "bleu",
                     str(workspace / "doc0.txt")]) == 1


def test_module_entry_point(workspace):
    result = subprocess.run([sys.executable, "-m", "bytespan", "--help"], capture_output=True, text=True)
    assert result.returncode == 0 and "train" in result.stdout
