import json

import pytest

from models.meter.labels import MeterLabel
from scripts.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from tests.conftest import mnemonic_verse


def run(capsys, *argv):
    code = main([str(arg) for arg in argv])
    return code, capsys.readouterr().out


@pytest.fixture(scope="module")
def benchmark_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("bench")
    assert main(["synth", "--per-meter", "1", "--output", str(out), "--seed", "3"]) == EXIT_OK
    return out


def test_scan_text(capsys):
    code, out = run(capsys, "scan", "--text", mnemonic_verse(MeterLabel.WAFER))
    assert code == EXIT_OK
    result = json.loads(out)
    assert result["meter"] == "Wafer"
    assert result["distance"] == 0.0
    assert len(result["nearest"]) == 3


def test_scan_file(capsys, tmp_path):
    path = tmp_path / "verses.txt"
    path.write_text(mnemonic_verse(MeterLabel.RAMAL) + "\n" + mnemonic_verse(MeterLabel.HAZAJ) + "\n", encoding="utf-8")
    code, out = run(capsys, "scan", "--file", path)
    assert code == EXIT_OK
    assert [r["meter"] for r in json.loads(out)] == ["Ramal", "Hazaj"]


def test_scan_undiacritized_is_data_error(capsys):
    code, _ = run(capsys, "scan", "--text", "قفا نبك من ذكرى حبيب ومنزل")
    assert code == EXIT_DATA


def test_language_model_round_trip(capsys, tmp_path):
    corpus = tmp_path / "corpus.txt"
    corpus.write_text("قمر ليل نجم\nقمر ليل بحر\nنجم بحر\n", encoding="utf-8")
    arpa = tmp_path / "lm.arpa"
    code, out = run(capsys, "lm-train", "--corpus", corpus, "--output", arpa, "--order", 2)
    assert code == EXIT_OK
    assert json.loads(out)["order"] == 2
    assert arpa.read_text(encoding="utf-8").startswith("\\data\\")

    code, out = run(capsys, "lm-query", "--lm", arpa, "--text", "قمر ليل")
    assert code == EXIT_OK
    assert json.loads(out)["perplexity"] > 1.0

    code, out = run(capsys, "lm-query", "--lm", arpa, "--word", "ليل", "--history", "قمر")
    assert code == EXIT_OK
    assert json.loads(out)["log10_prob"] < 0.0


def test_synth_then_decode(capsys, tmp_path):
    text = mnemonic_verse(MeterLabel.MUTAQAREB)
    path = tmp_path / "verse.ctce"
    code, _ = run(capsys, "synth", "--transcript", text, "--output", path)
    assert code == EXIT_OK
    code, out = run(capsys, "decode", "--emission", path, "--exact")
    assert code == EXIT_OK
    assert json.loads(out)["text"] == text


def test_benchmark_evaluate(capsys, benchmark_dir, tmp_path):
    report = tmp_path / "report.json"
    code, out = run(capsys, "evaluate", "--manifest", benchmark_dir / "manifest.jsonl", "--report", report)
    assert code == EXIT_OK
    assert out.startswith("Entries: 16")
    data = json.loads(report.read_text(encoding="utf-8"))
    assert data["classification"]["accuracy"] == 100.0
    assert data["transcription"]["cer"] == 0.0


def test_evaluate_attribute(capsys, benchmark_dir):
    code, out = run(capsys, "evaluate", "--manifest", benchmark_dir / "manifest.jsonl",
                    "--decoder", "greedy", "--attribute")
    assert code == EXIT_OK
    assert '"classifier_drop": 0.0' in out


def test_stats_and_split(capsys, benchmark_dir, tmp_path):
    code, out = run(capsys, "stats", "--manifest", benchmark_dir / "manifest.jsonl")
    assert code == EXIT_OK
    assert "Taweel" in out
    split = tmp_path / "split.jsonl"
    code, out = run(capsys, "split", "--manifest", benchmark_dir / "manifest.jsonl", "--output", split,
                    "--test-fraction", 0.5)
    assert code == EXIT_OK
    assert sum(json.loads(out).values()) == 16


def test_head_train_and_classify(capsys, benchmark_dir, tmp_path):
    head = tmp_path / "meter.head"
    code, out = run(capsys, "head-train", "--manifest", benchmark_dir / "manifest.jsonl",
                    "--output", head, "--epochs", 5)
    assert code == EXIT_OK
    assert json.loads(out)["head"] == str(head)

    emission = sorted(benchmark_dir.glob("*.ctce"))[0]
    code, out = run(capsys, "head-classify", "--head", head, "--emission", emission)
    assert code == EXIT_OK
    result = json.loads(out)
    assert result["meter"] in {label.value for label in MeterLabel}
    assert sum(result["probabilities"].values()) == pytest.approx(1.0, abs=1e-4)
    assert result["model"]["is_trained"]
    assert result["model"]["n_features"] == result["model"]["dim"]
    assert "feature_names" not in result["model"]


def test_missing_arguments_is_usage_error(capsys):
    assert main(["scan"]) == EXIT_USAGE
    assert main(["no-such-command"]) == EXIT_USAGE


def test_invalid_configuration_is_usage_error(capsys, tmp_path):
    path = tmp_path / "verse.ctce"
    assert main(["synth", "--transcript", "كتب", "--output", str(path)]) == EXIT_OK
    assert main(["decode", "--emission", str(path), "--beam-width", "0"]) == EXIT_USAGE


def test_bad_manifest_is_data_error(capsys, tmp_path):
    manifest = tmp_path / "manifest.jsonl"
    manifest.write_text('{"id": "a", "transcript": "كتب"}\n{"id": "a", "transcript": "كتب"}\n', encoding="utf-8")
    assert main(["stats", "--manifest", str(manifest)]) == EXIT_DATA


def test_missing_file_is_data_error(capsys, tmp_path):
    assert main(["decode", "--emission", str(tmp_path / "absent.ctce")]) == EXIT_DATA


def test_common_flags_on_scan(capsys, tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"prose_threshold": 0.0}), encoding="utf-8")
    report = tmp_path / "scan.json"
    code, out = run(capsys, "scan", "--text", mnemonic_verse(MeterLabel.KAMEL),
                    "--config", config, "--seed", 5, "--report", report)
    assert code == EXIT_OK
    assert json.loads(report.read_text(encoding="utf-8")) == json.loads(out)
    assert json.loads(out)["meter"] == "Kamel"


def test_synth_reads_config(capsys, tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"frames_per_char": 2, "blank_prob": 0.0}), encoding="utf-8")
    code, out = run(capsys, "synth", "--transcript", "كتب", "--output", tmp_path / "k.ctce", "--config", config)
    assert code == EXIT_OK
    assert json.loads(out)["frames"] == 6


def test_invalid_config_file_rejected_everywhere(capsys, tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"beam_width": 0}), encoding="utf-8")
    corpus = tmp_path / "corpus.txt"
    corpus.write_text("قمر ليل\n", encoding="utf-8")
    assert main(["lm-train", "--corpus", str(corpus), "--output", str(tmp_path / "lm.arpa"),
                 "--config", str(config)]) == EXIT_USAGE
    assert main(["scan", "--text", "كَتَبَ", "--config", str(config)]) == EXIT_USAGE


def test_compare_report(capsys, benchmark_dir, tmp_path):
    config = tmp_path / "greedy.json"
    config.write_text(json.dumps({"decoder": "greedy"}), encoding="utf-8")
    report = tmp_path / "compare.json"
    code, _ = run(capsys, "compare", "--manifest", benchmark_dir / "manifest.jsonl",
                  f"greedy={config}", "--report", report)
    assert code == EXIT_OK
    assert json.loads(report.read_text(encoding="utf-8"))["greedy"]["Accuracy"] == 100.0
