"""CLI subcommands exercised end to end through main()."""

import json

import pytest

from pkchat.cli import main


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    kg_path = root / "demo.tsv"
    corpus_path = root / "corpus.jsonl"
    main(["kg", "demo", "--out", str(kg_path), "--seed", "3", "--entities", "6"])
    main(["corpus", "gen", "--kg", str(kg_path), "--seed", "4", "--n", "5",
          "--out", str(corpus_path)])
    return root, kg_path, corpus_path


def test_kg_demo_and_load(workspace, capsys):
    root, kg_path, _ = workspace
    main(["kg", "load", str(kg_path)])
    out = capsys.readouterr().out
    assert "loaded 30 triples" in out


def test_kg_query_prints_neighborhood(workspace, capsys):
    root, kg_path, _ = workspace
    main(["kg", "query", str(kg_path), "--entity", "basalt"])
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 5
    assert all("basalt" in line for line in out)


def test_corpus_gen_deterministic(workspace, tmp_path):
    root, kg_path, corpus_path = workspace
    again = tmp_path / "again.jsonl"
    main(["corpus", "gen", "--kg", str(kg_path), "--seed", "4", "--n", "5",
          "--out", str(again)])
    assert again.read_text() == corpus_path.read_text()


def test_corpus_stats_output(workspace, capsys):
    _, _, corpus_path = workspace
    main(["corpus", "stats", str(corpus_path)])
    out = capsys.readouterr().out
    assert "scenarios: 5" in out
    assert "avg rounds per scenario:" in out


def test_extract_rule_and_textrank(capsys):
    main(["extract", "--method", "rule", "--text",
          "what is the formed_by of basalt ?"])
    rows = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert rows[0]["text"] == "formed_by of basalt"
    main(["extract", "--method", "textrank", "--text",
          "basalt lava basalt rock"])
    rows = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert any(r["text"] == "basalt" for r in rows)


def test_extract_crf_requires_checkpoint():
    with pytest.raises(SystemExit, match="checkpoint"):
        main(["extract", "--method", "crf", "--text", "hello"])


def test_train_eval_round_trip(workspace, capsys, tmp_path):
    root, kg_path, corpus_path = workspace
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps({
        "model": {"layers": 1, "heads": 2, "hidden": 16, "latent": 2,
                  "ffn_mult": 2, "max_knowledge": 32, "max_context": 24,
                  "max_response": 10},
        "train": {"steps": 4, "batch_size": 2, "crf_epochs": 2},
    }))
    ckpt_path = tmp_path / "model.ckpt"
    trace_path = tmp_path / "trace.csv"
    report_path = tmp_path / "report.json"
    main(["train", "--corpus", str(corpus_path), "--kg", str(kg_path),
          "--config", str(config_path), "--seed", "1",
          "--out", str(ckpt_path), "--trace", str(trace_path)])
    out = capsys.readouterr().out
    assert "trained 4 steps" in out
    assert ckpt_path.exists()
    assert trace_path.read_text().startswith("step,nll,bow,ts,total")

    main(["eval", "--checkpoint", str(ckpt_path), "--corpus", str(corpus_path),
          "--report", str(report_path)])
    out = capsys.readouterr().out
    assert "BLEU-1" in out
    report = json.loads(report_path.read_text())
    assert report["pairs"] > 0
    assert "provenance" in report

    main(["extract", "--method", "tfidf", "--text", "basalt is nice",
          "--checkpoint", str(ckpt_path)])
    rows = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert rows


def test_log_level_env(monkeypatch):
    import logging

    from pkchat.util import configure_logging

    monkeypatch.setenv("PKCHAT_LOG", "debug")
    root = logging.getLogger()
    old = root.level
    try:
        root.handlers.clear()
        configure_logging()
        assert root.level == logging.DEBUG
    finally:
        root.setLevel(old)
