import json
import os

import numpy as np
import pytest

from stratparse.cli import main
from stratparse.config import RunConfig, load_run_config, run_config_from_dict
from stratparse.trees import ConfigError, parse_brackets, read_treebank


def run_cli(*args):
    return main([str(a) for a in args])


@pytest.fixture(scope="module")
def toy_corpus(tmp_path_factory):
    base = tmp_path_factory.mktemp("corpus")
    train, dev = base / "train.txt", base / "dev.txt"
    assert run_cli("generate", "--grammar", "toy", "--count", 40,
                   "--seed", 3, "--out", train) == 0
    assert run_cli("generate", "--grammar", "toy", "--count", 12,
                   "--seed", 4, "--out", dev) == 0
    return train, dev


class TestConfigFile:
    def test_defaults(self):
        cfg = RunConfig()
        assert cfg.batch_size == 80
        assert cfg.learning_rate == pytest.approx(1e-3)
        assert cfg.patience == 100
        assert cfg.factor == "L85R15"
        assert (cfg.dropout_recurrent, cfg.dropout_ffnn) == (0.2, 0.4)

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            run_config_from_dict({"batch_sise": 80})

    def test_bad_values_rejected(self):
        with pytest.raises(ConfigError):
            run_config_from_dict({"batch_size": 0})
        with pytest.raises(ConfigError):
            run_config_from_dict({"variant": "QQ"})

    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"mode": "multi", "model_size": 32}))
        cfg = load_run_config(path)
        assert cfg.mode == "multi" and cfg.model_size == 32

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{nope")
        with pytest.raises(ConfigError):
            load_run_config(path)


class TestGenerateBinarizeStats:
    def test_generate_deterministic(self, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        run_cli("generate", "--grammar", "toy", "--count", 10, "--seed", 9,
                "--out", a)
        run_cli("generate", "--grammar", "toy", "--count", 10, "--seed", 9,
                "--out", b)
        assert a.read_text() == b.read_text()

    def test_binarize_outputs_reingestible(self, toy_corpus, tmp_path):
        train, _ = toy_corpus
        out = tmp_path / "bin.txt"
        strat = tmp_path / "samples.jsonl"
        assert run_cli("binarize", "--input", train, "--factor", "left",
                       "--output", out, "--stratified", strat) == 0
        btrees = read_treebank(out)
        assert all(len(t.children) <= 2 for t in btrees)
        from stratparse.stratify import StratifiedSample
        lines = strat.read_text().splitlines()
        assert len(lines) == len(btrees)
        sample = StratifiedSample.from_json(lines[0])
        assert sample.mode == "binary"
        assert sample.words == btrees[0].words()

    def test_stats_writes_tables_and_figures(self, toy_corpus, tmp_path):
        train, _ = toy_corpus
        outdir = tmp_path / "stats"
        assert run_cli("stats", "--input", train, "--outdir", outdir,
                       "--factor", "all") == 0
        for name in ("orientation.tsv", "compression.tsv", "complexity.tsv",
                     "orientation.png", "compression_left.png",
                     "complexity_multi.png"):
            assert (outdir / name).exists(), name
        rows = (outdir / "orientation.tsv").read_text().splitlines()
        assert rows[0] == "factor\tleft\tright"
        assert len(rows) == 5  # header + four factors

    def test_missing_input_exit_code(self, tmp_path):
        assert run_cli("stats", "--input", tmp_path / "nope.txt",
                       "--outdir", tmp_path / "o") == 3


class TestSplit:
    def test_random_split_with_manifest(self, toy_corpus, tmp_path):
        train, _ = toy_corpus
        outdir = tmp_path / "split"
        assert run_cli("split", "--input", train, "--outdir", outdir,
                       "--dev", 5, "--test", 3, "--seed", 11) == 0
        sizes = {name: len(read_treebank(outdir / f"{name}.txt"))
                 for name in ("train", "dev", "test")}
        assert sizes == {"train": 32, "dev": 5, "test": 3}
        manifest = (outdir / "manifest.tsv").read_text().splitlines()
        assert manifest[0] == "index\tsplit\tsource"
        assert len(manifest) == 41

    def test_section_split_by_filename(self, tmp_path):
        for number, text in [("wsj_0201", "(NP (NN a))"),
                             ("wsj_2205", "(NP (NN b))"),
                             ("wsj_2301", "(NP (NN c))")]:
            (tmp_path / f"{number}.txt").write_text(text + "\n")
        outdir = tmp_path / "out"
        assert run_cli("split", "--input",
                       tmp_path / "wsj_0201.txt", tmp_path / "wsj_2205.txt",
                       tmp_path / "wsj_2301.txt",
                       "--outdir", outdir, "--train-sections", "2-21",
                       "--dev-sections", "22", "--test-sections", "23") == 0
        assert read_treebank(outdir / "train.txt")[0].words() == ["a"]
        assert read_treebank(outdir / "dev.txt")[0].words() == ["b"]
        assert read_treebank(outdir / "test.txt")[0].words() == ["c"]

    def test_split_usage_error(self, toy_corpus, tmp_path):
        train, _ = toy_corpus
        assert run_cli("split", "--input", train,
                       "--outdir", tmp_path / "x") == 4


class TestOracleParseAndEval:
    @pytest.mark.parametrize("mode,factor", [("binary", "left"),
                                             ("binary", "midout"),
                                             ("multi", "right")])
    def test_oracle_round_trip_scores_100(self, toy_corpus, tmp_path,
                                          mode, factor):
        _, dev = toy_corpus
        pred = tmp_path / f"pred_{mode}_{factor}.txt"
        assert run_cli("parse", "--input", dev, "--output", pred, "--oracle",
                       "--mode", mode, "--factor", factor) == 0
        assert run_cli("eval", "--gold", dev, "--pred", pred) == 0
        from stratparse.scoring import corpus_score
        golds = read_treebank(dev)
        preds = [parse_brackets(line)
                 for line in pred.read_text().splitlines()
                 if line.strip() and not line.startswith(";;")]
        assert corpus_score(golds, preds).f1 == 100.0

    def test_eval_per_sentence_table(self, toy_corpus, tmp_path):
        _, dev = toy_corpus
        pred = tmp_path / "pred.txt"
        run_cli("parse", "--input", dev, "--output", pred, "--oracle")
        table = tmp_path / "per.tsv"
        assert run_cli("eval", "--gold", dev, "--pred", pred,
                       "--per-sentence", table) == 0
        lines = table.read_text().splitlines()
        assert lines[0].startswith("sentence\t")
        assert len(lines) == 13

    def test_parse_without_model_or_oracle_fails(self, toy_corpus, tmp_path):
        _, dev = toy_corpus
        assert run_cli("parse", "--input", dev,
                       "--output", tmp_path / "x.txt") == 4


@pytest.fixture(scope="module")
def trained(toy_corpus, tmp_path_factory):
    train, dev = toy_corpus
    outdir = tmp_path_factory.mktemp("run")
    cfg = {"mode": "binary", "model_size": 16, "label_hidden": 12,
           "ori_hidden": 8, "chunk_hidden": 12, "cxt_depth": 1,
           "train_path": str(train), "dev_path": str(dev),
           "batch_size": 20, "max_epochs": 3, "patience": 50,
           "seed": 5}
    cfg_path = outdir / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    assert run_cli("train", "--config", cfg_path, "--outdir", outdir) == 0
    return outdir


class TestTrainParseHeads:
    def test_train_artifacts(self, trained):
        for name in ("model.ckpt", "log.tsv", "curves.png", "config.json"):
            assert (trained / name).exists(), name
        log = (trained / "log.tsv").read_text().splitlines()
        assert log[0].split("\t") == ["epoch", "loss_tag", "loss_label",
                                      "loss_signal", "loss_total", "dev_f1",
                                      "lr", "seconds"]
        assert len(log) == 4

    def test_parse_with_model_and_records(self, trained, toy_corpus, tmp_path):
        _, dev = toy_corpus
        pred = tmp_path / "pred.txt"
        records = tmp_path / "records.jsonl"
        assert run_cli("parse", "--model", trained / "model.ckpt",
                       "--input", dev, "--output", pred,
                       "--records", records, "--threads", 2) == 0
        lines = [l for l in pred.read_text().splitlines()
                 if l.strip() and not l.startswith(";;")]
        assert len(lines) == 12
        golds = read_treebank(dev)
        for line, gold in zip(lines, golds):
            assert [w for t in parse_brackets(line) for w in t.words()] == \
                gold.words()
        record = json.loads(records.read_text().splitlines()[0])
        assert set(record) >= {"words", "tags", "labels", "signals", "mode",
                               "validity"}

    def test_parse_plain_text_input(self, trained, tmp_path):
        text = tmp_path / "raw.txt"
        text.write_text("the cat saw a dog\nshe ran\n")
        pred = tmp_path / "pred.txt"
        assert run_cli("parse", "--model", trained / "model.ckpt",
                       "--input", text, "--output", pred) == 0
        lines = pred.read_text().splitlines()
        assert len([l for l in lines if not l.startswith(";;")]) == 2

    def test_heads_requires_multi_model(self, trained, toy_corpus, tmp_path):
        _, dev = toy_corpus
        assert run_cli("heads", "--model", trained / "model.ckpt",
                       "--input", dev, "--outdir", tmp_path / "h") == 4

    def test_heads_on_multi_model(self, toy_corpus, tmp_path):
        train, dev = toy_corpus
        cfg = {"mode": "multi", "model_size": 16, "label_hidden": 12,
               "ori_hidden": 8, "chunk_hidden": 12, "cxt_depth": 1,
               "train_path": str(train), "dev_path": str(dev),
               "batch_size": 20, "max_epochs": 2, "patience": 50, "seed": 6}
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        outdir = tmp_path / "run"
        assert run_cli("train", "--config", cfg_path, "--outdir", outdir) == 0
        heads_dir = tmp_path / "heads"
        assert run_cli("heads", "--model", outdir / "model.ckpt",
                       "--input", dev, "--outdir", heads_dir) == 0
        assert (heads_dir / "heads.tsv").exists()
        assert (heads_dir / "heads.png").exists()

    def test_training_reproducible(self, toy_corpus, tmp_path):
        train, dev = toy_corpus
        cfg = {"mode": "binary", "model_size": 16, "label_hidden": 12,
               "ori_hidden": 8, "chunk_hidden": 12, "cxt_depth": 1,
               "train_path": str(train), "dev_path": str(dev),
               "batch_size": 20, "max_epochs": 2, "patience": 50, "seed": 7}
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        logs = []
        for which in ("r1", "r2"):
            outdir = tmp_path / which
            assert run_cli("train", "--config", cfg_path,
                           "--outdir", outdir) == 0
            rows = (outdir / "log.tsv").read_text().splitlines()
            logs.append([r.rsplit("\t", 1)[0] for r in rows])  # drop seconds
        assert logs[0] == logs[1]
