from __future__ import annotations

import json
from pathlib import Path

import pytest

from polymm.cli import ConfigError, PipelineConfig, main
from polymm.dataset import read_split_manifest, read_table
from polymm.depict import image_stem
from polymm.metrics import write_predictions


def _run(cfg: Path, *args: str) -> int:
    return main([*args, "--config", str(cfg)])


def _out(cfg: Path) -> Path:
    return cfg.parent / "out"


class TestConfig:
    def test_loads_synthetic(self, pipeline_config):
        cfg = PipelineConfig.from_file(pipeline_config)
        assert [s.name for s in cfg.sources] == ["main", "supp1", "supp3", "supp4"]
        assert cfg.output == _out(pipeline_config)

    def test_main_source_must_come_first(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[pipeline]\noutput = out\n\n[source:supp1]\npath = supp1.csv\n")
        with pytest.raises(ConfigError):
            PipelineConfig.from_file(path)

    def test_unknown_lora_key_exits_2(self, pipeline_config, capsys):
        with open(pipeline_config, "a") as fh:
            fh.write("\n[lora]\nmomentum = 0.5\n")
        assert _run(pipeline_config, "lora-demo") == 2
        assert "ConfigError" in capsys.readouterr().err

    def test_missing_config_file_exits_2(self, tmp_path):
        assert main(["stats", "--config", str(tmp_path / "none.ini")]) == 2


class TestStages:
    def test_missing_upstream_exits_2(self, pipeline_config, capsys):
        assert _run(pipeline_config, "split") == 2
        assert "StageInputMissing" in capsys.readouterr().err

    def test_stats_output(self, pipeline_config, capsys):
        assert _run(pipeline_config, "ingest") == 0
        assert _run(pipeline_config, "merge") == 0
        capsys.readouterr()
        assert _run(pipeline_config, "stats") == 0
        stats = json.loads((_out(pipeline_config) / "stats/stats.json").read_text())
        table = read_table(_out(pipeline_config) / "merge/merged.csv")
        assert stats["records"] == len(table)
        for prop, entry in stats["properties"].items():
            assert entry["present"] + entry["missing"] == len(table)
            assert entry["present"] == sum(prop in r.properties for r in table)
        assert '"records"' in capsys.readouterr().out

    def test_ingest_reports_bad_row(self, pipeline_config):
        assert _run(pipeline_config, "ingest") == 0
        failures = (_out(pipeline_config) / "ingest/main.failures.csv").read_text().splitlines()
        assert len(failures) == 2 and "*C(*" in failures[1]

    def test_skip_on_rerun(self, pipeline_config, capsys):
        assert _run(pipeline_config, "ingest") == 0
        capsys.readouterr()
        assert _run(pipeline_config, "ingest") == 0
        assert "skipped" in capsys.readouterr().out

    def test_split_override(self, pipeline_config):
        for stage in ("ingest", "merge"):
            assert _run(pipeline_config, stage) == 0
        assert _run(pipeline_config, "split", "--ratio", "0.8") == 0
        manifest = read_split_manifest(_out(pipeline_config) / "split/split.json")
        assert manifest["ratio"] == 0.8
        assert not set(manifest["train"]) & set(manifest["test"])


@pytest.fixture
def instructions_ready(pipeline_config):
    for stage in ("ingest", "merge", "split", "descriptors"):
        assert _run(pipeline_config, stage) == 0
    assert _run(pipeline_config, "depict", "--no-png") == 0
    return pipeline_config


class TestInstructions:
    def test_seeded_output_is_byte_identical(self, instructions_ready, tmp_path):
        out = _out(instructions_ready)
        assert _run(instructions_ready, "gen-instructions", "--seed", "1") == 0
        first = (out / "instructions/train.jsonl").read_bytes()
        (out / "instructions/train.jsonl").unlink()
        assert _run(instructions_ready, "gen-instructions", "--seed", "1") == 0
        assert (out / "instructions/train.jsonl").read_bytes() == first

    def test_no_test_polymer_in_train(self, instructions_ready):
        out = _out(instructions_ready)
        assert _run(instructions_ready, "gen-instructions") == 0
        manifest = read_split_manifest(out / "split/split.json")
        test_images = {f"depict/{image_stem(k)}.svg" for k in manifest["test"]}

        def refs(name: str) -> set[str]:
            lines = (out / "instructions" / name).read_text().splitlines()
            return {json.loads(line)["image"] for line in lines}

        train_images, test_rendered = refs("train.jsonl"), refs("test.jsonl")
        assert train_images and not train_images & test_images
        assert test_rendered <= test_images
        assert all((out / ref).exists() for ref in train_images | test_rendered)


class TestEvaluate:
    def test_report_shape(self, pipeline_config, tmp_path):
        for stage in ("ingest", "merge", "split"):
            assert _run(pipeline_config, stage) == 0
        out = _out(pipeline_config)
        manifest = read_split_manifest(out / "split/split.json")
        table = {r.key: r for r in read_table(out / "merge/merged.csv")}
        preds = {k: {p: v + 1.0 for p, v in table[k].properties.items()} for k in manifest["test"]}
        write_predictions(preds, tmp_path / "preds.csv")
        assert _run(pipeline_config, "evaluate", "--predictions", str(tmp_path / "preds.csv"),
                    "--label", "offset", "--name", "offset") == 0
        report = json.loads((out / "evaluate/offset/report.json").read_text())
        assert report["model"] == "offset"
        assert report["columns"][-1] == "wMAE"
        assert all(v == pytest.approx(1.0, abs=1e-9) for v in report["MAE"].values())
        assert sum(report["n"].values()) == sum(len(table[k].properties) for k in manifest["test"])


class TestFullRun:
    def test_manifests_have_no_absolute_paths(self, pipeline_config):
        assert _run(pipeline_config, "run") == 0
        out = _out(pipeline_config)
        manifests = list(out.rglob("manifest.json"))
        assert len(manifests) >= 10
        for m in manifests:
            text = m.read_text()
            assert str(pipeline_config.parent) not in text
            data = json.loads(text)
            assert {"stage", "tool_version", "config", "inputs", "outputs", "summary"} <= set(data)

    def test_rerun_skips_every_stage(self, pipeline_config, capsys):
        assert _run(pipeline_config, "run") == 0
        capsys.readouterr()
        assert _run(pipeline_config, "run") == 0
        lines = [line for line in capsys.readouterr().out.splitlines() if line.startswith("[")]
        assert lines and all("skipped" in line for line in lines)

    def test_lora_trace(self, pipeline_config):
        assert main(["lora", "demo", "--config", str(pipeline_config), "--rank", "4", "--alpha", "8"]) == 0
        trace = json.loads((_out(pipeline_config) / "lora/trace.json").read_text())
        assert trace["param_count_4096x4096_r8"] == 65536
        assert trace["reduction_ratio"] == 256
        assert trace["trace"]["config"]["rank"] == 4
        assert trace["trace"]["frozen_intact"]
