"""Command-line pipeline: ingest, merge, split, features, images, prompts, baselines, evaluation.

Every stage writes into its own directory below the output root together with
``manifest.json`` (stage config, input and output checksums, tool version).
A stage whose manifest still matches its config and inputs is skipped.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import shutil
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from polymm import __version__
from polymm.chem import ChemError, parse
from polymm.dataset import (
    DEFAULT_SCHEMAS,
    SOURCES,
    CsvSchema,
    DatasetError,
    apply_split,
    ingest_csv,
    merge_sequential,
    read_split_manifest,
    read_table,
    split,
    split_manifest,
    stats_report,
    write_failures,
    write_json,
    write_table,
)
from polymm.descriptors import DESCRIPTOR_NAMES, INTEGER_FIELDS, DescriptorVector, compute_all
from polymm.properties import PROPERTIES, formats_with_units

MANIFEST = "manifest.json"


class ConfigError(ValueError):
    code = "ConfigError"


class StageInputMissing(FileNotFoundError):
    code = "StageInputMissing"


# configuration


@dataclass(frozen=True)
class SourceConfig:
    name: str
    path: Path
    # path as written in the config file; recorded in manifests
    spec: str
    schema: CsvSchema


@dataclass(frozen=True)
class PipelineConfig:
    sources: tuple[SourceConfig, ...] = ()
    seed: int = 0
    ratio: float = 0.9
    img_size: int = 1120
    png: bool = True
    templates: Path | None = None
    units: dict[str, str] = field(default_factory=dict)
    models: tuple[str, ...] = ("linr", "mlp")
    mlp: dict[str, float] = field(default_factory=dict)
    lora: dict[str, float] = field(default_factory=dict)
    output: Path = Path("out")

    @classmethod
    def from_file(cls, path: str | Path) -> PipelineConfig:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {path} not found")
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str  # property names are case sensitive
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
        return cls.from_parser(parser, path.parent)

    @classmethod
    def from_parser(cls, parser: configparser.ConfigParser, base: Path) -> PipelineConfig:
        known = {"pipeline", "units", "mlp", "lora"}
        for section in parser.sections():
            if section not in known and not section.startswith("source:"):
                raise ConfigError(f"unknown section [{section}]")
        p = parser["pipeline"] if parser.has_section("pipeline") else {}
        try:
            seed = int(p.get("seed", "0"))
            ratio = float(p.get("ratio", "0.9"))
            img_size = int(p.get("img_size", "1120"))
            png = parser.getboolean("pipeline", "png", fallback=True) if parser.has_section("pipeline") else True
        except ValueError as exc:
            raise ConfigError(f"[pipeline]: {exc}") from exc
        if img_size < 16:
            raise ConfigError("img_size must be at least 16")
        sources = []
        for section in parser.sections():
            if not section.startswith("source:"):
                continue
            name = section.split(":", 1)[1].strip()
            if name not in SOURCES:
                raise ConfigError(f"[{section}]: source must be one of {SOURCES}")
            s = parser[section]
            if "path" not in s:
                raise ConfigError(f"[{section}] lacks 'path'")
            default = DEFAULT_SCHEMAS.get(name)
            if "columns" in s:
                columns = {}
                for item in s["columns"].split(","):
                    if "=" not in item:
                        raise ConfigError(f"[{section}] columns entry {item!r} is not property=column")
                    prop, col = (x.strip() for x in item.split("=", 1))
                    if prop not in PROPERTIES:
                        raise ConfigError(f"[{section}] unknown property {prop!r}")
                    columns[prop] = col
            elif default is not None:
                columns = dict(default.properties)
            else:
                raise ConfigError(f"[{section}] needs 'columns'")
            schema = CsvSchema(columns, name, s.get("smiles_column", "SMILES"))
            sources.append(SourceConfig(name, (base / s["path"]).resolve(), s["path"], schema))
        names = [s.name for s in sources]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate source sections")
        if sources and names[0] != "main":
            raise ConfigError("the first source section must be [source:main]")
        order = p.get("merge_order")
        if order:
            wanted = [x.strip() for x in order.split(",") if x.strip()]
            if sorted(wanted) != sorted(names[1:]):
                raise ConfigError("merge_order must list every supplementary source exactly once")
            by_name = {s.name: s for s in sources}
            sources = [by_name["main"], *(by_name[n] for n in wanted)]
        units = dict(parser["units"]) if parser.has_section("units") else {}
        for prop in units:
            if prop not in PROPERTIES:
                raise ConfigError(f"[units] unknown property {prop!r}")
        models = tuple(x.strip() for x in p.get("models", "linr, mlp").split(",") if x.strip())
        for m in models:
            if m not in ("linr", "mlp"):
                raise ConfigError(f"unknown model {m!r}")
        templates = p.get("templates")

        def numbers(section: str) -> dict[str, float]:
            if not parser.has_section(section):
                return {}
            try:
                return {k: float(v) for k, v in parser[section].items()}
            except ValueError as exc:
                raise ConfigError(f"[{section}]: {exc}") from exc

        return cls(
            sources=tuple(sources),
            seed=seed,
            ratio=ratio,
            img_size=img_size,
            png=png,
            templates=(base / templates).resolve() if templates else None,
            units=units,
            models=models,
            mlp=numbers("mlp"),
            lora=numbers("lora"),
            output=(base / p.get("output", "out")).resolve(),
        )

    def summary(self) -> dict[str, object]:
        """Serializable view without machine-specific paths."""
        return {
            "sources": [
                {"name": s.name, "path": s.spec, "smiles_column": s.schema.smiles_column,
                 "columns": dict(s.schema.properties)}
                for s in self.sources
            ],
            "seed": self.seed,
            "ratio": self.ratio,
            "img_size": self.img_size,
            "png": self.png,
            "templates": self.templates.name if self.templates else None,
            "units": self.units,
            "models": list(self.models),
            "mlp": self.mlp,
            "lora": self.lora,
        }


# manifests


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _listing(directory: Path) -> dict[str, str]:
    return {
        p.relative_to(directory).as_posix(): sha256_file(p)
        for p in sorted(directory.rglob("*"))
        if p.is_file() and p.name != MANIFEST
    }


@dataclass
class Context:
    config: PipelineConfig
    out: Path
    log: Callable[[str], None] = print

    def stage_dir(self, stage: str) -> Path:
        return self.out / stage

    def need(self, rel: str) -> Path:
        path = self.out / rel
        if not path.exists():
            raise StageInputMissing(f"{rel} not found under {self.out}; run the producing stage first")
        return path


def run_stage(
    ctx: Context,
    stage: str,
    params: dict[str, object],
    inputs: dict[str, Path],
    body: Callable[[Path], dict[str, object] | None],
) -> bool:
    """Run ``body`` into a fresh stage directory unless its manifest is current.

    Returns ``True`` when the stage ran, ``False`` when it was skipped.
    """
    for label, path in inputs.items():
        if not path.exists():
            raise StageInputMissing(f"stage {stage}: input {label} ({path}) is missing")
    input_sums = {label: sha256_file(path) for label, path in sorted(inputs.items())}
    directory = ctx.stage_dir(stage)
    manifest_path = directory / MANIFEST
    if manifest_path.exists():
        try:
            old = json.loads(manifest_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            old = {}
        if (
            old.get("tool_version") == __version__
            and old.get("config") == params
            and old.get("inputs") == input_sums
            and old.get("outputs") == _listing(directory)
        ):
            ctx.log(f"[{stage}] up to date, skipped")
            return False
    if directory.exists():
        shutil.rmtree(directory)
    directory.mkdir(parents=True)
    summary = body(directory) or {}
    manifest = {
        "stage": stage,
        "tool_version": __version__,
        "config": params,
        "inputs": input_sums,
        "outputs": _listing(directory),
        "summary": summary,
    }
    manifest_path.write_text(json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    ctx.log(f"[{stage}] done: {json.dumps(summary, ensure_ascii=False)}")
    return True


# descriptor table io


def write_descriptor_table(rows: Sequence[tuple[str, DescriptorVector]], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("canonical_psmiles", *DESCRIPTOR_NAMES, "errors"))
        for key, vec in rows:
            cells = []
            for name in DESCRIPTOR_NAMES:
                v = vec[name]
                cells.append("" if v is None else (str(int(v)) if name in INTEGER_FIELDS else repr(float(v))))
            w.writerow((key, *cells, "; ".join(f"{k}: {e}" for k, e in vec.errors.items())))


def read_descriptor_table(path: Path) -> dict[str, DescriptorVector]:
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            values: dict[str, float | int | None] = {}
            errors = {}
            for name in DESCRIPTOR_NAMES:
                cell = row[name]
                if cell == "":
                    values[name] = None
                    errors[name] = "missing"
                else:
                    values[name] = int(cell) if name in INTEGER_FIELDS else float(cell)
            out[row["canonical_psmiles"]] = DescriptorVector(values, errors)
    return out


# stages


def stage_ingest(ctx: Context) -> None:
    cfg = ctx.config
    if not cfg.sources:
        raise ConfigError("no [source:...] sections configured")
    inputs = {f"source:{s.name}:{s.spec}": s.path for s in cfg.sources}

    def body(d: Path) -> dict[str, object]:
        summary = {}
        for s in cfg.sources:
            result = ingest_csv(s.path, s.schema)
            write_table(result.records, d / f"{s.name}.csv")
            write_failures(result.failures, d / f"{s.name}.failures.csv")
            summary[s.name] = {
                "records": len(result.records),
                "failures": len(result.failures),
                "rows_without_values": len(result.empty_rows),
                "flagged_rows": len(result.flagged_rows),
            }
        write_json(summary, d / "report.json")
        return summary

    run_stage(ctx, "ingest", {"sources": cfg.summary()["sources"]}, inputs, body)


def stage_merge(ctx: Context) -> None:
    cfg = ctx.config
    inputs = {f"ingest/{s.name}.csv": ctx.need(f"ingest/{s.name}.csv") for s in cfg.sources}

    def body(d: Path) -> dict[str, object]:
        tables = [read_table(ctx.out / f"ingest/{s.name}.csv") for s in cfg.sources]
        result = merge_sequential(tables[0], tables[1:])
        write_table(result.table, d / "merged.csv")
        write_json(
            {
                "order": [s.name for s in cfg.sources],
                "removed_as_duplicates": dict(zip([s.name for s in cfg.sources[1:]], result.removed)),
                "conflicts": [
                    {"key": c.key, "property": c.property, "kept": c.kept, "dropped": c.dropped, "source": c.source}
                    for c in result.conflicts
                ],
            },
            d / "report.json",
        )
        return {"records": len(result.table), "conflicts": len(result.conflicts)}

    run_stage(ctx, "merge", {"order": [s.name for s in cfg.sources]}, inputs, body)


def stage_stats(ctx: Context) -> None:
    inputs = {"merge/merged.csv": ctx.need("merge/merged.csv")}

    def body(d: Path) -> dict[str, object]:
        report = stats_report(read_table(inputs["merge/merged.csv"]))
        write_json(report, d / "stats.json")
        return {"records": report["records"]}

    run_stage(ctx, "stats", {}, inputs, body)


def stage_split(ctx: Context) -> None:
    cfg = ctx.config
    inputs = {"merge/merged.csv": ctx.need("merge/merged.csv")}

    def body(d: Path) -> dict[str, object]:
        s = split(read_table(inputs["merge/merged.csv"]), cfg.ratio, cfg.seed)
        write_json(split_manifest(s), d / "split.json")
        return {"train": len(s.train), "test": len(s.test)}

    run_stage(ctx, "split", {"seed": cfg.seed, "ratio": cfg.ratio}, inputs, body)


def stage_descriptors(ctx: Context) -> None:
    inputs = {"merge/merged.csv": ctx.need("merge/merged.csv")}

    def body(d: Path) -> dict[str, object]:
        rows = []
        for r in read_table(inputs["merge/merged.csv"]):
            rows.append((r.key, compute_all(parse(r.key))))
        write_descriptor_table(rows, d / "descriptors.csv")
        incomplete = sum(1 for _, v in rows if not v.complete)
        return {"molecules": len(rows), "incomplete": incomplete}

    run_stage(ctx, "descriptors", {"names": list(DESCRIPTOR_NAMES)}, inputs, body)


def stage_depict(ctx: Context) -> None:
    from polymm.depict import depict

    cfg = ctx.config
    inputs = {"merge/merged.csv": ctx.need("merge/merged.csv")}

    def body(d: Path) -> dict[str, object]:
        overflow = []
        n = 0
        for r in read_table(inputs["merge/merged.csv"]):
            report = depict(r.key, d, size=cfg.img_size, png=cfg.png)
            n += 1
            if report["overflow"]:
                overflow.append(r.key)
        write_json({"images": n, "overlapping_layouts": overflow}, d / "report.json")
        return {"images": n, "overlapping_layouts": len(overflow)}

    run_stage(ctx, "depict", {"img_size": cfg.img_size, "png": cfg.png}, inputs, body)


def _image_ref(png: bool) -> Callable[[str], str]:
    from polymm.depict import image_stem

    suffix = "png" if png else "svg"
    return lambda key: f"depict/{image_stem(key)}.{suffix}"


def stage_instructions(ctx: Context) -> None:
    from polymm.instructgen import PromptTemplateBank, decompose, emit_jsonl, render_all

    cfg = ctx.config
    inputs = {
        "merge/merged.csv": ctx.need("merge/merged.csv"),
        "split/split.json": ctx.need("split/split.json"),
        "descriptors/descriptors.csv": ctx.need("descriptors/descriptors.csv"),
    }
    if cfg.templates is not None:
        inputs["templates"] = cfg.templates
    # reference the images the depict stage actually wrote
    depict_manifest = ctx.out / "depict" / MANIFEST
    png = cfg.png
    if depict_manifest.exists():
        inputs["depict/manifest.json"] = depict_manifest
        png = bool(json.loads(depict_manifest.read_text(encoding="utf-8"))["config"]["png"])

    def body(d: Path) -> dict[str, object]:
        bank = PromptTemplateBank.load(cfg.templates)
        formats = formats_with_units(cfg.units)
        table = read_table(inputs["merge/merged.csv"])
        manifest = read_split_manifest(inputs["split/split.json"])
        s = apply_split(table, manifest["train"], manifest["test"], manifest["seed"], manifest["ratio"])
        desc = read_descriptor_table(inputs["descriptors/descriptors.csv"])
        image_ref = _image_ref(png)
        summary: dict[str, object] = {}
        skipped_all = []
        test_keys = {r.key for r in s.test}
        for label, records in (("train", s.train), ("test", s.test)):
            samples = decompose(records, label)
            if label == "train" and any(x.canonical_psmiles in test_keys for x in samples):
                raise DatasetError("a test polymer appears in the train samples")
            pairs, skipped = render_all(samples, bank, cfg.seed, desc.__getitem__, image_ref, formats)
            emit_jsonl(pairs, d / f"{label}.jsonl")
            skipped_all += [{"key": x.canonical_psmiles, "property": x.property, "reason": x.reason, "split": label}
                            for x in skipped]
            summary[label] = {"samples": len(samples), "pairs": len(pairs), "skipped": len(skipped)}
        write_json(skipped_all, d / "skipped.json")
        return summary

    run_stage(ctx, "instructions", {"seed": cfg.seed, "units": cfg.units,
                                    "templates": cfg.templates.name if cfg.templates else "bundled",
                                    "png": png}, inputs, body)


def _mlp_config(cfg: PipelineConfig):
    from polymm.baselines import MlpConfig

    base = MlpConfig(seed=cfg.seed)
    updates = {}
    for key, value in cfg.mlp.items():
        if key == "hidden_units":
            updates["hidden"] = (int(value), int(value))
        elif key in ("epochs", "batch_size", "seed"):
            updates[key] = int(value)
        elif key in ("learning_rate", "momentum"):
            updates[key] = float(value)
        else:
            raise ConfigError(f"[mlp] unknown key {key!r}")
    return replace(base, **updates)


def stage_baseline(ctx: Context, model: str, split_path: Path | None = None) -> None:
    from polymm.baselines import build_task, descriptor_matrix, evaluate_group, fit_linreg, fit_mlp, load_checkpoint, save_checkpoint
    from polymm.metrics import write_predictions

    cfg = ctx.config
    if model not in ("linr", "mlp"):
        raise ConfigError(f"unknown model {model!r}")
    inputs = {
        "merge/merged.csv": ctx.need("merge/merged.csv"),
        "split/split.json": split_path or ctx.need("split/split.json"),
        "descriptors/descriptors.csv": ctx.need("descriptors/descriptors.csv"),
    }
    mlp_cfg = _mlp_config(cfg) if model == "mlp" else None

    def body(d: Path) -> dict[str, object]:
        table = read_table(inputs["merge/merged.csv"])
        manifest = read_split_manifest(inputs["split/split.json"])
        s = apply_split(table, manifest["train"], manifest["test"], manifest["seed"], manifest["ratio"])
        desc = read_descriptor_table(inputs["descriptors/descriptors.csv"])
        models = {}
        summary: dict[str, object] = {}
        for prop in PROPERTIES:
            task = build_task(prop, s.train, s.test, desc.__getitem__)
            if len(task.y_train) == 0:
                summary[prop] = {"trained": False, "reason": "no training rows"}
                continue
            fitted = fit_linreg(task.X_train, task.y_train) if model == "linr" else fit_mlp(
                task.X_train, task.y_train, mlp_cfg)
            path = d / f"{prop}.ckpt"
            save_checkpoint(fitted, path, prop)
            models[prop], _ = load_checkpoint(path)
            summary[prop] = {"trained": True, "n_train": int(len(task.y_train)), "n_test": int(len(task.y_test))}
        usable = [r for r in s.test if desc[r.key].complete]
        X = descriptor_matrix([desc[r.key] for r in usable])
        columns = {p: m.predict(X) for p, m in models.items()}
        preds = {r.key: {p: float(columns[p][i]) for p in r.properties if p in columns}
                 for i, r in enumerate(usable)}
        write_predictions(preds, d / "predictions.csv")
        report = evaluate_group(s.test, models, desc.__getitem__, label=f"{model.upper()} + descriptors")
        write_json(report.to_dict(), d / "report.json")
        summary["wMAE"] = report.wmae
        return summary

    params: dict[str, object] = {"model": model, "seed": cfg.seed}
    if mlp_cfg is not None:
        params["mlp"] = {k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(mlp_cfg).items()}
    run_stage(ctx, f"baseline/{model}", params, inputs, body)


def stage_evaluate(ctx: Context, predictions: Path, label: str, name: str, split_path: Path | None = None) -> None:
    from polymm.metrics import evaluate, read_predictions

    inputs = {
        "merge/merged.csv": ctx.need("merge/merged.csv"),
        "split/split.json": split_path or ctx.need("split/split.json"),
        "predictions": predictions,
    }

    def body(d: Path) -> dict[str, object]:
        table = read_table(inputs["merge/merged.csv"])
        manifest = read_split_manifest(inputs["split/split.json"])
        s = apply_split(table, manifest["train"], manifest["test"], manifest["seed"], manifest["ratio"])
        preds = read_predictions(predictions)
        rows_p, rows_t, missing = [], [], 0
        for r in s.test:
            if r.key not in preds:
                missing += 1
                continue
            rows_p.append(preds[r.key])
            rows_t.append(dict(r.properties))
        report = evaluate(rows_p, rows_t, label)
        if missing:
            report.notes.append(f"{missing} test polymer(s) without predictions")
        write_json(report.to_dict(), d / "report.json")
        return {"wMAE": report.wmae, "polymers": len(rows_t)}

    run_stage(ctx, f"evaluate/{name}", {"label": label}, inputs, body)


def stage_lora(ctx: Context, overrides: dict[str, float] | None = None) -> None:
    from polymm.lora import LoraAdapter, ToyConfig, grad_check, param_count, quadratic_loss, save_adapter, toy_finetune

    cfg = ctx.config
    values = {**cfg.lora, **(overrides or {})}
    ints = {"rank", "steps", "d_model", "seq_len", "n_sequences", "target_rank", "seed"}
    floats = {"alpha", "learning_rate", "weight_decay", "target_scale"}
    updates: dict[str, object] = {}
    for key, value in values.items():
        if key in ints:
            updates[key] = int(value)
        elif key in floats:
            updates[key] = float(value)
        else:
            raise ConfigError(f"[lora] unknown key {key!r}")
    toy = replace(ToyConfig(), **updates)

    def body(d: Path) -> dict[str, object]:
        full = 4096 * 4096
        lora_params = param_count(4096, 4096, 8)
        rng = np.random.default_rng(toy.seed)
        probe = LoraAdapter(rng.normal(size=(8, 8)), rng.normal(size=(2, 8)), rng.normal(size=(8, 2)), 2.0)
        x = rng.normal(size=(4, 8))
        err = grad_check(probe, quadratic_loss(rng.normal(size=(4, 8))), x, n_entries=20)
        trace, (q, v) = toy_finetune(toy)
        save_adapter(q, d / "adapter_q.bin")
        save_adapter(v, d / "adapter_v.bin")
        out = {
            "param_count_4096x4096_r8": lora_params,
            "full_parameters": full,
            "reduction_ratio": full / lora_params,
            "grad_check_max_relative_error": err,
            "trace": trace.to_dict(),
        }
        write_json(out, d / "trace.json")
        return {"initial_loss": trace.losses[0], "final_loss": trace.losses[-1], "frozen_intact": trace.frozen_intact}

    run_stage(ctx, "lora", {k: v for k, v in vars(toy).items()}, {}, body)


def run_all(ctx: Context) -> None:
    stage_ingest(ctx)
    stage_merge(ctx)
    stage_stats(ctx)
    stage_split(ctx)
    stage_descriptors(ctx)
    stage_depict(ctx)
    stage_instructions(ctx)
    for model in ctx.config.models:
        stage_baseline(ctx, model)
        stage_evaluate(ctx, ctx.out / f"baseline/{model}/predictions.csv", f"{model.upper()} + descriptors", model)
    stage_lora(ctx)


# argument parsing


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="pipeline config file (INI)")
    common.add_argument("--out", type=Path, help="output root directory (overrides the config)")
    common.add_argument("--seed", type=int, help="global seed (overrides the config)")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="polymm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"polymm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("ingest", "canonicalize every configured source CSV"),
        ("merge", "deduplicate and merge the sources in order"),
        ("stats", "missing-value statistics of the merged table"),
        ("descriptors", "compute the descriptor table"),
        ("run", "run every stage in order"),
    ):
        sub.add_parser(name, parents=[common], help=help_text)
    p = sub.add_parser("split", parents=[common], help="90/10 polymer-level split")
    p.add_argument("--ratio", type=float)
    p = sub.add_parser("depict", parents=[common], help="render structure images")
    p.add_argument("--img-size", type=int)
    p.add_argument("--no-png", action="store_true", help="write SVG only")
    p = sub.add_parser("gen-instructions", parents=[common], help="render instruction pairs to JSONL")
    p.add_argument("--templates", type=Path)
    p = sub.add_parser("baseline", parents=[common], help="descriptor baselines")
    p.add_argument("action", choices=["train"])
    p.add_argument("--model", choices=["linr", "mlp"], required=True)
    p.add_argument("--split", type=Path, help="split manifest (default: split/split.json)")
    p = sub.add_parser("evaluate", parents=[common], help="score a predictions CSV (key,property,value)")
    p.add_argument("--predictions", type=Path, required=True)
    p.add_argument("--split", type=Path)
    p.add_argument("--label", default="predictions")
    p.add_argument("--name", default="custom", help="report subdirectory under evaluate/")
    for name in ("lora-demo", "lora"):
        p = sub.add_parser(name, parents=[common], help="LoRA toy demonstration")
        if name == "lora":
            p.add_argument("action", choices=["demo"])
        p.add_argument("--rank", type=int)
        p.add_argument("--alpha", type=float)
        p.add_argument("--steps", type=int)
        p.add_argument("--learning-rate", type=float)
    return parser


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    updates: dict[str, object] = {}
    if args.out is not None:
        updates["output"] = args.out.resolve()
    if args.seed is not None:
        updates["seed"] = args.seed
    if getattr(args, "ratio", None) is not None:
        updates["ratio"] = args.ratio
    if getattr(args, "img_size", None) is not None:
        updates["img_size"] = args.img_size
    if getattr(args, "no_png", False):
        updates["png"] = False
    if getattr(args, "templates", None) is not None:
        updates["templates"] = args.templates.resolve()
    return replace(cfg, **updates)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        ctx = Context(cfg, cfg.output)
        ctx.out.mkdir(parents=True, exist_ok=True)
        command = args.command
        if command == "ingest":
            stage_ingest(ctx)
        elif command == "merge":
            stage_merge(ctx)
        elif command == "stats":
            stage_stats(ctx)
            print((ctx.out / "stats/stats.json").read_text(encoding="utf-8"), end="")
        elif command == "split":
            stage_split(ctx)
        elif command == "descriptors":
            stage_descriptors(ctx)
        elif command == "depict":
            stage_depict(ctx)
        elif command == "gen-instructions":
            stage_instructions(ctx)
        elif command == "baseline":
            stage_baseline(ctx, args.model, args.split.resolve() if args.split else None)
        elif command == "evaluate":
            stage_evaluate(ctx, args.predictions.resolve(), args.label, args.name,
                           args.split.resolve() if args.split else None)
        elif command in ("lora-demo", "lora"):
            overrides = {k: v for k, v in (("rank", args.rank), ("alpha", args.alpha), ("steps", args.steps),
                                           ("learning_rate", args.learning_rate)) if v is not None}
            stage_lora(ctx, overrides)
        elif command == "run":
            run_all(ctx)
    except (ConfigError, StageInputMissing) as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 2
    except (DatasetError, ChemError, ValueError, OSError) as exc:
        code = getattr(exc, "code", type(exc).__name__)
        print(f"error: {code}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
