"""Per-property instruction-tuning samples rendered from a template bank."""

from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from polymm.dataset import PolymerRecord
from polymm.descriptors import DESCRIPTOR_NAMES, DescriptorVector
from polymm.properties import DEFAULT_FORMATS, PROPERTIES, PropertyFormat

PLACEHOLDERS: tuple[str, ...] = ("image", "psmiles", "descriptors", "property", "unit")
BANK_SIZE = 20
IMAGE_TOKEN = "<image>"
_PLACEHOLDER_RE = re.compile(r"\{(" + "|".join(PLACEHOLDERS) + r")\}")


class TemplateBankError(ValueError):
    code = "TemplateBankError"


class MissingDescriptor(ValueError):
    code = "MissingDescriptor"


class IoFailure(OSError):
    code = "IoFailure"


@dataclass(frozen=True)
class PromptTemplateBank:
    prefixes: tuple[str, ...]
    bodies: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.prefixes) != BANK_SIZE or len(self.bodies) != BANK_SIZE:
            raise TemplateBankError(
                f"need {BANK_SIZE} prefixes and {BANK_SIZE} bodies, got {len(self.prefixes)} and {len(self.bodies)}"
            )
        for k, body in enumerate(self.bodies):
            for name in PLACEHOLDERS:
                count = body.count("{" + name + "}")
                if count != 1:
                    raise TemplateBankError(f"body {k} uses {{{name}}} {count} times")
            if "Predict the" not in body:
                raise TemplateBankError(f"body {k} lacks 'Predict the'")

    @classmethod
    def parse(cls, text: str) -> PromptTemplateBank:
        """Read the ``[prefixes]`` / ``[bodies]`` plain-text format."""
        sections: dict[str, list[str]] = {}
        current = None
        for line in text.splitlines():
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if stripped.startswith("[") and stripped.endswith("]"):
                current = stripped[1:-1].strip()
                if current not in ("prefixes", "bodies"):
                    raise TemplateBankError(f"unknown section [{current}]")
                sections.setdefault(current, [])
                continue
            if current is None:
                raise TemplateBankError("template text outside a section")
            sections[current].append(stripped)
        return cls(tuple(sections.get("prefixes", ())), tuple(sections.get("bodies", ())))

    @classmethod
    def load(cls, path: str | os.PathLike | None = None) -> PromptTemplateBank:
        """Load a bank file; ``None`` selects the bundled bank."""
        if path is None:
            text = resources.files("polymm").joinpath("data/templates.txt").read_text(encoding="utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        return cls.parse(text)


@dataclass(frozen=True)
class Sample:
    """One (polymer, property) prediction target."""

    canonical_psmiles: str
    property: str
    value: float
    split: str


@dataclass(frozen=True)
class InstructionPair:
    prompt: str
    image: str
    answer: str
    property: str
    split: str

    def to_json(self) -> str:
        return json.dumps(
            {"prompt": self.prompt, "image": self.image, "answer": self.answer, "property": self.property,
             "split": self.split},
            ensure_ascii=False,
        )


def decompose(records: Iterable[PolymerRecord], split: str) -> list[Sample]:
    """One sample per available property of each record, in record then property order."""
    return [
        Sample(r.canonical_psmiles, prop, r.properties[prop], split)
        for r in records
        for prop in PROPERTIES
        if prop in r.properties
    ]


def sample_seed(canonical: str, prop: str, global_seed: int) -> int:
    digest = hashlib.sha256(f"{canonical}\x1f{prop}\x1f{global_seed}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def choose_templates(canonical: str, prop: str, global_seed: int) -> tuple[int, int]:
    """Independent uniform prefix and body indices for one sample."""
    rng = np.random.default_rng(sample_seed(canonical, prop, global_seed))
    prefix, body = rng.integers(0, BANK_SIZE, size=2)
    return int(prefix), int(body)


def format_descriptors(vector: DescriptorVector) -> str:
    """``name:value`` items for all descriptors, comma separated.

    Raises:
        MissingDescriptor: some descriptor could not be computed.
    """
    missing = [n for n in DESCRIPTOR_NAMES if vector[n] is None]
    if missing:
        raise MissingDescriptor(f"descriptor(s) unavailable: {', '.join(missing)}")
    return ", ".join(f"{n}:{vector.format_value(n)}" for n in DESCRIPTOR_NAMES)


def render(
    sample: Sample,
    bank: PromptTemplateBank,
    rng_seed: int,
    descriptors: DescriptorVector,
    image_ref: str,
    formats: Mapping[str, PropertyFormat] = DEFAULT_FORMATS,
) -> InstructionPair:
    """Fill a randomly chosen prefix and body for one sample."""
    fmt = formats[sample.property]
    values = {
        "image": IMAGE_TOKEN,
        "psmiles": sample.canonical_psmiles,
        "descriptors": format_descriptors(descriptors),
        "property": sample.property,
        "unit": fmt.prompt_text,
    }
    p, b = choose_templates(sample.canonical_psmiles, sample.property, rng_seed)
    body = _PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], bank.bodies[b])
    prompt = f"{bank.prefixes[p]}\n{body}"
    return InstructionPair(prompt, image_ref, fmt.answer(sample.value), sample.property, sample.split)


@dataclass(frozen=True)
class SkippedSample:
    canonical_psmiles: str
    property: str
    reason: str


def render_all(
    samples: Sequence[Sample],
    bank: PromptTemplateBank,
    rng_seed: int,
    descriptors: Callable[[str], DescriptorVector],
    image_ref: Callable[[str], str],
    formats: Mapping[str, PropertyFormat] = DEFAULT_FORMATS,
) -> tuple[list[InstructionPair], list[SkippedSample]]:
    """Render every sample, collecting the ones without a full descriptor vector."""
    pairs, skipped = [], []
    for s in samples:
        try:
            pairs.append(render(s, bank, rng_seed, descriptors(s.canonical_psmiles), image_ref(s.canonical_psmiles),
                                formats))
        except MissingDescriptor as exc:
            skipped.append(SkippedSample(s.canonical_psmiles, s.property, str(exc)))
    return pairs, skipped


def emit_jsonl(pairs: Iterable[InstructionPair], path: str | os.PathLike) -> int:
    """Write one JSON object per line; returns the number of lines."""
    n = 0
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for pair in pairs:
                fh.write(pair.to_json() + "\n")
                n += 1
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return n


def read_jsonl(path: str | os.PathLike) -> list[InstructionPair]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                d = json.loads(line)
                out.append(InstructionPair(d["prompt"], d["image"], d["answer"], d["property"], d["split"]))
    return out
