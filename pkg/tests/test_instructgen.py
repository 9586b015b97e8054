from __future__ import annotations

import json
import re
from functools import lru_cache

import pytest

from helpers import corpus
from polymm.canon import canonicalize
from polymm.chem import parse
from polymm.dataset import PolymerRecord, split
from polymm.descriptors import DESCRIPTOR_NAMES, DescriptorVector, compute_all
from polymm.instructgen import (
    BANK_SIZE,
    IMAGE_TOKEN,
    PLACEHOLDERS,
    InstructionPair,
    MissingDescriptor,
    PromptTemplateBank,
    Sample,
    TemplateBankError,
    choose_templates,
    decompose,
    emit_jsonl,
    read_jsonl,
    render,
    render_all,
)
from polymm.properties import DEFAULT_FORMATS, PROPERTIES, formats_with_units

POLYMERS = [canonicalize(s) for s in corpus() if s.count("*") == 2][:40]
BANK = PromptTemplateBank.load()
ANSWER_RE = re.compile(r"^(Tg|FFV|Tc|Density|Rg):-?\d+\.\d+( \S+)?$")


@lru_cache(maxsize=None)
def descriptors(key: str) -> DescriptorVector:
    return compute_all(parse(key))


def image_ref(key: str) -> str:
    return f"images/{key}.png"


def sample(i: int = 0, prop: str = "Density", value: float = 0.9431) -> Sample:
    return Sample(POLYMERS[i], prop, value, "train")


class TestBank:
    def test_bundled_counts(self):
        assert len(BANK.prefixes) == BANK_SIZE == 20 and len(BANK.bodies) == 20

    def test_bodies_have_all_placeholders(self):
        for body in BANK.bodies:
            for name in PLACEHOLDERS:
                assert body.count("{" + name + "}") == 1
            assert "Predict the" in body

    def test_rejects_short_bank(self):
        with pytest.raises(TemplateBankError):
            PromptTemplateBank(BANK.prefixes[:19], BANK.bodies)

    def test_rejects_missing_placeholder(self):
        bodies = (BANK.bodies[0].replace("{unit}", "units"),) + BANK.bodies[1:]
        with pytest.raises(TemplateBankError):
            PromptTemplateBank(BANK.prefixes, bodies)

    def test_parse_round_trip(self, tmp_path):
        text = "[prefixes]\n" + "\n".join(BANK.prefixes) + "\n\n# note\n[bodies]\n" + "\n".join(BANK.bodies) + "\n"
        path = tmp_path / "bank.txt"
        path.write_text(text)
        assert PromptTemplateBank.load(path) == BANK
        with pytest.raises(TemplateBankError):
            PromptTemplateBank.parse("[other]\nx\n")


class TestDecompose:
    def test_two_properties(self):
        samples = decompose([PolymerRecord(POLYMERS[0], {"Tg": 100.0, "Tc": 0.2})], "train")
        assert [(s.property, s.canonical_psmiles) for s in samples] == [("Tg", POLYMERS[0]), ("Tc", POLYMERS[0])]

    def test_count_conservation(self):
        records = [PolymerRecord(k, {p: 1.0 for p in PROPERTIES[: 1 + i % 5]}) for i, k in enumerate(POLYMERS)]
        assert len(decompose(records, "train")) == sum(len(r.properties) for r in records)


class TestRender:
    def test_deterministic(self):
        s = sample()
        a = render(s, BANK, 1, descriptors(s.canonical_psmiles), image_ref(s.canonical_psmiles))
        b = render(s, BANK, 1, descriptors(s.canonical_psmiles), image_ref(s.canonical_psmiles))
        assert a == b

    def test_prompt_contents(self):
        s = sample(3, "Tg", 123.45)
        pair = render(s, BANK, 0, descriptors(s.canonical_psmiles), image_ref(s.canonical_psmiles))
        assert "Predict the" in pair.prompt
        assert "Tg" in pair.prompt and "°C" in pair.prompt
        assert s.canonical_psmiles in pair.prompt and IMAGE_TOKEN in pair.prompt
        vec = descriptors(s.canonical_psmiles)
        for name in DESCRIPTOR_NAMES:
            assert f"{name}:{vec.format_value(name)}" in pair.prompt
        assert "{" not in pair.prompt
        assert pair.answer == "Tg:123.5 °C"

    def test_density_answer(self):
        s = sample()
        pair = render(s, BANK, 0, descriptors(s.canonical_psmiles), "x.png")
        assert pair.answer == "Density:0.9431 g/cm^3"

    @pytest.mark.parametrize("prop,value,answer", [
        ("FFV", 0.36512, "FFV:0.3651"),
        ("Tc", 0.25, "Tc:0.2500 W/(m·K)"),
        ("Rg", 12.345, "Rg:12.35 Å"),
    ])
    def test_answer_formats(self, prop, value, answer):
        assert DEFAULT_FORMATS[prop].answer(value) == answer
        assert ANSWER_RE.match(answer)

    def test_unit_table_override(self):
        formats = formats_with_units({"Tg": "K"})
        s = sample(0, "Tg", 300.0)
        pair = render(s, BANK, 0, descriptors(s.canonical_psmiles), "x.png", formats)
        assert pair.answer == "Tg:300.0 K" and " K" in pair.prompt

    def test_global_seed_changes_choice(self):
        picks = {choose_templates(POLYMERS[0], "Tg", seed) for seed in range(20)}
        assert len(picks) > 1

    def test_missing_descriptor_skipped(self):
        vec = descriptors(POLYMERS[0])
        broken = DescriptorVector({**vec.values, "BalabanJ": None}, {"BalabanJ": "TooSmall: x"})
        with pytest.raises(MissingDescriptor):
            render(sample(), BANK, 0, broken, "x.png")
        pairs, skipped = render_all([sample(), sample(1)], BANK, 0,
                                    lambda k: broken if k == POLYMERS[0] else descriptors(k), image_ref)
        assert len(pairs) == 1 and [s.canonical_psmiles for s in skipped] == [POLYMERS[0]]

    def test_template_coverage(self):
        prefixes, bodies = set(), set()
        for i in range(4000):
            p, b = choose_templates(POLYMERS[i % len(POLYMERS)], PROPERTIES[i % 5], i // len(POLYMERS))
            prefixes.add(p)
            bodies.add(b)
        assert prefixes == set(range(20)) and bodies == set(range(20))


class TestJsonl:
    def pairs(self, n: int) -> list[InstructionPair]:
        samples = [sample(i, "Tg", 100.0 + i) for i in range(n)]
        pairs, _ = render_all(samples, BANK, 0, descriptors, image_ref)
        return pairs

    def test_lines(self, tmp_path):
        path = tmp_path / "x.jsonl"
        assert emit_jsonl(self.pairs(3), path) == 3
        lines = path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 3
        for line in lines:
            assert list(json.loads(line)) == ["prompt", "image", "answer", "property", "split"]

    def test_empty(self, tmp_path):
        path = tmp_path / "x.jsonl"
        assert emit_jsonl([], path) == 0
        assert path.read_bytes() == b""

    def test_round_trip(self, tmp_path):
        path = tmp_path / "x.jsonl"
        pairs = self.pairs(5)
        emit_jsonl(pairs, path)
        assert read_jsonl(path) == pairs

    def test_unwritable(self, tmp_path):
        from polymm.instructgen import IoFailure

        with pytest.raises(IoFailure):
            emit_jsonl(self.pairs(1), tmp_path / "missing" / "x.jsonl")


def test_no_test_polymer_in_train_pairs():
    records = [PolymerRecord(k, {"Tg": float(i), "FFV": 0.3}) for i, k in enumerate(POLYMERS)]
    s = split(records, seed=5)
    train_pairs, _ = render_all(decompose(s.train, "train"), BANK, 0, descriptors, image_ref)
    test_keys = {r.key for r in s.test}
    train_keys = {pair.image.removeprefix("images/").removesuffix(".png") for pair in train_pairs}
    assert train_keys == {r.key for r in s.train}
    assert not train_keys & test_keys
