"""Sample invariants and the JSONL wire format."""

from __future__ import annotations

import json

import pytest

from editrec.boxes import BoundingBox
from editrec.samples import (
    ConceptAssociation,
    EditingSample,
    LossWeights,
    PerceivedObject,
    perception_report_from_dict,
    read_samples_jsonl,
    sample_from_dict,
    sample_to_dict,
    validate_sample,
    write_samples_jsonl,
)


def local_sample(**overrides):
    base = dict(
        image_ref="img_001",
        hint="halloween",
        scope="local",
        suggestion="add two bats above the pendant",
        target_box=BoundingBox(0.2, 0.1, 0.6, 0.4),
        edited_object="bats",
        provenance={"step": "unit-test"},
    )
    base.update(overrides)
    return EditingSample(**base)


class TestValidateSample:
    def test_wellformed_local(self):
        assert validate_sample(local_sample()) == []

    def test_wellformed_global(self):
        s = local_sample(scope="global", target_box=None)
        assert validate_sample(s) == []

    def test_local_missing_box(self):
        report = validate_sample(local_sample(target_box=None))
        assert len(report) == 1
        assert "requires a target_box" in report[0]

    def test_global_with_box(self):
        report = validate_sample(local_sample(scope="global"))
        assert len(report) == 1
        assert "must not carry" in report[0]

    def test_empty_suggestion(self):
        assert any("non-empty" in v for v in validate_sample(local_sample(suggestion="")))

    def test_reserved_literal_rejected(self):
        s = local_sample(suggestion="add ⟨EDIT⟩ here")
        assert any("reserved token" in v for v in validate_sample(s))


class TestJsonl:
    def test_key_order_and_rounding(self):
        s = local_sample(target_box=BoundingBox(0.123456789, 0.2, 0.987654321, 0.9))
        d = sample_to_dict(s)
        assert list(d) == ["image", "hint", "scope", "suggestion", "box", "object", "provenance"]
        assert d["box"] == [0.123457, 0.2, 0.987654, 0.9]

    def test_global_omits_box(self):
        d = sample_to_dict(local_sample(scope="global", target_box=None))
        assert "box" not in d

    def test_round_trip(self, tmp_path):
        samples = [local_sample(), local_sample(scope="global", target_box=None, hint="luxury")]
        path = tmp_path / "data.jsonl"
        write_samples_jsonl(samples, path)
        assert read_samples_jsonl(path) == samples

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="unknown sample keys"):
            sample_from_dict({"image": "a", "hint": "b", "scope": "global", "suggestion": "c", "extra": 1})

    def test_malformed_line_names_position(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"image": "a"}\n', encoding="utf-8")
        with pytest.raises(ValueError, match="bad.jsonl:1"):
            read_samples_jsonl(path)

    def test_bytes_deterministic(self, tmp_path):
        samples = [local_sample(), local_sample(hint="winter")]
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_samples_jsonl(samples, p1)
        write_samples_jsonl(samples, p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestSupportTypes:
    def test_concept_association_requires_both_fields(self):
        with pytest.raises(ValueError):
            ConceptAssociation(concept="", rationale="why")
        with pytest.raises(ValueError):
            ConceptAssociation(concept="a gold necklace", rationale="")

    def test_loss_weights_defaults(self):
        w = LossWeights()
        assert (w.lambda_txt, w.lambda_loc) == (1.0, 2.0)
        with pytest.raises(ValueError):
            LossWeights(lambda_txt=-0.1)

    def test_perceived_object_requires_tag(self):
        with pytest.raises(ValueError):
            PerceivedObject(tag="", box=BoundingBox(0, 0, 1, 1))

    def test_perception_report_parsing(self):
        d = {
            "global_caption": "a dog on grass",
            "objects": [{"tag": "dog", "box": [0.1, 0.1, 0.5, 0.6], "caption": "a corgi"}],
        }
        report = perception_report_from_dict(d)
        assert report.objects[0].tag == "dog"

    def test_perception_report_bad_box(self):
        d = {"global_caption": "x", "objects": [{"tag": "dog", "box": [0.5, 0.1, 0.5, 0.6]}]}
        with pytest.raises(ValueError, match="object 0"):
            perception_report_from_dict(d)
