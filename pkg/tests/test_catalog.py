import dataclasses
import json

import pytest

from covol.catalog import (
    Catalog,
    EmptyCatalog,
    NoCompatibleObjects,
    ParseError,
    PromptObject,
    SchemaViolationError,
    build_prompt_sequence,
    load_catalog,
    serialize_catalog,
    validate_catalog,
)
from covol.session import SessionConfig

APPLE = {
    "id": "apple",
    "image": "apple.png",
    "sound": None,
    "labels": ["apple", "apples", "fruit"],
    "attributes": {"color": ["red"], "shape": ["round"], "category": ["fruit"]},
    "prompt_text": {"en": "What is this?"},
}


def write_catalog(tmp_path, objects, **top):
    doc = {"version": 1, "language": "en", "objects": objects, **top}
    path = tmp_path / "en.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def test_load_apple_catalog(tmp_path):
    catalog = load_catalog(write_catalog(tmp_path, [APPLE]))
    assert len(catalog.objects) == 1
    obj = catalog.objects[0]
    assert obj.canonical_label == "apple"
    assert obj.labels == ("apple", "apples", "fruit")
    assert obj.attributes["color"] == ("red",)


def test_load_empty_catalog_is_valid(tmp_path):
    catalog = load_catalog(write_catalog(tmp_path, []))
    assert catalog.objects == ()


def test_duplicate_ids_rejected(tmp_path):
    with pytest.raises(SchemaViolationError) as exc:
        load_catalog(write_catalog(tmp_path, [APPLE, APPLE]))
    assert any("duplicate" in v.rule for v in exc.value.violations)


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        load_catalog("/nonexistent/catalog.json")


def test_parse_error_carries_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"version": 1,\n  "oops"\n}', encoding="utf-8")
    with pytest.raises(ParseError) as exc:
        load_catalog(path)
    assert exc.value.line is not None


def test_unknown_top_level_field_rejected(tmp_path):
    with pytest.raises(SchemaViolationError):
        load_catalog(write_catalog(tmp_path, [APPLE], extra_field=1))


def test_unknown_object_field_rejected(tmp_path):
    obj = dict(APPLE, typo_field="x")
    with pytest.raises(SchemaViolationError):
        load_catalog(write_catalog(tmp_path, [obj]))


def test_empty_labels_violation():
    catalog = Catalog(language="en", objects=(PromptObject(id="apple", image_ref="a.png", labels=()),))
    violations = [v for v in validate_catalog(catalog) if v.severity == "error"]
    assert any(v.object_id == "apple" and v.field == "labels" and v.rule == "non-empty" for v in violations)


def test_missing_prompt_text_for_language():
    obj = PromptObject(id="a", image_ref="a.png", labels=("a",), prompt_text={"de": "Was?"})
    violations = validate_catalog(Catalog(language="en", objects=(obj,)))
    assert any(v.field == "prompt_text" and v.severity == "error" for v in violations)


def test_missing_asset_is_warning_not_error(tmp_path):
    path = write_catalog(tmp_path, [APPLE])
    catalog = load_catalog(path)  # loads fine despite missing apple.png
    violations = validate_catalog(catalog)
    warnings = [v for v in violations if v.severity == "warning"]
    assert any(v.field == "image" and "apple.png" in v.rule for v in warnings)
    assert not [v for v in violations if v.severity == "error"]


def test_valid_catalog_with_assets_no_violations(tmp_path):
    (tmp_path / "apple.png").write_bytes(b"\x89PNG")
    catalog = load_catalog(write_catalog(tmp_path, [APPLE]))
    assert validate_catalog(catalog) == []


def test_round_trip(tmp_path, en_catalog):
    out = tmp_path / "copy.json"
    out.write_text(serialize_catalog(en_catalog), encoding="utf-8")
    reloaded = load_catalog(out)
    assert reloaded == en_catalog  # base_dir excluded from comparison


def test_validate_flags_exactly_corrupted_fields(en_catalog):
    assert [v for v in validate_catalog(en_catalog) if v.severity == "error"] == []
    for corruption, field in [
        (lambda o: dataclasses.replace(o, labels=()), "labels"),
        (lambda o: dataclasses.replace(o, labels=("ok", "!!!")), "labels"),
        (lambda o: dataclasses.replace(o, attributes={"color": ()}), "attributes.color"),
        (lambda o: dataclasses.replace(o, prompt_text={}), "prompt_text"),
    ]:
        objects = (corruption(en_catalog.objects[0]),) + en_catalog.objects[1:]
        broken = dataclasses.replace(en_catalog, objects=objects)
        errors = [v for v in validate_catalog(broken) if v.severity == "error"]
        assert errors, f"corruption of {field} not caught"
        assert all(v.field == field for v in errors)


# --- prompt sequencing ----------------------------------------------------


def make_config(**kw):
    return SessionConfig(**kw)


def small_catalog(n):
    objects = tuple(
        PromptObject(id=f"obj{i}", image_ref=f"obj{i}.png", labels=(f"obj{i}",), prompt_text={"en": "What is this?"})
        for i in range(n)
    )
    return Catalog(language="en", objects=objects)


def test_sequence_is_permutation_when_sizes_match():
    catalog = small_catalog(3)
    tasks = build_prompt_sequence(catalog, make_config(prompts_per_session=3), seed=7)
    assert sorted(t.object_id for t in tasks) == ["obj0", "obj1", "obj2"]
    assert all(t.mode == "label" for t in tasks)


def test_zero_prompts_yields_empty():
    config = dataclasses.replace(make_config(), prompts_per_session=0)
    assert build_prompt_sequence(small_catalog(3), config, seed=1) == []


def test_single_object_repeats():
    tasks = build_prompt_sequence(small_catalog(1), make_config(prompts_per_session=4), seed=3)
    assert [t.object_id for t in tasks] == ["obj0"] * 4


def test_deterministic_in_seed():
    catalog = small_catalog(5)
    config = make_config(prompts_per_session=12)
    a = build_prompt_sequence(catalog, config, seed=42)
    b = build_prompt_sequence(catalog, config, seed=42)
    c = build_prompt_sequence(catalog, config, seed=43)
    assert a == b
    assert a != c  # overwhelmingly likely for 12 draws from 5 objects


def test_no_consecutive_repeats_over_many_seeds():
    catalog = small_catalog(3)
    config = make_config(prompts_per_session=11)
    for seed in range(1000):
        ids = [t.object_id for t in build_prompt_sequence(catalog, config, seed)]
        assert all(a != b for a, b in zip(ids, ids[1:])), f"seed {seed}: {ids}"


def test_empty_catalog_error():
    with pytest.raises(EmptyCatalog):
        build_prompt_sequence(Catalog(language="en", objects=()), make_config(), seed=1)


def test_no_compatible_objects():
    config = make_config(mode_weights={"label": 0.0, "attribute": 0.0, "sound": 1.0})
    with pytest.raises(NoCompatibleObjects):
        build_prompt_sequence(small_catalog(3), config, seed=1)


def test_attribute_mode_only_for_objects_defining_attributes(en_catalog):
    config = make_config(prompts_per_session=20, mode_weights={"label": 0.0, "attribute": 1.0, "sound": 0.0})
    tasks = build_prompt_sequence(en_catalog, config, seed=5)
    for task in tasks:
        assert task.mode == "attribute"
        obj = en_catalog.object_by_id(task.object_id)
        assert task.attribute_name in obj.attributes
        assert task.expected == obj.attributes[task.attribute_name]
        assert task.expected


def test_sound_mode_only_for_objects_with_sounds(en_catalog):
    config = make_config(prompts_per_session=20, mode_weights={"label": 0.0, "attribute": 0.0, "sound": 1.0})
    tasks = build_prompt_sequence(en_catalog, config, seed=5)
    for task in tasks:
        assert task.mode == "sound"
        assert en_catalog.object_by_id(task.object_id).sound_ref


def test_tasks_always_have_expected_answers(en_catalog):
    config = make_config(prompts_per_session=50, mode_weights={"label": 1.0, "attribute": 1.0, "sound": 1.0})
    for seed in range(20):
        for task in build_prompt_sequence(en_catalog, config, seed):
            assert task.expected
            assert task.display_prompt
