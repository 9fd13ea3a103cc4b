"""Catalogs of tactable objects: loading, validation, and prompt sequencing.

A catalog is a JSON file describing pictograms, their accepted labels
(synonyms), optional attributes and sounds, and per-language prompt text.
Catalogs are immutable after load and safe to share across sessions.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from covol.matching import normalize

CATALOG_SCHEMA_VERSION = 1

_OBJECT_KEYS = {"id", "image", "sound", "labels", "attributes", "prompt_text"}
_TOP_LEVEL_KEYS = {"version", "language", "objects"}

# Display templates for attribute prompts; the catalog file only carries
# the label-mode prompt text.
_ATTRIBUTE_PROMPTS = {
    "en": "What {attr} is it?",
    "de": "Welche {attr} hat es?",
}


class CatalogError(Exception):
    pass


class ParseError(CatalogError):
    def __init__(self, line: Optional[int], reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}" if line else reason)


class SchemaViolationError(CatalogError):
    def __init__(self, violations: list["Violation"]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


class EmptyCatalog(CatalogError):
    pass


class NoCompatibleObjects(CatalogError):
    def __init__(self, modes):
        self.modes = modes
        super().__init__(f"no catalog object supports any enabled mode: {sorted(modes)}")


@dataclass(frozen=True)
class Violation:
    object_id: Optional[str]
    field: str
    rule: str
    severity: str = "error"  # "error" | "warning"

    def __str__(self) -> str:
        where = f"object {self.object_id!r}, " if self.object_id else ""
        return f"[{self.severity}] {where}field {self.field!r}: {self.rule}"


@dataclass(frozen=True)
class PromptObject:
    """One tactable concept: pictogram, synonyms, attributes, prompt text."""

    id: str
    image_ref: str
    labels: tuple[str, ...]
    sound_ref: Optional[str] = None
    attributes: dict[str, tuple[str, ...]] = field(default_factory=dict)
    prompt_text: dict[str, str] = field(default_factory=dict)

    @property
    def canonical_label(self) -> str:
        return self.labels[0]


@dataclass(frozen=True)
class Catalog:
    language: str
    objects: tuple[PromptObject, ...]
    version: int = CATALOG_SCHEMA_VERSION
    # Directory the catalog was loaded from; asset refs resolve against it.
    # Not part of the serialized form.
    base_dir: Optional[Path] = field(default=None, compare=False)

    def object_by_id(self, object_id: str) -> PromptObject:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise KeyError(object_id)


@dataclass(frozen=True)
class PromptTask:
    """A single thing to ask the player, resolved from a catalog object."""

    object_id: str
    mode: str  # "label" | "attribute" | "sound"
    expected: tuple[str, ...]
    display_prompt: str
    attribute_name: Optional[str] = None
    image_ref: str = ""
    sound_ref: Optional[str] = None


def _parse_object(raw: object, index: int) -> tuple[Optional[PromptObject], list[Violation]]:
    violations: list[Violation] = []
    if not isinstance(raw, dict):
        return None, [Violation(None, f"objects[{index}]", "must be an object")]
    oid = raw.get("id")
    oid_str = oid if isinstance(oid, str) else None
    unknown = set(raw) - _OBJECT_KEYS
    if unknown:
        violations.append(Violation(oid_str, f"objects[{index}]", f"unknown fields: {sorted(unknown)}"))
    if not isinstance(oid, str) or not oid:
        violations.append(Violation(oid_str, "id", "must be a non-empty string"))
    image = raw.get("image")
    if not isinstance(image, str) or not image:
        violations.append(Violation(oid_str, "image", "must be a non-empty string"))
        image = ""
    sound = raw.get("sound")
    if sound is not None and not isinstance(sound, str):
        violations.append(Violation(oid_str, "sound", "must be a string or null"))
        sound = None
    labels = raw.get("labels")
    if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
        violations.append(Violation(oid_str, "labels", "must be a list of strings"))
        labels = []
    attributes = raw.get("attributes", {})
    if not isinstance(attributes, dict):
        violations.append(Violation(oid_str, "attributes", "must be a map"))
        attributes = {}
    attrs: dict[str, tuple[str, ...]] = {}
    for name, values in attributes.items():
        if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
            violations.append(Violation(oid_str, f"attributes.{name}", "must be a list of strings"))
            continue
        attrs[name] = tuple(values)
    prompt_text = raw.get("prompt_text", {})
    if not isinstance(prompt_text, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in prompt_text.items()
    ):
        violations.append(Violation(oid_str, "prompt_text", "must be a map of language code to string"))
        prompt_text = {}
    if violations:
        return None, violations
    return (
        PromptObject(
            id=oid,
            image_ref=image,
            sound_ref=sound,
            labels=tuple(labels),
            attributes=attrs,
            prompt_text=dict(prompt_text),
        ),
        [],
    )


def load_catalog(path) -> Catalog:
    """Parse and validate a catalog JSON file.

    Strict: unknown fields are rejected so authoring typos surface early.
    Asset refs stay relative; `base_dir` records where to resolve them.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.lineno, exc.msg) from exc
    if not isinstance(raw, dict):
        raise ParseError(None, "top level must be a JSON object")

    violations: list[Violation] = []
    unknown = set(raw) - _TOP_LEVEL_KEYS
    if unknown:
        violations.append(Violation(None, "(top level)", f"unknown fields: {sorted(unknown)}"))
    version = raw.get("version")
    if version != CATALOG_SCHEMA_VERSION:
        violations.append(Violation(None, "version", f"must be {CATALOG_SCHEMA_VERSION}, got {version!r}"))
    language = raw.get("language")
    if not isinstance(language, str) or not language:
        violations.append(Violation(None, "language", "must be a non-empty language code"))
        language = ""
    raw_objects = raw.get("objects")
    if not isinstance(raw_objects, list):
        violations.append(Violation(None, "objects", "must be a list"))
        raw_objects = []

    objects: list[PromptObject] = []
    for i, entry in enumerate(raw_objects):
        obj, obj_violations = _parse_object(entry, i)
        violations.extend(obj_violations)
        if obj is not None:
            objects.append(obj)

    catalog = Catalog(
        language=language,
        objects=tuple(objects),
        version=version if isinstance(version, int) else CATALOG_SCHEMA_VERSION,
        base_dir=path.parent,
    )
    violations.extend(v for v in validate_catalog(catalog) if v.severity == "error")
    if violations:
        raise SchemaViolationError(violations)
    return catalog


def serialize_catalog(catalog: Catalog) -> str:
    """Inverse of load_catalog (modulo base_dir); stable key order."""
    doc = {
        "version": catalog.version,
        "language": catalog.language,
        "objects": [
            {
                "id": o.id,
                "image": o.image_ref,
                "sound": o.sound_ref,
                "labels": list(o.labels),
                "attributes": {k: list(v) for k, v in o.attributes.items()},
                "prompt_text": dict(o.prompt_text),
            }
            for o in catalog.objects
        ],
    }
    return json.dumps(doc, ensure_ascii=False, indent=2)


def validate_catalog(catalog: Catalog) -> list[Violation]:
    """Check every catalog invariant; violations are data, not exceptions.

    Missing asset files are warnings so catalogs can be authored before
    their images/sounds exist.
    """
    out: list[Violation] = []
    seen: set[str] = set()
    for obj in catalog.objects:
        if obj.id in seen:
            out.append(Violation(obj.id, "id", "duplicate id"))
        seen.add(obj.id)
        if not obj.labels:
            out.append(Violation(obj.id, "labels", "non-empty"))
        for label in obj.labels:
            if not normalize(label):
                out.append(Violation(obj.id, "labels", f"label {label!r} empty after normalization"))
        for name, values in obj.attributes.items():
            if not values:
                out.append(Violation(obj.id, f"attributes.{name}", "non-empty"))
        if catalog.language and catalog.language not in obj.prompt_text:
            out.append(Violation(obj.id, "prompt_text", f"missing entry for catalog language {catalog.language!r}"))
        if catalog.base_dir is not None:
            for field_name, ref in (("image", obj.image_ref), ("sound", obj.sound_ref)):
                if ref and not (catalog.base_dir / ref).exists():
                    out.append(Violation(obj.id, field_name, f"asset file {ref!r} not found", severity="warning"))
    return out


def _compatible_modes(obj: PromptObject, enabled: set[str]) -> list[str]:
    modes = []
    if "label" in enabled:
        modes.append("label")
    if "attribute" in enabled and obj.attributes:
        modes.append("attribute")
    if "sound" in enabled and obj.sound_ref:
        modes.append("sound")
    return modes


def _attribute_prompt(language: str, attr: str) -> str:
    template = _ATTRIBUTE_PROMPTS.get(language, "{attr}?")
    return template.format(attr=attr)


def _make_task(obj: PromptObject, mode: str, language: str, rng: random.Random) -> PromptTask:
    display = obj.prompt_text.get(language) or next(iter(obj.prompt_text.values()), obj.canonical_label)
    if mode == "attribute":
        attr = rng.choice(sorted(obj.attributes))
        return PromptTask(
            object_id=obj.id,
            mode="attribute",
            expected=obj.attributes[attr],
            display_prompt=_attribute_prompt(language, attr),
            attribute_name=attr,
            image_ref=obj.image_ref,
            sound_ref=obj.sound_ref,
        )
    return PromptTask(
        object_id=obj.id,
        mode=mode,
        expected=obj.labels,
        display_prompt=display,
        image_ref=obj.image_ref,
        sound_ref=obj.sound_ref,
    )


def build_prompt_sequence(catalog: Catalog, config, seed: int) -> list[PromptTask]:
    """Pick config.prompts_per_session tasks, deterministically from seed.

    Shuffle-without-replacement; on exhaustion reshuffle, never repeating
    the same object twice in a row when more than one is eligible.
    """
    if not catalog.objects:
        raise EmptyCatalog("catalog has no objects")
    enabled = {m for m, w in config.mode_weights.items() if w > 0}
    pool = [o for o in catalog.objects if _compatible_modes(o, enabled)]
    if not pool:
        raise NoCompatibleObjects(enabled)

    rng = random.Random(seed)
    weights = config.mode_weights
    tasks: list[PromptTask] = []
    deck: list[PromptObject] = []
    last_id: Optional[str] = None
    for _ in range(config.prompts_per_session):
        if not deck:
            deck = list(pool)
            rng.shuffle(deck)
            # Deck is drawn from the end; avoid a repeat across the cycle seam.
            if len(deck) > 1 and deck[-1].id == last_id:
                swap = rng.randrange(len(deck) - 1)
                deck[-1], deck[swap] = deck[swap], deck[-1]
        obj = deck.pop()
        last_id = obj.id
        modes = _compatible_modes(obj, enabled)
        mode = rng.choices(modes, weights=[weights[m] for m in modes])[0]
        tasks.append(_make_task(obj, mode, config.language, rng))
    return tasks
