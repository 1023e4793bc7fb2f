"""Validation of report JSON against the schema files shipped in the package."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema
from referencing import Registry, Resource

from .errors import ConfigError

_SCHEMA_FILES = ("replay_report.schema.json", "comparison_report.schema.json")


def load_schema(name: str) -> dict:
    if name not in _SCHEMA_FILES:
        raise ConfigError(f"unknown schema {name!r}; shipped schemas: {_SCHEMA_FILES}")
    text = resources.files("hob").joinpath(f"schemas/{name}").read_text(encoding="utf-8")
    return json.loads(text)


@lru_cache(maxsize=None)
def _validator(name: str) -> jsonschema.Draft202012Validator:
    registry = Registry().with_resources(
        (fname, Resource.from_contents(load_schema(fname))) for fname in _SCHEMA_FILES
    )
    return jsonschema.Draft202012Validator(load_schema(name), registry=registry)


def validate_replay_report(doc: dict) -> None:
    """Raises jsonschema.ValidationError when the replay report is malformed."""
    _validator("replay_report.schema.json").validate(doc)


def validate_comparison_report(doc: dict) -> None:
    _validator("comparison_report.schema.json").validate(doc)
