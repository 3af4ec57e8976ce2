"""JSON schemas for every document the command line writes."""

import json
from importlib import resources


def load_schema(name: str) -> dict:
    return json.loads(resources.files(__name__).joinpath(f"{name}.schema.json").read_text())


def schema_names() -> list[str]:
    suffix = ".schema.json"
    return sorted(p.name[: -len(suffix)] for p in resources.files(__name__).iterdir() if p.name.endswith(suffix))
