"""Access to the data files shipped inside the package."""
from __future__ import annotations

import json
from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent / "data"


def data_path(*parts) -> Path:
    return DATA_DIR.joinpath(*parts)


def fixture_model(name: str):
    """Load ``data/models/<name>.json`` as a SystemModel (not canonicalized)."""
    from .textio import read_model

    return read_model(data_path("models", f"{name}.json"))


def model_names() -> list:
    return sorted(p.stem for p in data_path("models").glob("*.json"))


def episode_record(name: str) -> dict:
    with open(data_path("episodes", f"{name}.json"), encoding="utf-8") as fh:
        return json.load(fh)


def episode_names() -> list:
    return sorted(p.stem for p in data_path("episodes").glob("*.json"))
