"""Bundled scenario fixtures."""
from __future__ import annotations

from importlib import resources
from pathlib import Path

from ..errors import NotFoundError


def scenario_path(name: str) -> Path:
    """Filesystem path of a bundled scenario JSON (without extension)."""
    base = resources.files(__package__)
    candidate = base / f"{name}.json"
    if not candidate.is_file():
        available = sorted(p.stem for p in Path(str(base)).glob("*.json"))
        raise NotFoundError(
            f"unknown scenario {name!r} (bundled: {', '.join(available)})")
    return Path(str(candidate))


def load_bundled(name: str):
    from ..simcore.engine import load_scenario
    return load_scenario(scenario_path(name))
