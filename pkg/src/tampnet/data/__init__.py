"""Bundled example environments."""

from pathlib import Path

_HERE = Path(__file__).resolve().parent


def fixture_path(name: str) -> Path:
    """Return the path of a bundled environment file, e.g. ``demo_3x3.json``."""
    path = _HERE / name
    if not path.is_file():
        available = sorted(p.name for p in _HERE.glob("*.json"))
        raise FileNotFoundError(f"no bundled environment {name!r}; available: {available}")
    return path
