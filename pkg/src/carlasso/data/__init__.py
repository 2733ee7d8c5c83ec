"""Datasets shipped with the package."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from ..errors import DataIOError

GUT_ANALOG = "gut_analog.csv"
GUT_ANALOG_FORMULA = "Alistipes+Bacteroides+Eubacterium+Parabacteroides+all_others ~ BMI+Age+Gender+Stratum"


def available() -> list[str]:
    return sorted(p.name for p in resources.files(__name__).iterdir() if p.name.endswith(".csv"))


def bundled_path(name: str) -> Path:
    """Filesystem path of a bundled CSV (``.csv`` suffix optional)."""
    if not name.endswith(".csv"):
        name += ".csv"
    if name not in available():
        raise DataIOError(f"no bundled dataset {name!r}; available: {', '.join(available())}", location=name)
    return Path(str(resources.files(__name__).joinpath(name)))
