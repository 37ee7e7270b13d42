"""TOML defaults that live next to the package that owns them."""

import os
import tomllib
from pathlib import Path
from typing import Any

SRC_DIR = Path(__file__).resolve().parent.parent


def load_defaults_toml(name: str) -> dict[str, Any]:
    """Load `src/<name>/<name>_defaults.toml`."""
    with open(SRC_DIR / name / f"{name}_defaults.toml", "rb") as f:
        return tomllib.load(f)


def env_path(var: str) -> Path | None:
    value = os.getenv(var)
    return Path(value) if value else None


def resolve(value, default):
    """CLI values override defaults; None means 'not given'."""
    return default if value is None else value
