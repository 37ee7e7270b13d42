"""One JSON record per CLI run, enough to re-execute it."""

import json
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any

from .errors import DataFormatError

PACKAGE_NAME = "invariant-transformer-lab"
MANIFEST_NAME = "run.json"


def tool_version() -> str:
    try:
        return version(PACKAGE_NAME)
    except PackageNotFoundError:
        return "0.1.0"


def manifest_location(out: str | Path) -> Path:
    """`<dir>/run.json` for directory outputs, `<file>.run.json` for a single output file."""
    out = Path(out)
    if out.suffix:
        return out.with_name(f"{out.name}.{MANIFEST_NAME}")
    return out / MANIFEST_NAME


@dataclass
class RunManifest:
    command: str
    argv: list[str]
    flags: dict[str, Any]
    seeds: dict[str, int] = field(default_factory=dict)
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    results: dict[str, Any] = field(default_factory=dict)
    version: str = field(default_factory=tool_version)
    started_at: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    duration_s: float = 0.0
    _t0: float = field(default_factory=time.monotonic, repr=False)

    def finish(self) -> None:
        self.duration_s = round(time.monotonic() - self._t0, 3)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        del d["_t0"]
        return d

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, default=str) + "\n")
        return path

    @classmethod
    def read(cls, path: str | Path) -> "RunManifest":
        try:
            d = json.loads(Path(path).read_text())
            return cls(**d)
        except (json.JSONDecodeError, TypeError) as e:
            raise DataFormatError(f"{path} is not a run manifest: {e}") from e
