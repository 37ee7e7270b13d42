"""CSV curves plus a JSON sidecar for every sweep."""

import csv
import json
from pathlib import Path

import numpy as np

from src.my_util.errors import DataFormatError

from .summary import TopkCurves
from .sweep import SweepResult, extract_threshold


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def sidecar_path(csv_path: str | Path) -> Path:
    return Path(csv_path).with_suffix(".json")


def export_result(result: SweepResult, curves: TopkCurves, path: str | Path, tau: float = 0.5) -> Path:
    """Write `<path>` (CSV) and its `.json` sidecar; returns the sidecar path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["v", *curves.names, "others", "accuracy"])
        for i, v in enumerate(result.grid):
            others = _fmt(curves.others[i]) if curves.others.size else ""
            writer.writerow([_fmt(v), *(_fmt(x) for x in curves.values[i]), others, _fmt(result.mean_accuracy[i])])

    class_id = result.class_id
    sidecar = {
        "kind": str(result.kind),
        "unit": result.kind.unit,
        "class_id": class_id,
        "class_name": result.class_names[class_id] if class_id is not None else None,
        "n_images": result.n_images,
        "seed": result.seed,
        "tau": tau,
        "threshold": extract_threshold(result, tau),
        "grid": result.grid,
        "top_classes": curves.classes,
        "first_flip": result.first_flip,
    }
    side = sidecar_path(path)
    side.write_text(json.dumps(sidecar, indent=2) + "\n")
    return side


def read_result_csv(path: str | Path) -> dict[str, np.ndarray]:
    """Columns of an exported sweep CSV by header name; an empty "others" column reads as an empty array."""
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0][:1] != ["v"] or rows[0][-2:] != ["others", "accuracy"]:
        raise DataFormatError(f"{path} is not a sweep CSV")
    header, body = rows[0], rows[1:]
    columns = {}
    try:
        for j, name in enumerate(header):
            cells = [row[j] for row in body]
            if name == "others" and all(c == "" for c in cells):
                columns[name] = np.zeros(0)
            else:
                columns[name] = np.array([float(c) for c in cells])
    except (IndexError, ValueError) as e:
        raise DataFormatError(f"{path}: malformed row ({e})") from e
    return columns
