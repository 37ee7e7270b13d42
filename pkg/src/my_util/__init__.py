import numpy as np

from src.my_util.errors import UsageError

KPair = tuple[float, float]


def parse_grid(spec: str) -> list[float]:
    """`v0:v1:steps` -> inclusive linear grid of `steps` magnitudes."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid spec must look like v0:v1:steps, got {spec!r}")
    try:
        v0, v1, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"bad grid spec {spec!r}") from None
    if steps < 1:
        raise UsageError(f"grid needs at least one step, got {steps}")
    if steps == 1:
        return [v0]
    return [float(v) for v in np.linspace(v0, v1, steps)]


def _parse_pair(text: str) -> KPair:
    values = [float(x) for x in text.split(",")]
    if len(values) != 2:
        raise UsageError(f"control parameter needs two components, got {text!r}")
    return values[0], values[1]


def parse_k_grid(spec: str) -> list[tuple[KPair, KPair]]:
    """Either `a,b/c,d;a,b/c,d;...` or `axes:v1,v2,...`.

    `axes:` expands to the identity followed by F([v,0],[0,0]), F([0,v],[0,0]),
    F([0,0],[v,0]) and F([0,0],[0,v]) for each v.
    """
    spec = spec.strip()
    try:
        if spec.startswith("axes:"):
            grid = [((0.0, 0.0), (0.0, 0.0))]
            for v in (float(x) for x in spec[len("axes:") :].split(",")):
                grid += [
                    ((v, 0.0), (0.0, 0.0)),
                    ((0.0, v), (0.0, 0.0)),
                    ((0.0, 0.0), (v, 0.0)),
                    ((0.0, 0.0), (0.0, v)),
                ]
            return grid
        grid = []
        for item in filter(None, (s.strip() for s in spec.split(";"))):
            k1, k2 = item.split("/")
            grid.append((_parse_pair(k1), _parse_pair(k2)))
    except ValueError:
        raise UsageError(f"bad k-grid spec {spec!r}") from None
    if not grid:
        raise UsageError("empty k-grid")
    return grid
