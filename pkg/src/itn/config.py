from dataclasses import asdict, dataclass, fields

from src.my_util.config import load_defaults_toml
from src.my_util.errors import UsageError


@dataclass(frozen=True)
class ItnConfig:
    c_theta: float = 10.0
    acc_orig: float | None = None  # None: clean accuracy minus acc_margin
    s_size: int = 16
    batch: int = 64
    lr: float = 1e-3
    steps: int = 2000
    seed: int = 0
    hidden: int = 32
    acc_margin: float = 0.02
    clamp: float = 10.0
    log_every: int = 100
    swap_k: bool = False

    def __post_init__(self):
        for name in ("c_theta", "s_size", "batch", "hidden", "clamp", "log_every"):
            if getattr(self, name) <= 0:
                raise UsageError(f"{name} must be positive, got {getattr(self, name)}")
        if self.lr < 0 or self.steps < 0:
            raise UsageError(f"lr and steps must be non-negative, got lr={self.lr} steps={self.steps}")
        if self.acc_orig is not None and not 0.0 <= self.acc_orig <= 1.0:
            raise UsageError(f"acc_orig must lie in [0,1], got {self.acc_orig}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_defaults(cls, **overrides) -> "ItnConfig":
        known = {f.name for f in fields(cls)}
        values = {k: v for k, v in load_defaults_toml("itn").items() if k in known}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)
