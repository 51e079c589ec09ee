"""Run configuration shared by CLI commands; loadable from a JSON file named by ``B2_CONFIG``."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .errors import InputError
from .evaluation import COCO_THRESHOLDS

ENV_VAR = "B2_CONFIG"


@dataclass(frozen=True)
class Config:
    connectivity: str = "four"
    epsilon: float = 1.0
    attention_resolution: int = 7
    assembly_resolution: int = 56
    ap_thresholds: tuple[float, ...] = COCO_THRESHOLDS
    seed: int = 42
    jobs: int = 0  # 0 means all available cores

    def __post_init__(self):
        object.__setattr__(self, "ap_thresholds", tuple(self.ap_thresholds))
        checks = [
            ("connectivity", self.connectivity in ("four", "eight"), "must be 'four' or 'eight'"),
            ("epsilon", _is_num(self.epsilon) and self.epsilon > 0, "must be a positive number"),
            ("attention_resolution", _is_int(self.attention_resolution) and self.attention_resolution >= 1, "must be an integer >= 1"),
            ("assembly_resolution", _is_int(self.assembly_resolution) and self.assembly_resolution >= 1, "must be an integer >= 1"),
            (
                "ap_thresholds",
                len(self.ap_thresholds) > 0 and all(_is_num(t) and 0 <= t <= 1 for t in self.ap_thresholds),
                "must be a nonempty list of numbers in [0, 1]",
            ),
            ("seed", _is_int(self.seed) and self.seed >= 0, "must be a nonnegative integer"),
            ("jobs", _is_int(self.jobs) and self.jobs >= 0, "must be a nonnegative integer"),
        ]
        for name, ok, constraint in checks:
            if not ok:
                raise InputError(f"config field '{name}' {constraint}, got {getattr(self, name)!r}")

    @property
    def workers(self) -> int:
        return self.jobs or os.cpu_count() or 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ap_thresholds"] = list(self.ap_thresholds)
        return d


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def load_config(path=None, **overrides) -> Config:
    """Defaults, then the JSON file (``path`` or ``$B2_CONFIG``), then non-None overrides."""
    values = {}
    path = path or os.environ.get(ENV_VAR)
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise InputError(f"config file {path}: invalid JSON ({e})") from None
        if not isinstance(data, dict):
            raise InputError(f"config file {path} must hold a JSON object")
        known = {f.name for f in fields(Config)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InputError(f"config file {path}: unknown field(s) {unknown}")
        values.update(data)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return Config(**values)
