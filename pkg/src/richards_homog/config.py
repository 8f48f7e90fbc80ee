"""Run configuration shared by the pipeline and the command line."""
from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, field, fields

DEFAULT_SEED = 2024


def default_seed() -> int:
    env = os.environ.get("RH_SEED")
    return int(env) if env not in (None, "") else DEFAULT_SEED


@dataclass(frozen=True)
class RunConfig:
    fine_side: int = 128
    coarse_side: int = 8
    sigma2: float = 2.0
    eta1: float = 0.2
    eta2: float = 0.2
    kle_grid: int = 32
    energy_threshold: float = 0.95
    kappa_min: float = 1000.0
    kappa_max: float = 4200.0
    picard_tol: float = 1e-6
    picard_max: int = 4
    terminal_time: float = 5e-5
    time_steps: int = 20
    record_steps: tuple[int, ...] = (1, 5, 10, 15, 20)
    steady: bool = True
    epochs: int = 300
    batch_size: int = 64
    validation_fraction: float = 0.2
    test_fraction: float = 1.0 / 6.0
    seed: int = field(default_factory=default_seed)
    split_seed: int = 0

    def __post_init__(self):
        problems = []
        if self.fine_side < 1 or self.coarse_side < 1:
            problems.append("grid sides must be positive")
        elif self.fine_side % self.coarse_side:
            problems.append(f"fine_side {self.fine_side} not divisible by coarse_side {self.coarse_side}")
        if self.fine_side % 16:
            problems.append(f"fine_side {self.fine_side} not divisible by 16")
        if not 0 < self.kappa_min <= self.kappa_max:
            problems.append("need 0 < kappa_min <= kappa_max")
        if any(s < 1 or s > self.time_steps for s in self.record_steps):
            problems.append(f"record_steps must lie in 1..{self.time_steps}")
        if self.picard_tol <= 0 or self.picard_max < 1:
            problems.append("invalid Picard settings")
        if self.terminal_time <= 0 or self.time_steps < 1:
            problems.append("invalid time grid")
        if self.epochs < 0 or self.batch_size < 1:
            problems.append("epochs must be >= 0 and batch_size >= 1")
        if not 0 <= self.validation_fraction < 1 or not 0 < self.test_fraction < 1:
            problems.append("fractions out of range")
        if problems:
            raise ValueError("; ".join(problems))

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["record_steps"] = list(self.record_steps)
        return d


def _coerce(name: str, raw: str):
    ftype = {f.name: f.type for f in fields(RunConfig)}[name]
    raw = raw.strip()
    if ftype == "int":
        return int(raw)
    if ftype == "float":
        return float(raw)
    if ftype == "bool":
        return raw.lower() in ("1", "true", "yes", "on")
    if name == "record_steps":
        return tuple(int(s) for s in raw.replace(",", " ").split())
    raise ValueError(f"unsupported config field {name}")


def load_config(path=None, **overrides) -> RunConfig:
    """Read the ``[run]`` section of an INI file; non-None overrides win."""
    values = {}
    if path is not None:
        parser = configparser.ConfigParser()
        with open(path) as fh:
            parser.read_file(fh)
        if parser.has_section("run"):
            known = {f.name for f in fields(RunConfig)}
            for key, raw in parser.items("run"):
                if key not in known:
                    raise ValueError(f"unknown config key {key!r}")
                values[key] = _coerce(key, raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)
