"""Run configuration files: flat ``key = value`` lines under section headers.

Example::

    [run]
    instance = chain4.txt
    driver = transverse
    dt = 0.02
    samples = 50
    seed = 0

    [schedule]
    schedule = power
    delta = 0.1
    gamma_final = 2.0

    [sweep]
    gamma = 1e-3, 1e-2, 1e-1
    delta = 0.3, 0.1, 0.03

    [limits]
    dense_limit = 16384

Sweep axes override the matching scalar key for each run; ``gamma`` feeds
the spectrum and bounds commands, the other axes the anneal command.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ParseError, StructureError
from .ising import DENSE_LIMIT, DriverKind

SWEEP_KEYS = ("gamma", "alpha", "delta", "t_final")
DEFAULT_GAMMAS = (1e-3, 1e-2, 1e-1)


def _floats(text: str, key: str) -> list[float]:
    try:
        values = [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise ParseError(f"sweep axis '{key}' must be a list of numbers") from None
    if not values:
        raise StructureError(f"sweep axis '{key}' is empty")
    return values


@dataclass
class RunConfig:
    instances: list[Path] = field(default_factory=list)
    driver: DriverKind = DriverKind.TRANSVERSE
    schedule: dict = field(default_factory=lambda: {"schedule": "power", "delta": "0.1"})
    t_final: Optional[float] = None
    dt: float = 0.02
    samples: int = 50
    sweep: dict = field(default_factory=dict)
    seed: int = 0
    out: Optional[Path] = None
    workers: int = 1
    dense_limit: int = DENSE_LIMIT
    source_text: str = ""

    @property
    def gammas(self) -> list[float]:
        return self.sweep.get("gamma", list(DEFAULT_GAMMAS))

    def validate(self) -> "RunConfig":
        if not self.instances:
            raise StructureError("no instance given")
        for path in self.instances:
            if not Path(path).is_file():
                raise StructureError(f"instance file not found: {path}")
        for key, values in self.sweep.items():
            if not values:
                raise StructureError(f"sweep axis '{key}' is empty")
            if key == "gamma" and any(v < 0 for v in values):
                raise StructureError("sweep axis 'gamma' needs nonnegative values")
            if key != "gamma" and any(v <= 0 for v in values):
                raise StructureError(f"sweep axis '{key}' needs positive values")
        if self.dt <= 0 or self.samples < 2 or self.workers < 1:
            raise StructureError("dt must be > 0, samples >= 2, workers >= 1")
        if self.t_final is not None and self.t_final <= 0:
            raise StructureError("t_final must be positive")
        return self

    def fingerprint(self, instance: Path) -> str:
        digest = hashlib.sha256()
        digest.update(self.source_text.encode())
        digest.update(b"\0")
        digest.update(Path(instance).read_bytes())
        return digest.hexdigest()


def parse_config(text: str, base_dir: Path = Path(".")) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ParseError(str(exc), getattr(exc, "lineno", None)) from None
    known = {"run", "schedule", "sweep", "limits"}
    unknown = set(parser.sections()) - known
    if unknown:
        raise StructureError(f"unknown config sections: {sorted(unknown)}")
    cfg = RunConfig(source_text=text)
    try:
        if parser.has_section("run"):
            run = parser["run"]
            if "instance" in run:
                cfg.instances = [base_dir / p for p in run["instance"].replace(",", " ").split()]
            cfg.driver = DriverKind.parse(run.get("driver", "transverse"))
            if "t_final" in run:
                cfg.t_final = run.getfloat("t_final")
            cfg.dt = run.getfloat("dt", cfg.dt)
            cfg.samples = run.getint("samples", cfg.samples)
            cfg.seed = run.getint("seed", cfg.seed)
            cfg.workers = run.getint("workers", cfg.workers)
            if "out" in run:
                cfg.out = base_dir / run["out"]
        if parser.has_section("schedule"):
            cfg.schedule = dict(parser["schedule"])
        if parser.has_section("sweep"):
            for key, value in parser["sweep"].items():
                if key not in SWEEP_KEYS:
                    raise StructureError(f"unknown sweep axis '{key}' (known: {', '.join(SWEEP_KEYS)})")
                cfg.sweep[key] = _floats(value, key)
        if parser.has_section("limits"):
            lim = parser["limits"]
            cfg.dense_limit = lim.getint("dense_limit", cfg.dense_limit)
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent)
