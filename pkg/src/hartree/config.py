"""
Flat ``key = value`` configuration files with dotted section names::

    # comment
    grid_x.n = 512
    potentials.preset = example31
    potentials.amplitude = 0.2
"""
from __future__ import annotations

import difflib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Tuple

import numpy as np


class ConfigError(ValueError):
    pass


def _bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _floats(raw: str) -> tuple:
    parts = [s for s in raw.replace(",", " ").split() if s]
    return tuple(float(s) for s in parts)


def _int(raw: str) -> int:
    f = float(raw)
    if not f.is_integer():
        raise ValueError(f"expected an integer, got {raw!r}")
    return int(f)


def _choice(*options):
    def parse(raw: str) -> str:
        if raw not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {raw!r}")
        return raw
    return parse


def _str(raw: str) -> str:
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "'\"":
        return raw[1:-1]
    return raw


# key -> (parser, default)
SCHEMA: Dict[str, Tuple[Callable[[str], Any], Any]] = {
    "grid_x.n": (_int, 512),
    "grid_x.min": (float, -10.0),
    "grid_x.max": (float, 10.0),
    "grid_y.n": (_int, 512),
    "grid_y.min": (float, -16.0),
    "grid_y.max": (float, 16.0),
    "potentials.preset": (_choice("example31", "harmonic", "tabulated"), "example31"),
    "potentials.ell": (float, 1.0),
    "potentials.omega": (float, 1.0),
    "potentials.omega_x": (float, 1.0),
    "potentials.amplitude": (float, 0.2),
    "potentials.support": (float, 2.0),
    "potentials.slope_mode": (_choice("pure_bump", "odd_bump"), "pure_bump"),
    "potentials.v1_file": (_str, ""),
    "potentials.v2_file": (_str, ""),
    "potentials.shift_to_h1": (_bool, True),
    "initial.x.kind": (_choice("gaussian", "ground_state"), "gaussian"),
    "initial.x.center": (float, 0.0),
    "initial.x.width": (float, 1.0),
    "initial.x.momentum": (float, 0.0),
    "initial.y.kind": (_choice("gaussian", "ground_state"), "gaussian"),
    "initial.y.center": (float, 0.0),
    "initial.y.width": (float, 1.0),
    "initial.y.momentum": (float, 0.0),
    "time.T": (float, 5.0),
    "time.dt": (float, 1e-3),
    "time.record_every": (_int, 10),
    "picard.T1": (float, 0.25),
    "picard.N": (_int, 6),
    "picard.tol": (float, 1e-12),
    "picard.seed": (_choice("free", "frozen_initial"), "free"),
    "picard.density": (_choice("midpoint", "left"), "midpoint"),
    "picard.segments": (_int, 1),
    "compare.enabled": (_bool, True),
    "compare.memory_ack": (_bool, False),
    "check.search_C": (_floats, (0.0, 1.0, 2.0, 5.0, 10.0, 50.0)),
    "ground_state.dt": (float, 5e-3),
    "ground_state.tol": (float, 1e-12),
    "ground_state.max_iter": (_int, 200_000),
    "tolerances.norm": (float, 1e-8),
    "tolerances.boundary_initial": (float, 1e-12),
    "tolerances.boundary_warn": (float, 1e-8),
    "output_dir": (_str, "out"),
}


@dataclass
class SimulationConfig:
    values: Dict[str, Any] = field(default_factory=lambda: {k: d for k, (_, d) in SCHEMA.items()})
    source: str = ""

    def __getitem__(self, key: str):
        return self.values[key]

    def section(self, prefix: str) -> dict:
        prefix = prefix + "."
        return {k[len(prefix):]: v for k, v in self.values.items() if k.startswith(prefix)}

    def dump(self) -> str:
        lines = []
        for key in SCHEMA:
            v = self.values[key]
            if isinstance(v, tuple):
                v = ", ".join(f"{x:g}" for x in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{key} = {v}")
        return "\n".join(lines) + "\n"


def _validate(cfg: SimulationConfig):
    v = cfg.values
    for axis in ("grid_x", "grid_y"):
        n = v[f"{axis}.n"]
        if n < 8 or n & (n - 1):
            raise ConfigError(f"{axis}.n = {n}: not a power of two >= 8")
        if v[f"{axis}.max"] <= v[f"{axis}.min"]:
            raise ConfigError(f"{axis}.max must exceed {axis}.min")
    if not v["time.dt"] > 0:
        raise ConfigError("time.dt must be positive")
    if not v["time.T"] > 0:
        raise ConfigError("time.T must be positive")
    if v["time.dt"] >= v["time.T"]:
        raise ConfigError("time.dt must be smaller than time.T")
    for key in ("time.record_every", "picard.N", "picard.segments", "ground_state.max_iter"):
        if v[key] < 1:
            raise ConfigError(f"{key} must be a positive integer")
    for key in ("picard.T1", "picard.tol", "ground_state.dt", "ground_state.tol",
                "potentials.ell", "potentials.omega", "potentials.omega_x", "potentials.support"):
        if not v[key] > 0:
            raise ConfigError(f"{key} must be positive")
    if v["picard.T1"] < v["time.dt"]:
        raise ConfigError("picard.T1 must be at least one time step")
    for axis in ("x", "y"):
        if not v[f"initial.{axis}.width"] > 0:
            raise ConfigError(f"initial.{axis}.width must be positive")
    if v["potentials.preset"] == "tabulated":
        for key in ("potentials.v1_file", "potentials.v2_file"):
            if not v[key]:
                raise ConfigError(f"tabulated potentials need {key}")
    if not v["check.search_C"]:
        raise ConfigError("check.search_C must list at least one value")
    for x in v.values():
        if isinstance(x, float) and not np.isfinite(x):
            raise ConfigError("configuration values must be finite")


def parse_config(path) -> SimulationConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    cfg = SimulationConfig(source=str(path))
    seen = set()
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            close = difflib.get_close_matches(key, SCHEMA.keys(), n=1)
            hint = f"; did you mean {close[0]!r}?" if close else ""
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}{hint}")
        if key in seen:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        seen.add(key)
        parser = SCHEMA[key][0]
        try:
            cfg.values[key] = parser(raw)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    _validate(cfg)
    return cfg
