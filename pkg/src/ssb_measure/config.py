"""Flat ``key = value`` run configuration with per-command schemas.

Files are section-less; ``#`` starts a comment.  Command-line ``--set`` values
and dedicated flags override the file.  Every key is checked against the
schema of the command being run, and unknown keys are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .errors import ConfigurationError


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text: str) -> float | None:
    t = text.strip().lower()
    return None if t in ("", "none") else float(t)


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    return v


def _convention(text: str) -> str:
    t = text.strip()
    if t not in ("mc", "paper"):
        raise ValueError("expected 'mc' or 'paper'")
    return t


def _mode(text: str) -> str:
    t = text.strip()
    if t not in ("decoupled", "coupled"):
        raise ValueError("expected 'decoupled' or 'coupled'")
    return t


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]


Key = tuple[Callable[[str], Any], Any]

COMMON: dict[str, Key] = {
    "seed": (_u64, 0),
    "out": (str, "-"),
    "runs": (int, 1),
    "convention": (_convention, "mc"),
}

LANGEVIN: dict[str, Key] = {
    "gamma": (float, 1.0),
    "g": (float, 1.0),
    "epsilon": (float, 0.01),
}

DEVICE: dict[str, Key] = {
    **LANGEVIN,
    "mu": (float, 0.02),
    "B": (float, 1.0),
    "base_rate": (float, 1.0),
    "c_rate": (float, 1.0),
    "theta": (float, 20.0),
    "z": (_opt_float, None),
}

SCHEMAS: dict[str, dict[str, Key]] = {
    "spin-relax": {
        **COMMON,
        "a": (float, 0.99),
        "b": (float, 0.01),
        "c": (float, 1.0),
        "omega": (float, 10.0),
        "rho11": (float, 0.5),
        "rho12_re": (float, 0.5),
        "rho12_im": (float, 0.0),
        "t_end": (float, 10.0),
        "n_samples": (int, 1001),
        "dt": (float, 1e-3),
    },
    "langevin": {
        **COMMON,
        **LANGEVIN,
        "phi0": (float, 0.0),
        "bias": (float, 0.0),
        "dt": (float, 1e-3),
        "t_end": (float, 10.0),
        "record_every": (int, 100),
        "hist_out": (str, ""),
        "hist_runs": (int, 10000),
        "hist_bins": (int, 64),
    },
    "measure": {
        **COMMON,
        **DEVICE,
        "dt": (float, 0.01),
        "t_end": (float, 30.0),
        "record_every": (int, 10),
        "preset": (str, ""),
        "rho11": (float, 1.0),
        "rho12_re": (float, 0.0),
        "rho12_im": (float, 0.0),
        "mirror": (_bool, False),
        "potential_out": (str, ""),
        "potential_points": (int, 401),
    },
    "calibrate": {
        **COMMON,
        **DEVICE,
        "runs": (int, 0),
        "z": (_opt_float, 2.0),
        "z_values": (_float_list, []),
        "dt": (float, 2e-3),
        "t_end": (float, 20.0),
        "grid_min": (float, -0.5),
        "grid_max": (float, 0.5),
        "grid_n": (int, 11),
        "mode": (_mode, "decoupled"),
        "workers": (int, 1),
    },
    "born": {
        **COMMON,
        **DEVICE,
        "z": (_opt_float, math.sqrt(math.pi) / 2.0),
        "dt": (float, 0.01),
        "t_end": (float, 30.0),
        "grid_half_width": (float, 0.05),
        "grid_n": (int, 11),
    },
}


def parse_text(text: str, source: str = "<config>") -> dict[str, str]:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigurationError(f"{source}:{lineno}: empty key")
        if key in raw:
            raise ConfigurationError(f"{source}:{lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def parse_assignment(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise ConfigurationError(f"--set expects key=value, got {text!r}")
    key, value = (s.strip() for s in text.split("=", 1))
    return key, value


@dataclass
class RunConfig:
    """Resolved configuration for one command."""

    command: str
    values: dict[str, Any]
    explicit: set[str] = field(default_factory=set)

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    @classmethod
    def resolve(cls, command: str, layers: list[dict[str, str]]) -> "RunConfig":
        """Merge raw string layers (lowest precedence first) and validate them."""
        try:
            schema = SCHEMAS[command]
        except KeyError:
            raise ConfigurationError(f"unknown command {command!r}") from None
        values = {k: default for k, (_, default) in schema.items()}
        explicit: set[str] = set()
        for layer in layers:
            for key, text in layer.items():
                if key not in schema:
                    raise ConfigurationError(f"unknown key {key!r} for command {command!r}")
                conv = schema[key][0]
                try:
                    values[key] = conv(text)
                except ValueError as exc:
                    raise ConfigurationError(f"invalid value for {key!r}: {text!r} ({exc})") from None
                explicit.add(key)
        return cls(command, values, explicit)

    def dump(self) -> str:
        def fmt(v):
            if isinstance(v, float):
                return repr(v)
            if isinstance(v, list):
                return ",".join(repr(x) for x in v)
            if v is None:
                return "none"
            return str(v)

        lines = [f"# resolved configuration for '{self.command}'"]
        lines += [f"{k} = {fmt(self.values[k])}" for k in sorted(self.values)]
        return "\n".join(lines) + "\n"


def load(command: str, path: str | Path | None, overrides: list[dict[str, str]]) -> RunConfig:
    layers = []
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config file {path}: {exc}") from None
        layers.append(parse_text(text, str(path)))
    return RunConfig.resolve(command, layers + overrides)
