"""Run configuration for the command-line front end."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

COMMANDS = ("classify", "monodromy", "transport", "integrate", "selftest")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    presentation: object = None
    generators: list | None = None
    lattice: dict | None = None
    family: dict | None = None
    path: dict | None = None
    semidirect: dict | None = None
    steps: int = 400
    samples: int = 101
    tol: float = 1e-6
    seed: int = 0
    arrows: int = 20
    appendix: bool = False
    use_family: bool = False
    out: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if not isinstance(self.steps, int) or self.steps < 4:
            raise ConfigError("steps must be an integer >= 4")
        if not isinstance(self.samples, int) or self.samples < 3:
            raise ConfigError("samples must be an integer >= 3")
        if not isinstance(self.arrows, int) or self.arrows < 1:
            raise ConfigError("arrows must be a positive integer")
        if not isinstance(self.tol, (int, float)) or not (0 < self.tol < 1):
            raise ConfigError("tol must lie in (0, 1)")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        needs = {"classify": "presentation", "transport": "presentation", "integrate": "presentation"}
        key = needs.get(self.command)
        if key and getattr(self, key) is None:
            raise ConfigError(f"{self.command} needs a {key!r} entry")
        if self.command == "monodromy":
            if self.use_family and self.family is None:
                raise ConfigError("--family needs a 'family' entry")
            if not self.use_family and self.generators is None and self.lattice is None and self.presentation is None:
                raise ConfigError("monodromy needs 'generators', 'lattice' or 'presentation'")

    @classmethod
    def keys(cls):
        return {f.name for f in fields(cls)} - {"command", "use_family"}


def load_config(command: str, path: str | None, overrides: dict) -> RunConfig:
    """Merge a JSON config file with command-line overrides; unknown keys are rejected."""
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    unknown = set(data) - RunConfig.keys()
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(command=command, **data)
