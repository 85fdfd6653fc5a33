"""Run configuration: key = value config files, validation, flag overrides."""

from __future__ import annotations

from dataclasses import dataclass, fields

__all__ = ["RunConfig", "ConfigError", "load_config", "parse_config_text", "apply_overrides"]


class ConfigError(ValueError):
    """Malformed or invalid run configuration."""


@dataclass
class RunConfig:
    """Scenario selection plus the numeric knobs shared across scenarios."""

    scenario: str = ""
    n: int | None = None
    k: int | None = None
    tau0: float = 25.0
    horizon: float = 10.0
    grid_points: int = 512
    grid_extent: float | None = None  # half-width L (line) or radius R (radial)
    dt: float = 0.01
    boundary: str = "pinned"
    vmin_stop: float = 1e-3
    seed: int = 0
    out: str = "runs"

    def require(self, *names: str):
        for name in names:
            if getattr(self, name) is None:
                raise ConfigError(f"missing required field {name!r}")

    def validate(self):
        if not self.scenario:
            raise ConfigError("missing required field 'scenario'")
        if self.n is not None:
            if self.n < 2:
                raise ConfigError(f"field 'n' out of range: need n >= 2, got {self.n}")
            if self.k is not None and not (1 <= self.k <= self.n - 1):
                raise ConfigError(
                    f"field 'k' out of range: need 1 <= k <= n-1, got k={self.k}, n={self.n}"
                )
        for name in ("tau0", "horizon", "dt", "vmin_stop"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"field {name!r} must be positive")
        if self.grid_points < 16:
            raise ConfigError("field 'grid_points' must be at least 16")
        if self.grid_extent is not None and self.grid_extent <= 0:
            raise ConfigError("field 'grid_extent' must be positive")
        if self.boundary not in ("pinned", "neumann"):
            raise ConfigError(f"field 'boundary' must be 'pinned' or 'neumann'")
        return self


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_INT_FIELDS = {"n", "k", "grid_points", "seed"}
_FLOAT_FIELDS = {"tau0", "horizon", "grid_extent", "dt", "vmin_stop"}
_STR_FIELDS = {"scenario", "boundary", "out"}


def _convert(key: str, raw: str, line_no: int):
    try:
        if key in _INT_FIELDS:
            return int(raw)
        if key in _FLOAT_FIELDS:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"line {line_no}: cannot parse {key} = {raw!r}") from exc


def parse_config_text(text: str) -> RunConfig:
    """Parse the line-oriented `key = value` format ('#' starts a comment)."""
    cfg = RunConfig()
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {raw_line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")
        if not value:
            raise ConfigError(f"line {line_no}: empty value for {key!r}")
        setattr(cfg, key, _convert(key, value, line_no))
    return cfg


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return parse_config_text(text)


def apply_overrides(cfg: RunConfig, overrides: dict) -> RunConfig:
    """Flag values win over config-file keys; None means 'not given'."""
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown override {key!r}")
        setattr(cfg, key, value)
    return cfg
