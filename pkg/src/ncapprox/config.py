"""Line-oriented experiment configuration.

Files hold ``key = value`` lines, ``#`` comments, and optional topology
lines of the form ``node <id> <role>`` / ``link <src> <dst> <channel>``.
Every run is identified by the hash of the resolved configuration (file
content plus seed and trial override), which is stamped on every output
row so result tables are self-describing.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

from .channel import Topology
from .gf import GaloisField

__all__ = ["ConfigError", "ExperimentConfig", "parse_config_text"]


class ConfigError(ValueError):
    """Malformed or incomplete experiment configuration."""


def parse_config_text(text: str) -> tuple[dict[str, str], list[str]]:
    """Split config text into key/value pairs and raw topology lines."""
    values: dict[str, str] = {}
    topology: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith(("node ", "link ")):
            topology.append(line)
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value.strip()
    return values, topology


@dataclass
class ExperimentConfig:
    """Parsed configuration plus the run identity (seed, trials, hash)."""

    name: str
    seed: int
    values: dict[str, str]
    topology_lines: list[str] = dc_field(default_factory=list)
    trials_override: int | None = None

    def __post_init__(self):
        if not 0 <= self.seed < (1 << 64):
            raise ConfigError(f"seed {self.seed} outside u64 range")
        self._used: set[str] = set()

    @classmethod
    def from_text(cls, name: str, text: str, seed: int,
                  trials: int | None = None) -> "ExperimentConfig":
        values, topo = parse_config_text(text)
        return cls(name, seed, values, topo, trials)

    @classmethod
    def from_file(cls, name: str, path, seed: int,
                  trials: int | None = None) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_text(name, fh.read(), seed, trials)

    # -- identity -------------------------------------------------------------

    @property
    def config_hash(self) -> str:
        payload = "\n".join(
            [self.name, str(self.seed), str(self.trials_override)]
            + [f"{k}={v}" for k, v in sorted(self.values.items())]
            + self.topology_lines
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:12]

    # -- typed accessors --------------------------------------------------------

    def _raw(self, key: str, default=None, required: bool = False) -> str | None:
        self._used.add(key)
        if key in self.values:
            return self.values[key]
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return default

    def get_str(self, key: str, default: str | None = None,
                required: bool = False) -> str:
        return self._raw(key, default, required)

    def get_int(self, key: str, default: int | None = None,
                required: bool = False) -> int:
        raw = self._raw(key, None, required)
        if raw is None:
            return default
        try:
            return int(raw, 0)
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: {raw!r} is not an integer") from exc

    def get_float(self, key: str, default: float | None = None,
                  required: bool = False) -> float:
        raw = self._raw(key, None, required)
        if raw is None:
            return default
        try:
            return float(Fraction(raw))  # accepts '1/24' as well as '0.05'
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"key {key!r}: {raw!r} is not a number") from exc

    def get_bool(self, key: str, default: bool = False) -> bool:
        raw = self._raw(key)
        if raw is None:
            return default
        if raw.lower() in ("true", "yes", "1", "on"):
            return True
        if raw.lower() in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"key {key!r}: {raw!r} is not a boolean")

    def get_fraction(self, key: str, default: Fraction | None = None,
                     required: bool = False) -> Fraction:
        raw = self._raw(key, None, required)
        if raw is None:
            return default
        try:
            return Fraction(raw)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"key {key!r}: {raw!r} is not a fraction") from exc

    def get_int_list(self, key: str, default: list[int] | None = None,
                     required: bool = False) -> list[int]:
        raw = self._raw(key, None, required)
        if raw is None:
            return list(default) if default is not None else None
        try:
            return [int(v.strip(), 0) for v in raw.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: {raw!r} is not an integer list") from exc

    def get_float_list(self, key: str, default: list[float] | None = None,
                       required: bool = False) -> list[float]:
        raw = self._raw(key, None, required)
        if raw is None:
            return list(default) if default is not None else None
        try:
            return [float(Fraction(v.strip())) for v in raw.split(",") if v.strip()]
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"key {key!r}: {raw!r} is not a number list") from exc

    # -- composite accessors ----------------------------------------------------

    def trials(self, default: int) -> int:
        if self.trials_override is not None:
            if self.trials_override < 1:
                raise ConfigError("trials must be positive")
            return self.trials_override
        n = self.get_int("trials", default)
        if n < 1:
            raise ConfigError("trials must be positive")
        return n

    def field_for(self, z: int | None = None) -> GaloisField:
        from .gf import field

        r = self.get_int("r", required=True)
        zz = self.get_int("z", 0) if z is None else z
        poly = self.get_int("poly")
        return field(r, zz, poly)

    def topology(self) -> Topology:
        if not self.topology_lines:
            raise ConfigError("configuration declares no topology")
        fan_in = self.get_int("recode_fan_in")
        return Topology.from_lines(self.topology_lines, fan_in)

    def reject_unknown_keys(self) -> None:
        """Call after reading everything; flags typos before the run starts."""
        unknown = set(self.values) - self._used
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
