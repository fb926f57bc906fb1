"""Experiment configuration: a flat dataclass read from TOML key-value files."""

from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass, fields
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

TARGETS = ("gaussian", "mixture", "student")
SAMPLER_NAMES = ("malt", "ghmc", "hmc", "mala", "rhmc")


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field."""


@dataclass
class ExperimentConfig:
    target: str = "gaussian"
    d: int = 50
    a_norm: float = 0.5
    dof: float = 20.0
    scales: Optional[list] = None
    sampler: str = "malt"
    h: float = 0.2
    T: Optional[float] = None
    L: Optional[int] = None
    gamma: float = 0.0
    alpha: float = 0.0
    n_samples: int = 10000
    seed: int = 0
    out: str = "."
    threads: int = 1
    zero_policy: str = "clamp"
    iac_method: str = "geyer"

    def __post_init__(self):
        self.validate()

    def validate(self):
        def fail(name, msg):
            raise ConfigError(f"{name}: {msg}, got {getattr(self, name)!r}")

        if self.target not in TARGETS:
            fail("target", f"must be one of {', '.join(TARGETS)}")
        if self.sampler not in SAMPLER_NAMES:
            fail("sampler", f"must be one of {', '.join(SAMPLER_NAMES)}")
        for name in ("d", "n_samples", "threads"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                fail(name, "must be a positive integer")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            fail("seed", "must be an unsigned 64-bit integer")
        if not _finite(self.h) or self.h <= 0:
            fail("h", "must be positive")
        if self.T is not None and (not _finite(self.T) or self.T < self.h):
            fail("T", "must be a number >= h")
        if self.L is not None and (isinstance(self.L, bool) or not isinstance(self.L, int) or self.L < 1):
            fail("L", "must be a positive integer")
        if self.T is None and self.L is None:
            fail("T", "either T or L must be given")
        if not _finite(self.gamma) or self.gamma < 0:
            fail("gamma", "must be >= 0")
        if not _finite(self.alpha) or not 0 <= self.alpha < 1:
            fail("alpha", "must lie in [0, 1)")
        if not _finite(self.a_norm) or self.a_norm < 0:
            fail("a_norm", "must be >= 0")
        if not _finite(self.dof) or self.dof < 1:
            fail("dof", "must be >= 1")
        if self.scales is not None:
            if not isinstance(self.scales, list) or len(self.scales) != self.d:
                fail("scales", f"must be a list of d={self.d} numbers")
            if any(not _finite(s) or s <= 0 for s in self.scales):
                fail("scales", "entries must be positive")
        if self.zero_policy not in ("clamp", "resample"):
            fail("zero_policy", "must be clamp or resample")
        if self.iac_method not in ("geyer", "truncated"):
            fail("iac_method", "must be geyer or truncated")

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    def to_toml(self) -> str:
        lines = []
        for k, v in self.to_dict().items():
            lines.append(f"{k} = {_toml_value(v)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name: f for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(f"{key}: unknown configuration key")
        coerced = {}
        for key, value in data.items():
            if key in ("h", "T", "gamma", "alpha", "a_norm", "dof") and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            coerced[key] = value
        try:
            return cls(**coerced)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_toml(cls, text: str) -> "ExperimentConfig":
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config: not valid TOML ({exc})") from None
        for key, value in data.items():
            if isinstance(value, dict):
                raise ConfigError(f"{key}: nested tables are not supported; use flat keys")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path, overrides: Optional[dict] = None) -> "ExperimentConfig":
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"config: cannot read {path} ({exc.strerror})") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config: not valid TOML ({exc})") from None
        data.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return cls.from_dict(data)

    def sampler_config(self):
        from .samplers import SamplerConfig

        return SamplerConfig(h=self.h, T=self.T, L=self.L, gamma=self.gamma, alpha=self.alpha,
                             n_samples=self.n_samples, seed=self.seed, zero_policy=self.zero_policy)

    def build_target(self):
        from .targets import make_target

        return make_target(self.target, self.d, self.a_norm, self.dof, self.scales)


def _finite(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, list):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")
