"""Run configuration, presets and the flat ``key = value`` config format."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

from . import models
from ._validation import check_epsilon, check_gamma, check_levels, check_mu_bar, check_relaxation
from .dyadic_mesh import MeshGeometry, as_boundary
from .lbm_core import SchemeSpec

SCHEMES = ("d1q2", "d1q3", "d1q5", "euler")
DATA = ("I", "II", "III", "IV", "V", "sw", "sod")

# sqrt(g * h) must stay below lambda = 2 for h <= 2, which rules out g = 9.81.
SW_PRESET_GRAVITY = 1.0


@dataclass
class RunConfig:
    scheme: str = "d1q2"
    flux: str = "advection"
    c: float = 0.75
    g: float = models.DEFAULT_GRAVITY
    gamma_gas: float = 1.4
    alpha: float = 1.0
    beta: float = 1.0
    datum: str = "I"
    a: float = -3.0
    b: float = 3.0
    min_level: int = 2
    max_level: int = 9
    root_cells: int = 1
    gamma: int = 1
    epsilon: float = 1e-4
    mu_bar: float = math.inf
    lam: float = 1.0
    s: float = 1.0
    s_extra: tuple = ()
    T: float = 0.4
    collision: str = "leaves"
    boundary: str = "copy"
    preset: str | None = None
    out: str = "out"
    norm_p: int = 1

    def validate(self) -> "RunConfig":
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.datum not in DATA:
            raise ValueError(f"unknown initial datum {self.datum!r}; expected one of {DATA}")
        self.min_level, self.max_level = check_levels(self.min_level, self.max_level)
        self.epsilon = check_epsilon(self.epsilon)
        self.mu_bar = check_mu_bar(self.mu_bar)
        self.gamma = check_gamma(self.gamma)
        self.s = check_relaxation(self.s)
        self.s_extra = tuple(check_relaxation(x) for x in self.s_extra)
        if self.collision not in ("leaves", "reconstructed"):
            raise ValueError(f"collision must be 'leaves' or 'reconstructed', got {self.collision!r}")
        self.boundary = as_boundary(self.boundary).value
        if not self.a < self.b:
            raise ValueError("domain requires a < b")
        if int(self.root_cells) != self.root_cells or self.root_cells < 1:
            raise ValueError(f"root_cells must be a positive integer, got {self.root_cells}")
        self.root_cells = int(self.root_cells)
        if not self.T >= 0:
            raise ValueError("final time must be >= 0")
        if not self.lam > 0:
            raise ValueError("lattice velocity must be positive")
        if self.norm_p != 1:
            raise ValueError("only the weighted l1 norm (p = 1) is implemented")
        scalar = self.datum in models.SCALAR_TESTS
        if scalar != (self.scheme == "d1q2"):
            raise ValueError(f"initial datum {self.datum!r} does not fit scheme {self.scheme!r}")
        if self.scheme == "euler" and self.datum != "sod":
            raise ValueError("the Euler scheme runs the Sod datum")
        return self

    @property
    def geometry(self) -> MeshGeometry:
        return MeshGeometry(float(self.a), float(self.b), int(self.min_level), int(self.max_level), int(self.root_cells))

    def build_scheme(self) -> SchemeSpec:
        if self.scheme == "d1q2":
            return models.build_d1q2(models.ScalarFlux(self.flux, self.c), self.lam, self.s)
        if self.scheme == "d1q3":
            return models.build_d1q3_sw(self.g, self.lam, self.s)
        if self.scheme == "d1q5":
            s3, s4 = self.s_extra or (1.0, 1.0)
            return models.build_d1q5_sw(self.g, self.lam, self.alpha, self.beta, self.s, s3, s4)
        return models.build_euler_vectorial(self.gamma_gas, self.lam, self.s)

    def initial_datum(self) -> models.InitialDatum:
        if self.datum in models.SCALAR_TESTS:
            return models.scalar_initial_datum(self.datum)
        if self.datum == "sw":
            return models.shallow_water_riemann()
        return models.sod_datum()

    def has_exact_solution(self) -> bool:
        test = models.SCALAR_TESTS.get(self.datum)
        return test is not None and test["flux"] == self.flux and (self.flux == "burgers" or self.c == 0.75)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["s_extra"] = list(self.s_extra)
        return d

    def reference_key(self) -> str:
        """Content hash of everything the uniform reference trajectory depends on."""
        d = self.to_dict()
        for k in ("epsilon", "mu_bar", "gamma", "collision", "min_level", "preset", "out", "norm_p"):
            d.pop(k)
        blob = json.dumps(d, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:20]


def preset(name: str, **overrides) -> RunConfig:
    """Named bundles for every benchmark, expanded before validation.

    Benchmarks use cells of width ``2**-j`` at level ``j`` (``root_cells`` equal
    to the domain length), so ``max_level = 9`` means ``dx = 1/512``.
    """
    key = name.upper() if name.upper() in models.SCALAR_TESTS else name.lower()
    if key in models.SCALAR_TESTS:
        test = models.SCALAR_TESTS[key]
        cfg = RunConfig(scheme="d1q2", flux=test["flux"], datum=key, a=-3.0, b=3.0, min_level=2, max_level=9,
                        root_cells=6, gamma=1, epsilon=1e-4, lam=1.0, mu_bar=test["mu_bar"], T=test["T"], preset=key)
    elif key in ("sw", "sw-d1q3", "d1q3"):
        cfg = RunConfig(scheme="d1q3", datum="sw", a=-1.0, b=1.0, lam=2.0, T=0.2, mu_bar=0.0, g=SW_PRESET_GRAVITY,
                        root_cells=2, preset="sw-d1q3")
    elif key in ("sw-d1q5", "d1q5"):
        cfg = RunConfig(scheme="d1q5", datum="sw", a=-1.0, b=1.0, lam=2.0, T=0.2, mu_bar=0.0, g=SW_PRESET_GRAVITY,
                        s_extra=(1.0, 1.0), root_cells=2, preset="sw-d1q5")
    elif key == "sod":
        cfg = RunConfig(scheme="euler", datum="sod", a=-1.0, b=1.0, lam=3.0, T=0.4, s=1.75, mu_bar=0.0,
                        gamma_gas=1.4, root_cells=2, preset="sod")
    else:
        raise ValueError(f"unknown preset {name!r}")
    return cfg.replace(**overrides) if overrides else cfg


PRESETS = ("I", "II", "III", "IV", "V", "sw-d1q3", "sw-d1q5", "sod")

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def parse_value(key: str, raw: str):
    if key not in _FIELD_TYPES:
        raise ValueError(f"unknown configuration key {key!r}")
    raw = raw.strip()
    kind = _FIELD_TYPES[key]
    if key == "mu_bar":
        return check_mu_bar(raw)
    if key == "s_extra":
        return tuple(float(x) for x in raw.replace(",", " ").split())
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if key == "preset":
        return raw or None
    return raw


def load_config_file(path) -> dict:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = (x.strip() for x in line.split("=", 1))
        out[key] = parse_value(key, value)
    return out


def build_config(file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Preset first, then file values, then flag overrides; validated."""
    values = dict(file_values or {})
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    name = values.pop("preset", None)
    cfg = preset(name) if name else RunConfig()
    return cfg.replace(**values).validate()


__all__ = ["RunConfig", "preset", "PRESETS", "build_config", "load_config_file", "parse_value"]
