"""
Run configuration
-----------------

Every tunable of a run with its default, in one place::

    case          4            1 frequency, 2 reactive, 3 active, 4 all three layers
    layers        (from case)  comma list of freq, p, q
    stage_one     (from case)  layer kind stage I clusters
    layer_mode    measured     measured flow averaging, or formula (admittance based)
    band          0.1:1.0      Hz, inter-area band used for correlation
    window        none         none or hann, taper before the DFT
    clamp         zero         zero (drop negative correlation) or shift (C + 1)
    normalize     false        divide each layer by its largest weight
    alpha         0.5          subspace merging weight
    seed          0            unsigned 64-bit; ISLANDKIT_SEED env var if unset
    restarts      20           k-means restarts
    k             auto         island count, or auto for stage I
    repair        true         enforce connected islands

A config file holds ``key = value`` lines with the keys above (``#`` starts
a comment). File values replace defaults; flags given on the command line
win over the file.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigurationError
from .layers import CLAMP_POLICIES, LAYER_MODES
from .pipeline import CASES, IslandingConfig

LAYER_ALIASES = {
    "freq": "frequency", "frequency": "frequency", "f": "frequency",
    "p": "active", "active": "active",
    "q": "reactive", "reactive": "reactive",
}
SEED_ENV = "ISLANDKIT_SEED"


def parse_band(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in str(text).split(":"))
    except ValueError:
        raise ConfigurationError(f"band must look like lo:hi in Hz, got {text!r}") from None
    if not 0 <= lo < hi:
        raise ConfigurationError(f"band needs 0 <= lo < hi, got {lo}:{hi}")
    return lo, hi


def parse_layers(text: str) -> tuple[str, ...]:
    out = []
    for part in str(text).split(","):
        part = part.strip().lower()
        if part not in LAYER_ALIASES:
            raise ConfigurationError(f"unknown layer {part!r}; use freq, p or q")
        out.append(LAYER_ALIASES[part])
    if len(set(out)) != len(out):
        raise ConfigurationError("a layer is listed twice")
    return tuple(out)


def parse_k(text) -> int | None:
    if text is None or str(text).lower() == "auto":
        return None
    try:
        k = int(text)
    except ValueError:
        raise ConfigurationError(f"k must be 'auto' or an integer, got {text!r}") from None
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    return k


def parse_seed(text) -> int:
    try:
        seed = int(text)
    except (TypeError, ValueError):
        raise ConfigurationError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= seed < 2**64:
        raise ConfigurationError("seed must be an unsigned 64-bit integer")
    return seed


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    val = str(text).strip().lower()
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"expected a boolean, got {text!r}")


@dataclass(frozen=True)
class RunConfig:
    case: int = 4
    layers: tuple[str, ...] | None = None
    stage_one: str | None = None
    layer_mode: str = "measured"
    band: tuple[float, float] = (0.1, 1.0)
    window: str | None = None
    clamp: str = "zero"
    normalize: bool = False
    alpha: float = 0.5
    seed: int = 0
    restarts: int = 20
    k: int | None = None
    repair: bool = True
    paths: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.case not in CASES:
            raise ConfigurationError(f"case must be one of {sorted(CASES)}, got {self.case}")
        if self.layer_mode not in LAYER_MODES:
            raise ConfigurationError(f"layer mode must be one of {LAYER_MODES}")
        if self.clamp not in CLAMP_POLICIES:
            raise ConfigurationError(f"clamp must be one of {CLAMP_POLICIES}")
        if self.window not in (None, "hann"):
            raise ConfigurationError("window must be none or hann")
        if not self.alpha >= 0:
            raise ConfigurationError("alpha must be >= 0")
        if self.restarts < 1:
            raise ConfigurationError("restarts must be >= 1")
        parse_seed(self.seed)
        lo, hi = self.band
        if not 0 <= lo < hi:
            raise ConfigurationError("band needs 0 <= lo < hi")

    @property
    def layer_kinds(self) -> tuple[str, ...]:
        return self.layers if self.layers is not None else CASES[self.case][0]

    @property
    def stage_one_kind(self) -> str:
        if self.stage_one is not None:
            return self.stage_one
        if self.layers is not None:
            return self.layers[0]
        return CASES[self.case][1]

    def islanding(self) -> IslandingConfig:
        return IslandingConfig(
            alpha=self.alpha, seed=self.seed, restarts=self.restarts, k=self.k,
            stage_one=self.stage_one_kind, repair=self.repair, case=self.case,
        )

    def echo(self) -> dict:
        return {
            "case": self.case,
            "layers": list(self.layer_kinds),
            "stage_one": self.stage_one_kind,
            "layer_mode": self.layer_mode,
            "band": list(self.band),
            "window": self.window,
            "clamp": self.clamp,
            "normalize": self.normalize,
            "alpha": self.alpha,
            "seed": self.seed,
            "restarts": self.restarts,
            "k": "auto" if self.k is None else self.k,
            "repair": self.repair,
        }


_CONVERTERS = {
    "case": int,
    "layers": parse_layers,
    "stage_one": lambda s: LAYER_ALIASES.get(str(s).lower()) or _bad("stage_one", s),
    "layer_mode": str,
    "band": parse_band,
    "window": lambda s: None if str(s).lower() == "none" else str(s).lower(),
    "clamp": str,
    "normalize": _parse_bool,
    "alpha": float,
    "seed": parse_seed,
    "restarts": int,
    "k": parse_k,
    "repair": _parse_bool,
}


def _bad(key, value):
    raise ConfigurationError(f"invalid value {value!r} for {key}")


def coerce(key: str, value):
    if key not in _CONVERTERS:
        raise ConfigurationError(f"unknown configuration key {key!r}")
    try:
        return _CONVERTERS[key](value)
    except ConfigurationError:
        raise
    except (TypeError, ValueError):
        raise ConfigurationError(f"invalid value {value!r} for {key}") from None


def read_config_file(path) -> dict:
    """``key = value`` lines into typed overrides."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        out[key] = coerce(key, value.strip("\"'"))
    return out


def resolve(file_values: dict | None = None, flag_values: dict | None = None, env=None) -> RunConfig:
    """Defaults, then config file, then explicit flags; seed falls back to the environment."""
    env = os.environ if env is None else env
    merged: dict = {}
    if SEED_ENV in env:
        merged["seed"] = parse_seed(env[SEED_ENV])
    merged.update(file_values or {})
    merged.update({k: v for k, v in (flag_values or {}).items() if v is not None})
    known = {f.name for f in fields(RunConfig)}
    unknown = set(merged) - known
    if unknown:
        raise ConfigurationError(f"unknown configuration keys {sorted(unknown)}")
    return replace(RunConfig(), **merged)
