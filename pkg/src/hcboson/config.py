"""Run configuration: one INI-style file with sections, overridable from the
command line; every run also emits its resolved config as a JSON sidecar
that can be fed back in (`hcboson trace --config run.json`).
"""

from __future__ import annotations

import configparser
import json
import os
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError

_SQRT_2PI = float(np.sqrt(2.0 * np.pi))


@dataclass(frozen=True)
class RunConfig:
    # [lattice]
    shape: str = "chain"  # chain | ring | grid | custom
    n: int = 5
    rows: int = 0  # grid only
    cols: int = 0
    edges: tuple = ()  # custom only: ((i, j), ...)
    # [physics]
    n_particles: int = 1
    initial_sites: tuple = (0,)
    J: float = 1.0
    U: float = 0.0
    # [evolution]
    dt: float = 0.1
    t_max: float = 50.0
    propagator: str = "auto"
    # [frame]
    x0: float = _SQRT_2PI
    k0: float = _SQRT_2PI
    zeta: float = float(np.sqrt(0.5))
    wx: int = 2
    wk: int = 2
    grid_dx: float = 0.05
    extent: float = 12.0
    leak_tol: float = 0.15
    oscillator_length: float = 1.0
    # [entropy]
    enable_w: bool = True
    method: str = "factorized"  # factorized | exact
    theta: float = 1e-14
    cost_budget: float = 5e8
    backend: str = "auto"  # auto | compiled | reference
    # [analysis]
    eps: float = 0.2
    horizon: float = 2e4
    # [output]
    directory: str = "."
    label: str = ""

    def n_sites(self) -> int:
        return self.rows * self.cols if self.shape == "grid" else self.n

    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))

    def validate(self) -> "RunConfig":
        if self.shape not in ("chain", "ring", "grid", "custom"):
            raise ConfigError(f"unknown lattice shape {self.shape!r}")
        if self.shape == "grid" and (self.rows < 1 or self.cols < 1):
            raise ConfigError("grid shape needs rows >= 1 and cols >= 1")
        if self.shape == "custom" and not self.edges:
            raise ConfigError("custom shape needs an edge list")
        n = self.n_sites()
        sites = tuple(self.initial_sites)
        if len(set(sites)) != self.n_particles:
            raise ConfigError(
                f"initial_sites {sites} must be {self.n_particles} distinct sites")
        if any(not 0 <= s < n for s in sites):
            raise ConfigError(f"initial_sites {sites} outside 0..{n - 1}")
        if self.dt <= 0 or self.t_max <= 0:
            raise ConfigError("dt and t_max must be positive")
        if self.method not in ("factorized", "exact"):
            raise ConfigError(f"unknown entropy method {self.method!r}")
        if self.theta < 0:
            raise ConfigError("theta must be >= 0")
        if self.eps <= 0:
            raise ConfigError("eps must be positive")
        return self

    def with_overrides(self, **kwargs) -> "RunConfig":
        return replace(self, **kwargs)


# (section, key, field name, converter tag)
_LAYOUT = [
    ("lattice", "shape", "shape", "str"),
    ("lattice", "n", "n", "int"),
    ("lattice", "rows", "rows", "int"),
    ("lattice", "cols", "cols", "int"),
    ("lattice", "edges", "edges", "edges"),
    ("physics", "n_particles", "n_particles", "int"),
    ("physics", "initial_sites", "initial_sites", "sites"),
    ("physics", "J", "J", "float"),
    ("physics", "U", "U", "float"),
    ("evolution", "dt", "dt", "float"),
    ("evolution", "t_max", "t_max", "float"),
    ("evolution", "propagator", "propagator", "str"),
    ("frame", "x0", "x0", "float"),
    ("frame", "k0", "k0", "float"),
    ("frame", "zeta", "zeta", "float"),
    ("frame", "wx", "wx", "int"),
    ("frame", "wk", "wk", "int"),
    ("frame", "dx", "grid_dx", "float"),
    ("frame", "extent", "extent", "float"),
    ("frame", "leak_tol", "leak_tol", "float"),
    ("frame", "oscillator_length", "oscillator_length", "float"),
    ("entropy", "enable_w", "enable_w", "bool"),
    ("entropy", "method", "method", "str"),
    ("entropy", "theta", "theta", "float"),
    ("entropy", "cost_budget", "cost_budget", "float"),
    ("entropy", "backend", "backend", "str"),
    ("analysis", "eps", "eps", "float"),
    ("analysis", "horizon", "horizon", "float"),
    ("output", "directory", "directory", "str"),
    ("output", "label", "label", "str"),
]

_FIELD_TO_ENTRY = {entry[2]: entry for entry in _LAYOUT}


def _parse_value(tag: str, raw: str):
    raw = raw.strip()
    if tag == "str":
        return raw
    if tag == "int":
        return int(raw)
    if tag == "float":
        return float(raw)
    if tag == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"not a boolean: {raw!r}")
    if tag == "sites":
        if not raw:
            return ()
        return tuple(int(tok) for tok in raw.replace(",", ";").split(";") if tok)
    if tag == "edges":
        if not raw:
            return ()
        pairs = []
        for tok in raw.split(";"):
            tok = tok.strip()
            if not tok:
                continue
            a, _, b = tok.partition("-")
            pairs.append((int(a), int(b)))
        return tuple(pairs)
    raise ConfigError(f"unknown converter {tag!r}")


def _format_value(tag: str, value) -> str:
    if tag == "bool":
        return "true" if value else "false"
    if tag == "sites":
        return ";".join(str(s) for s in value)
    if tag == "edges":
        return ";".join(f"{a}-{b}" for a, b in value)
    if tag == "float":
        return repr(float(value))
    return str(value)


def config_to_mapping(cfg: RunConfig) -> dict:
    """Nested {section: {key: string}} view of a config (sidecar payload)."""
    out: dict[str, dict[str, str]] = {}
    for section, key, fname, tag in _LAYOUT:
        out.setdefault(section, {})[key] = _format_value(tag, getattr(cfg, fname))
    return out


def config_from_mapping(mapping: dict) -> RunConfig:
    values = {}
    known = {(s, k): (f, tag) for s, k, f, tag in _LAYOUT}
    for section, items in mapping.items():
        for key, raw in items.items():
            if (section, key) not in known:
                raise ConfigError(f"unknown config key [{section}] {key}")
            fname, tag = known[(section, key)]
            try:
                values[fname] = _parse_value(tag, str(raw))
            except (ValueError, ConfigError) as exc:
                raise ConfigError(f"bad value for [{section}] {key}: {exc}") from exc
    return RunConfig(**values).validate()


def load_config(path: str) -> RunConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    if path.endswith(".json"):
        with open(path, encoding="utf-8") as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"malformed JSON config {path}: {exc}") from exc
        if "config" in payload:  # accept a full run sidecar
            payload = payload["config"]
        return config_from_mapping(payload)
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep key case: J and U are section keys
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    mapping = {s: dict(parser.items(s)) for s in parser.sections()}
    return config_from_mapping(mapping)


def apply_overrides(cfg: RunConfig, pairs) -> RunConfig:
    """Apply `section.key=value` strings on top of a config."""
    values = {}
    known = {f"{s}.{k}": (f, tag) for s, k, f, tag in _LAYOUT}
    for text in pairs:
        key, sep, raw = text.partition("=")
        if not sep:
            raise ConfigError(f"override {text!r} is not of the form "
                              f"section.key=value")
        key = key.strip()
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        fname, tag = known[key]
        try:
            values[fname] = _parse_value(tag, raw)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from exc
    return cfg.with_overrides(**values).validate()


def default_config_text() -> str:
    """A fully-commented template holding every default."""
    cfg = RunConfig()
    comments = {
        "lattice": ["shape: chain | ring | grid | custom",
                    "n: sites for chain/ring; grids use rows x cols",
                    "edges (custom only): '0-1;1-2;...'"],
        "physics": ["initial_sites: ';'-separated, one per particle",
                    "J: hopping energy (time unit 1/J); U: neighbour energy"],
        "evolution": ["propagator: auto | spectral | krylov "
                      "(auto = spectral up to dim 4000)"],
        "frame": ["x0*k0 must equal 2*pi (Planck cell)",
                  "window (wx, wk) -> (2wx+1)(2wk+1) cells per site",
                  "leak_tol gates the per-level window leakage"],
        "entropy": ["method: factorized (default) | exact (keeps cross terms)",
                    "theta: enumeration prune threshold; 0 disables pruning",
                    "backend: auto | compiled | reference"],
        "analysis": ["eps: regression-period neighbourhood (nats)",
                     "horizon: period search span in units of 1/J"],
        "output": ["directory may be overridden by $HCBOSON_OUTDIR"],
    }
    mapping = config_to_mapping(cfg)
    lines = []
    for section in mapping:
        lines.append(f"[{section}]")
        for note in comments.get(section, []):
            lines.append(f"# {note}")
        for key, val in mapping[section].items():
            lines.append(f"{key} = {val}")
        lines.append("")
    return "\n".join(lines)
