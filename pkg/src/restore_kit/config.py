"""Run configuration files.

A config is a sectioned ``key = value`` file::

    [run]
    command = run-adaptive
    seed = 1

    [target]
    name = transformed_beta

    [regeneration]
    mean = 0.5
    variance = 1

    [engine]
    minus_bound = 0.5
    horizon_time = 1e5

Every key is checked against the schema for the command and target; errors
name the key and the line it came from.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = [
    "COMMANDS",
    "TARGET_NAMES",
    "ConfigError",
    "RunSpec",
    "parse_config",
    "parse_text",
    "preset_names",
    "preset_path",
]

COMMANDS = (
    "run-standard",
    "run-adaptive",
    "run-minimal-demo",
    "run-rwm",
    "estimate-z",
    "rate-quantiles",
    "guidance",
)


class ConfigError(ValueError):
    pass


# value parsers; each takes the raw string and returns a value or raises ValueError

def _float(lo=-math.inf, hi=math.inf, lo_open=False, hi_open=False):
    def parse(s):
        v = float(s)
        if not math.isfinite(v):
            raise ValueError(f"{s!r} is not finite")
        if v < lo or (lo_open and v == lo) or v > hi or (hi_open and v == hi):
            left = "(" if lo_open else "["
            right = ")" if hi_open else "]"
            raise ValueError(f"{v:g} outside {left}{lo:g}, {hi:g}{right}")
        return v
    return parse


def _int(lo=-(2 ** 63), hi=2 ** 63):
    def parse(s):
        v = float(s)
        if not v.is_integer():
            raise ValueError(f"{s!r} is not an integer")
        v = int(v)
        if v < lo:
            raise ValueError(f"{v} is below the minimum {lo}")
        if v > hi:
            raise ValueError(f"{v} is above the maximum {hi}")
        return v
    return parse


def _bool(s):
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{s!r} is not a boolean")


def _vector(s):
    parts = [p for p in re.split(r"[,\s]+", s.strip()) if p]
    if not parts:
        raise ValueError("empty vector")
    v = np.array([float(p) for p in parts])
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    return v


def _or_auto(parse):
    def wrapped(s):
        return "auto" if s.strip().lower() == "auto" else parse(s)
    return wrapped


def _text(s):
    s = s.strip()
    if not s:
        raise ValueError("empty value")
    return s


POS = _float(0.0, lo_open=True)
NONNEG = _float(0.0)
POS_INT = _int(1)

# key -> (parser, default); default REQUIRED means the key must be present
REQUIRED = object()

TARGET_SCHEMAS = {
    "std_gaussian": {"dim": (POS_INT, 1), "log_scale": (_float(), 0.0)},
    "gaussian": {"mean": (_vector, REQUIRED), "cov": (_vector, REQUIRED),
                 "log_scale": (_float(), 0.0)},
    "transformed_beta": {},
    "multivariate_t": {"nu": (POS, 10.0), "dim": (POS_INT, 2)},
    "gaussian_mixture": {"weights": (_vector, None)},
    "pump": {"c1": (POS, 1.802), "c2": (POS, 2.01), "c3": (POS, 1.01)},
    "lgcp": {"grid": (POS_INT, 5), "data_seed": (_int(0), None)},
    "logistic": {"data": (_text, "breast_cancer"), "prior_var": (POS, 400.0),
                 "synthetic_n": (POS_INT, 500), "synthetic_seed": (_int(0), 0)},
}
TARGET_NAMES = tuple(TARGET_SCHEMAS)

_HORIZON = {"n_tours": (POS_INT, None), "horizon_time": (POS, None)}
_PILOT = {
    "pilot_steps": (POS_INT, 20000),
    "pilot_thin": (POS_INT, 10),
    "pilot_burn_in": (_int(0), 2000),
}
_STANDARD = {
    "regen_constant": (_or_auto(POS), REQUIRED),
    "safety_factor": (_float(1.0), 1.1),
    "rate_bound": (POS, REQUIRED),
    "output_rate": (POS, None),
    "output_spacing": (POS, None),
    "record_events": (_bool, True),
    **_HORIZON,
    **_PILOT,
}
_RWM = {
    "scale": (_or_auto(POS), "auto"),
    "steps": (POS_INT, REQUIRED),
    "thin": (POS_INT, 1),
    "burn_in_steps": (_int(0), 0),
}
ENGINE_SCHEMAS = {
    "run-standard": _STANDARD,
    "estimate-z": _STANDARD,
    "run-adaptive": {
        "dominance_time": (POS, 1000.0),
        "plus_bound": (POS, None),
        "minus_bound": (POS, None),
        "output_rate": (POS, 10.0),
        "burn_in": (NONNEG, 0.0),
        "freeze_after": (NONNEG, None),
        "record_events": (_bool, True),
        **_HORIZON,
    },
    "run-minimal-demo": {
        "output_rate": (POS, 1000.0),
        "rate_bound": (POS, None),
        "record_events": (_bool, True),
        **_HORIZON,
    },
    "run-rwm": _RWM,
    "rate-quantiles": {
        **_RWM,
        "regen_constant": (_or_auto(POS), "auto"),
        "safety_factor": (_float(1.0), 1.1),
        "levels": (_vector, None),
    },
    "guidance": {"d": (POS_INT, REQUIRED), "eps": (_float(0.0, 1.0, True, True), 1e-4)},
}
RUN_SCHEMA = {"command": (_text, None), "seed": (_int(0), 0), "output_dir": (_text, "out")}
REGEN_SCHEMA = {"mean": (_vector, None), "variance": (_vector, None)}
TRANSFORM_SCHEMA = {"enabled": (_bool, False), "map": (_text, None), "grad_tol": (POS, 1e-6)}

# commands that ignore a target / regeneration law
_NO_TARGET = ("guidance", "run-minimal-demo")
_USES_REGEN = ("run-standard", "estimate-z", "run-adaptive", "rate-quantiles")


@dataclass
class RunSpec:
    command: str
    seed: int = 0
    output_dir: str = "out"
    target_name: str | None = None
    target_params: dict = field(default_factory=dict)
    regeneration: dict = field(default_factory=dict)
    engine: dict = field(default_factory=dict)
    transform: dict = field(default_factory=dict)
    source: str = "<config>"

    def replace(self, **changes) -> "RunSpec":
        return RunSpec(**{**self.__dict__, **changes})


def preset_names() -> list[str]:
    root = resources.files("restore_kit") / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def preset_path(name: str) -> Path:
    path = Path(str(resources.files("restore_kit") / "presets" / f"{name}.cfg"))
    if not path.exists():
        raise ConfigError(f"no preset named {name!r}; available: {', '.join(preset_names())}")
    return path


def _key_lines(text: str) -> dict:
    """``(section, key) -> line number`` for every assignment in ``text``."""
    lines = {}
    section = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[(.+)\]$", line)
        if m:
            section = m.group(1).strip().lower()
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", line)
        if m and section is not None:
            lines.setdefault((section, m.group(1).strip().lower()), no)
    return lines


class _Reader:
    """Pulls typed values out of a parsed file and reports where they came from."""

    def __init__(self, parser, lines, source, overrides):
        self.parser = parser
        self.lines = lines
        self.source = source
        self.overrides = overrides  # (section, key) -> raw string

    def where(self, section, key):
        if (section, key) in self.overrides:
            return f"{self.source}: command-line override {section}.{key}"
        no = self.lines.get((section, key))
        return f"{self.source}:{no}" if no else f"{self.source}: [{section}]"

    def raw(self, section, key):
        if (section, key) in self.overrides:
            return self.overrides[(section, key)]
        if self.parser.has_option(section, key):
            return self.parser.get(section, key)
        return None

    def keys(self, section):
        keys = set(self.parser.options(section)) if self.parser.has_section(section) else set()
        return keys | {k for s, k in self.overrides if s == section}

    def section(self, section, schema, context=""):
        unknown = sorted(self.keys(section) - set(schema))
        if unknown:
            key = unknown[0]
            raise ConfigError(
                f"{self.where(section, key)}: unknown key {key!r} in [{section}]{context}; "
                f"allowed: {', '.join(sorted(schema)) or 'none'}"
            )
        out = {}
        for key, (parse, default) in schema.items():
            raw = self.raw(section, key)
            if raw is None:
                if default is REQUIRED:
                    raise ConfigError(f"{self.source}: missing required key {key!r} in [{section}]{context}")
                out[key] = default
                continue
            try:
                out[key] = parse(raw)
            except ValueError as exc:
                raise ConfigError(f"{self.where(section, key)}: bad value for {key!r}: {exc}") from None
        return out


def _split_overrides(overrides) -> dict:
    """``section.key=value`` or ``key=value`` (the latter goes to [engine])."""
    out = {}
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, value = item.split("=", 1)
        key = key.strip().lower()
        section, _, name = key.rpartition(".")
        out[(section or "engine", name)] = value.strip()
    return out


def parse_text(text: str, source: str = "<config>", command: str | None = None,
               overrides=None) -> RunSpec:
    """Parse and validate config ``text``. ``command`` overrides ``[run] command``."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    reader = _Reader(parser, _key_lines(text), source, _split_overrides(overrides))
    known = {"run", "target", "regeneration", "engine", "transform"}
    for s in list(parser.sections()) + [s for s, _ in reader.overrides]:
        if s not in known:
            raise ConfigError(f"{source}: unknown section [{s}]; allowed: {', '.join(sorted(known))}")

    run = reader.section("run", RUN_SCHEMA)
    cmd = command or run["command"]
    if cmd is None:
        raise ConfigError(f"{source}: no command given on the command line or in [run]")
    if cmd not in COMMANDS:
        raise ConfigError(f"{reader.where('run', 'command')}: unknown command {cmd!r}")
    if command and run["command"] and run["command"] != command:
        raise ConfigError(
            f"{reader.where('run', 'command')}: config is for {run['command']!r}, "
            f"not {command!r}"
        )
    spec = RunSpec(command=cmd, seed=run["seed"], output_dir=run["output_dir"], source=source)
    ctx = f" for {cmd}"
    spec.engine = reader.section("engine", ENGINE_SCHEMAS[cmd], ctx)

    if cmd in _NO_TARGET:
        for s in ("target", "regeneration", "transform"):
            if reader.keys(s):
                key = sorted(reader.keys(s))[0]
                raise ConfigError(f"{reader.where(s, key)}: [{s}] is not used by {cmd}")
    else:
        name = reader.raw("target", "name")
        if name is None:
            raise ConfigError(f"{source}: missing required key 'name' in [target]")
        name = name.strip()
        if name not in TARGET_SCHEMAS:
            raise ConfigError(
                f"{reader.where('target', 'name')}: unknown target {name!r}; "
                f"allowed: {', '.join(TARGET_NAMES)}"
            )
        spec.target_name = name
        params = reader.section("target", {"name": (_text, None), **TARGET_SCHEMAS[name]},
                                f" for target {name}")
        params.pop("name")
        spec.target_params = params
        if cmd in _USES_REGEN:
            spec.regeneration = reader.section("regeneration", REGEN_SCHEMA)
        elif reader.keys("regeneration"):
            key = sorted(reader.keys("regeneration"))[0]
            raise ConfigError(f"{reader.where('regeneration', key)}: [regeneration] is not used by {cmd}")
        spec.transform = reader.section("transform", TRANSFORM_SCHEMA)

    _check_engine(spec, reader)
    return spec


def _check_engine(spec: RunSpec, reader: _Reader):
    e = spec.engine
    src = spec.source
    if "n_tours" in e and (e["n_tours"] is None) == (e["horizon_time"] is None):
        raise ConfigError(f"{src}: set exactly one of n_tours and horizon_time in [engine]")
    if spec.command in ("run-standard", "estimate-z"):
        if (e["output_rate"] is None) == (e["output_spacing"] is None):
            raise ConfigError(f"{src}: set exactly one of output_rate and output_spacing in [engine]")
    levels = e.get("levels")
    if levels is not None and not np.all((levels > 0) & (levels < 1)):
        raise ConfigError(f"{reader.where('engine', 'levels')}: quantile levels must lie in (0, 1)")
    var = spec.regeneration.get("variance")
    if var is not None and not np.all(var > 0):
        raise ConfigError(f"{reader.where('regeneration', 'variance')}: variances must be positive")


def parse_config(path, command: str | None = None, overrides=None) -> RunSpec:
    """Read a config file, or a shipped preset when ``path`` names one."""
    p = Path(path)
    if not p.exists():
        if re.fullmatch(r"[A-Za-z0-9_]+", str(path)) and str(path) in preset_names():
            p = preset_path(str(path))
        else:
            raise ConfigError(f"config file {path} not found")
    return parse_text(p.read_text(), source=str(p), command=command, overrides=overrides)
