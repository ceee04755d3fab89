"""Run-config files: sectioned ``key = value`` text plus a ROC row table.

Grammar (one item per line; ``#`` starts a comment)::

    [section]               one of system, profile, sweep, optimizer, simulation
    key = value             inside any section but profile
    builtin = table1        profile: the built-in 10-instant table, or
    k, p_fa, p_md           profile: one row per quantum index, k = 1..M in order

All ``[system]`` keys and ``[sweep] delay_cap`` are required. ``[simulation]``
is optional and its presence turns on Monte Carlo validation columns.
"""

from __future__ import annotations

import hashlib
import math
import re
import warnings
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .channel import SystemParams, num_instants
from .optimizer import OptimizerSettings, ProtocolVariant
from .sensing import ProfileError, SensingProfile, default_profile, validate
from .simulator import SimConfig

BUNDLED = ("fig1.cfg", "fig2.cfg")

_SYSTEM_KEYS = {
    "noise_density": float, "power_primary": float, "power_secondary": float, "bandwidth_hz": float,
    "slot_seconds": float, "sensing_quantum_seconds": float, "packet_bits": float,
    "var_primary_link": float, "var_secondary_link": float,
}
_SWEEP_KEYS = {"delay_cap": float, "lambda_start": float, "lambda_stop": float, "lambda_step": float,
               "variants": str, "output": str}
_OPTIMIZER_KEYS = {"multistarts": int, "grid_points_per_dim": int, "tolerance": float,
                   "max_iterations": int, "seed": int}
_SIMULATION_KEYS = {"n_slots": int, "warmup_slots": int, "seed": int}
_SECTIONS = {"system": _SYSTEM_KEYS, "profile": None, "sweep": _SWEEP_KEYS,
             "optimizer": _OPTIMIZER_KEYS, "simulation": _SIMULATION_KEYS}

_HEADER = re.compile(r"^\[\s*([A-Za-z_]+)\s*\]$")
_PAIR = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None,
                 field_path: str | None = None):
        self.line, self.column, self.field_path = line, column, field_path
        where = []
        if line is not None:
            where.append(f"line {line}" + (f", column {column}" if column is not None else ""))
        if field_path:
            where.append(field_path)
        super().__init__(f"{': '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class RunConfig:
    system: SystemParams
    profile: SensingProfile
    delay_cap: float
    lambda_start: float = 0.0
    lambda_stop: float = 0.6
    lambda_step: float = 0.01
    variants: tuple = tuple(ProtocolVariant)
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    simulation: SimConfig | None = None
    output_path: str = "results.csv"
    profile_builtin: bool = False

    def lambda_grid(self) -> np.ndarray:
        n = int(math.floor((self.lambda_stop - self.lambda_start) / self.lambda_step + 1e-9)) + 1
        # round so 0.07 prints as 0.07 and not 0.07000000000000001
        return np.round(self.lambda_start + self.lambda_step * np.arange(n), 12)

    def with_seed(self, seed: int) -> "RunConfig":
        sim = replace(self.simulation, seed=seed) if self.simulation else None
        return replace(self, optimizer=replace(self.optimizer, seed=seed), simulation=sim)


def _number(text, kind, line, column, path):
    try:
        value = kind(text)
    except ValueError:
        raise ConfigError(f"expected {kind.__name__}, got {text!r}", line, column, path) from None
    if kind is float and not math.isfinite(value):
        raise ConfigError(f"value must be finite, got {text!r}", line, column, path)
    return value


def _tokenize(text: str):
    """Yield ``(section, kind, payload, line, column)`` for every meaningful line."""
    section = None
    seen_sections = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].rstrip()
        stripped = body.strip()
        if not stripped:
            continue
        col = len(body) - len(body.lstrip()) + 1
        head = _HEADER.match(stripped)
        if head:
            section = head.group(1).lower()
            if section not in _SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno, col)
            if section in seen_sections:
                raise ConfigError(f"duplicate section [{section}]", lineno, col)
            seen_sections.add(section)
            yield section, "section", None, lineno, col
            continue
        if stripped.startswith("["):
            raise ConfigError("malformed section header", lineno, col)
        if section is None:
            raise ConfigError("content before the first [section]", lineno, col)
        pair = _PAIR.match(stripped)
        if pair:
            key, value = pair.groups()
            if not value:
                raise ConfigError(f"missing value for {key!r}", lineno, col + len(stripped))
            yield section, "pair", (key, value.strip(), col + stripped.index(value.strip())), lineno, col
        elif section == "profile":
            yield section, "row", stripped, lineno, col
        else:
            raise ConfigError("expected 'key = value'", lineno, col)


def parse_config(text: str, allow_nonmonotone_roc: bool = False) -> RunConfig:
    values = {name: {} for name in _SECTIONS}
    present = set()
    rows, builtin = [], None
    profile_line = None
    for section, kind, payload, line, col in _tokenize(text):
        if kind == "section":
            present.add(section)
            if section == "profile":
                profile_line = line
            continue
        if section == "profile":
            if kind == "pair":
                key, value, vcol = payload
                if key != "builtin":
                    raise ConfigError(f"unknown key {key!r}", line, col, f"profile.{key}")
                if value.lower() != "table1":
                    raise ConfigError(f"unknown built-in profile {value!r}", line, vcol, "profile.builtin")
                builtin = value.lower()
                continue
            cells = [c.strip() for c in payload.split(",")]
            if len(cells) != 3:
                raise ConfigError("profile rows need exactly 'k, p_fa, p_md'", line, col, "profile")
            k = _number(cells[0], int, line, col, "profile.k")
            fa = _number(cells[1], float, line, col, "profile.p_fa")
            md = _number(cells[2], float, line, col, "profile.p_md")
            rows.append((k, fa, md, line))
            continue
        key, value, vcol = payload
        schema = _SECTIONS[section]
        if key not in schema:
            raise ConfigError(f"unknown key {key!r}", line, col, f"{section}.{key}")
        if key in values[section]:
            raise ConfigError(f"duplicate key {key!r}", line, col, f"{section}.{key}")
        values[section][key] = _number(value, schema[key], line, vcol, f"{section}.{key}") \
            if schema[key] is not str else value

    system = _build_system(values["system"])
    profile = _build_profile(rows, builtin, profile_line, system, allow_nonmonotone_roc)
    sweep = values["sweep"]
    if "delay_cap" not in sweep:
        raise ConfigError("missing required key", field_path="sweep.delay_cap")
    delay_cap = sweep["delay_cap"]
    if not delay_cap > 1:
        raise ConfigError(f"delay_cap must exceed 1 slot, got {delay_cap}", field_path="sweep.delay_cap")
    start = sweep.get("lambda_start", 0.0)
    stop = sweep.get("lambda_stop", 0.6)
    step = sweep.get("lambda_step", 0.01)
    if not step > 0:
        raise ConfigError(f"lambda_step must be positive, got {step}", field_path="sweep.lambda_step")
    for name, v in (("lambda_start", start), ("lambda_stop", stop)):
        if not 0 <= v <= 1:
            raise ConfigError(f"{name} must lie in [0, 1], got {v}", field_path=f"sweep.{name}")
    if start > stop:
        raise ConfigError("lambda_start exceeds lambda_stop", field_path="sweep.lambda_start")
    try:
        variants = tuple(ProtocolVariant.parse(v) for v in sweep["variants"].split(",")) \
            if "variants" in sweep else tuple(ProtocolVariant)
    except ValueError as exc:
        raise ConfigError(str(exc), field_path="sweep.variants") from None
    try:
        optimizer = OptimizerSettings(**values["optimizer"])
    except ValueError as exc:
        raise ConfigError(str(exc), field_path="optimizer") from None
    simulation = None
    if "simulation" in present:
        sim = values["simulation"]
        if "n_slots" not in sim:
            raise ConfigError("missing required key", field_path="simulation.n_slots")
        try:
            simulation = SimConfig(**sim)
        except ValueError as exc:
            raise ConfigError(str(exc), field_path="simulation") from None
    return RunConfig(system=system, profile=profile, delay_cap=delay_cap, lambda_start=start,
                     lambda_stop=stop, lambda_step=step, variants=variants, optimizer=optimizer,
                     simulation=simulation, output_path=sweep.get("output", "results.csv"),
                     profile_builtin=builtin is not None)


def _build_system(values: dict) -> SystemParams:
    for key in _SYSTEM_KEYS:
        if key not in values:
            raise ConfigError("missing required key", field_path=f"system.{key}")
        if not values[key] > 0:
            raise ConfigError(f"must be strictly positive, got {values[key]}", field_path=f"system.{key}")
    try:
        return SystemParams(**values)
    except ValueError as exc:
        path = "system.sensing_quantum_seconds" if "sensing_quantum" in str(exc) else "system"
        raise ConfigError(str(exc), field_path=path) from None


def _build_profile(rows, builtin, profile_line, system, allow_nonmonotone):
    m = num_instants(system)
    if builtin and rows:
        raise ConfigError("give either 'builtin = table1' or rows, not both", profile_line, None, "profile")
    if builtin:
        try:
            return default_profile(m)
        except ValueError as exc:
            raise ConfigError(str(exc), profile_line, None, "profile.builtin") from None
    if not rows:
        raise ConfigError("missing [profile] section or rows", field_path="profile")
    for i, (k, *_rest, line) in enumerate(rows, start=1):
        if k != i:
            raise ConfigError(f"expected quantum index {i}, got {k}", line, 1, "profile.k")
    if len(rows) != m:
        raise ConfigError(f"profile has {len(rows)} rows but T/tau gives {m} instants", profile_line, None, "profile")
    profile = SensingProfile.from_rows((k, fa, md) for k, fa, md, _ in rows)
    problems = validate(profile)
    hard = [v for v in problems if v.kind != "monotonicity" or not allow_nonmonotone]
    if hard:
        v = hard[0]
        raise ConfigError(str(ProfileError(hard)), rows[v.k - 1][3], None, "profile")
    for v in problems:
        warnings.warn(f"sensing profile: {v}", stacklevel=2)
    return profile


def format_profile(profile: SensingProfile) -> str:
    return "\n".join(f"{k}, {fa!r}, {md!r}" for k, fa, md in profile.rows())


def format_config(config: RunConfig) -> str:
    """Canonical text form; ``parse_config(format_config(c))`` rebuilds ``c``."""
    s, o = config.system, config.optimizer
    lines = ["[system]"]
    lines += [f"{key} = {getattr(s, key)!r}" for key in _SYSTEM_KEYS]
    lines += ["", "[profile]", "builtin = table1" if config.profile_builtin else format_profile(config.profile)]
    lines += ["", "[sweep]", f"delay_cap = {config.delay_cap!r}", f"lambda_start = {config.lambda_start!r}",
              f"lambda_stop = {config.lambda_stop!r}", f"lambda_step = {config.lambda_step!r}",
              "variants = " + ", ".join(v.value for v in config.variants), f"output = {config.output_path}"]
    lines += ["", "[optimizer]"] + [f"{key} = {getattr(o, key)!r}" for key in _OPTIMIZER_KEYS]
    if config.simulation:
        sim = config.simulation
        lines += ["", "[simulation]", f"n_slots = {sim.n_slots}", f"warmup_slots = {sim.warmup_slots}",
                  f"seed = {sim.seed}"]
    return "\n".join(lines) + "\n"


def config_hash(config: RunConfig) -> str:
    return hashlib.sha256(format_config(config).encode()).hexdigest()


def resolve_config_path(path: str | Path) -> Path:
    """A path on disk wins; otherwise a bare bundled name such as ``fig1.cfg``."""
    p = Path(path)
    if p.exists() or p.name not in BUNDLED:
        return p
    return Path(str(resources.files("cogaccess") / "configs" / p.name))


def load_config(path: str | Path, allow_nonmonotone_roc: bool = False) -> RunConfig:
    return parse_config(resolve_config_path(path).read_text(), allow_nonmonotone_roc)
