"""Scenario configuration: flat sectioned key-value files.

Format: `[section]` headers, `key = value` lines, `#` comments (full-line
or trailing), no nesting.  Sections are grid, potential, initial,
collision, integrator, output.  Parsing validates everything it can and
reports every violation at once, each tagged with its line number, instead
of stopping at the first.

The parser is hand-rolled rather than configparser-based because the
contract requires per-line diagnostics and exhaustive (not fail-fast)
validation of unknown keys, missing keys, and range constraints.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from .evolve import IntegratorConfig
from .grid import GridSpec
from .kinetics import (CollisionModel, DistributionField, PotentialProfile,
                       detailed_balance_table, build_screened_coulomb_rates)

POTENTIAL_KINDS = ("zero", "uniform_field", "harmonic", "custom_table")
INITIAL_KINDS = ("uniform", "gaussian_rk", "fermi_dirac")
COLLISION_KINDS = ("none", "user_table", "static_screened_coulomb")

DEFAULT_DT = 1e-3
DEFAULT_T_END = 0.1
DEFAULT_ETA = 0.05


class ConfigError(ValueError):
    """Carries every violation found in a config, one message per line."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("\n".join(self.violations))


@dataclass
class PotentialSettings:
    kind: str = "zero"
    e0: float = None
    k_spring: float = None
    file: str = None


@dataclass
class InitialSettings:
    kind: str = "uniform"
    n0: float = None
    center_m: int = None
    center_n: int = None
    sigma_r: float = None
    sigma_k: float = None
    amplitude: float = None
    mu: float = None
    temperature: float = None


@dataclass
class CollisionSettings:
    kind: str = "none"
    file: str = None
    eps: float = None
    temperature: float = None
    eta: float = None
    q_max: int = None


@dataclass
class ScenarioConfig:
    grid: GridSpec
    potential: PotentialSettings = field(default_factory=PotentialSettings)
    initial: InitialSettings = field(default_factory=InitialSettings)
    collision: CollisionSettings = field(default_factory=CollisionSettings)
    integrator: IntegratorConfig = field(
        default_factory=lambda: IntegratorConfig(DEFAULT_DT, DEFAULT_T_END))
    output_dir: str = "out"


# section -> key -> (type, constraint text or None)
_SCHEMA = {
    "grid": {
        "d": (float, "d > 0"),
        "num_cells": (int, "num_cells even and >= 2"),
        "n_max": (int, "n_max >= 1"),
    },
    "potential": {
        "kind": (str, f"kind in {POTENTIAL_KINDS}"),
        "E0": (float, None),
        "k_spring": (float, "k_spring > 0"),
        "file": (str, "file nonempty"),
    },
    "initial": {
        "kind": (str, f"kind in {INITIAL_KINDS}"),
        "n0": (float, "n0 in [0, 1]"),
        "center_m": (int, "0 <= center_m < num_cells"),
        "center_n": (int, "-n_max <= center_n <= n_max"),
        "sigma_r": (float, "sigma_r > 0"),
        "sigma_k": (float, "sigma_k > 0"),
        "amplitude": (float, "amplitude in (0, 1]"),
        "mu": (float, None),
        "T": (float, "T > 0"),
    },
    "collision": {
        "kind": (str, f"kind in {COLLISION_KINDS}"),
        "file": (str, "file nonempty"),
        "eps": (float, "eps > 0"),
        "T": (float, "T > 0"),
        "eta": (float, "eta > 0"),
        "q_max": (int, "q_max >= 1"),
    },
    "integrator": {
        "dt": (float, "dt > 0"),
        "t_end": (float, "t_end > 0"),
        "scheme": (str, "scheme in ('euler', 'rk4')"),
        "snapshot_every": (int, "snapshot_every >= 1"),
    },
    "output": {
        "dir": (str, "dir nonempty"),
    },
}

# keys each enum kind requires / additionally accepts
_KIND_KEYS = {
    ("potential", "zero"): ((), ()),
    ("potential", "uniform_field"): (("E0",), ()),
    ("potential", "harmonic"): (("k_spring",), ()),
    ("potential", "custom_table"): (("file",), ()),
    ("initial", "uniform"): (("n0",), ()),
    ("initial", "gaussian_rk"): (
        ("center_m", "center_n", "sigma_r", "sigma_k", "amplitude"), ()),
    ("initial", "fermi_dirac"): (("mu", "T"), ()),
    ("collision", "none"): ((), ()),
    ("collision", "user_table"): (("file",), ("T",)),
    ("collision", "static_screened_coulomb"): (
        ("eps", "T"), ("eta", "q_max")),
}

_RANGE_CHECKS = {
    ("grid", "d"): lambda v, g: v > 0,
    ("grid", "num_cells"): lambda v, g: v >= 2 and v % 2 == 0,
    ("grid", "n_max"): lambda v, g: v >= 1,
    ("potential", "k_spring"): lambda v, g: v > 0,
    ("potential", "file"): lambda v, g: bool(v),
    ("initial", "n0"): lambda v, g: 0.0 <= v <= 1.0,
    ("initial", "center_m"): lambda v, g: g is None or 0 <= v < g.num_cells,
    ("initial", "center_n"): lambda v, g: g is None or abs(v) <= g.n_max,
    ("initial", "sigma_r"): lambda v, g: v > 0,
    ("initial", "sigma_k"): lambda v, g: v > 0,
    ("initial", "amplitude"): lambda v, g: 0.0 < v <= 1.0,
    ("initial", "T"): lambda v, g: v > 0,
    ("collision", "file"): lambda v, g: bool(v),
    ("collision", "eps"): lambda v, g: v > 0,
    ("collision", "T"): lambda v, g: v > 0,
    ("collision", "eta"): lambda v, g: v > 0,
    ("collision", "q_max"): lambda v, g: v >= 1,
    ("integrator", "dt"): lambda v, g: v > 0,
    ("integrator", "t_end"): lambda v, g: v > 0,
    ("integrator", "scheme"): lambda v, g: v in ("euler", "rk4"),
    ("integrator", "snapshot_every"): lambda v, g: v >= 1,
    ("output", "dir"): lambda v, g: bool(v),
}

_ENUM_VALUES = {
    ("potential", "kind"): POTENTIAL_KINDS,
    ("initial", "kind"): INITIAL_KINDS,
    ("collision", "kind"): COLLISION_KINDS,
}


def _scan(text, violations):
    """Split raw text into {(section, key): (raw value, line number)}."""
    entries = {}
    section_lines = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in _SCHEMA:
                violations.append(f"line {lineno}: unknown section [{name}]")
                section = None
                continue
            if name in section_lines:
                violations.append(
                    f"line {lineno}: duplicate section [{name}]")
            section_lines[name] = lineno
            section = name
            continue
        if "=" not in line:
            violations.append(
                f"line {lineno}: expected `key = value`, got {line!r}")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if section is None:
            violations.append(
                f"line {lineno}: key {key!r} outside any [section]")
            continue
        if key not in _SCHEMA[section]:
            violations.append(
                f"line {lineno}: unknown key {key!r} in [{section}]")
            continue
        if (section, key) in entries:
            violations.append(
                f"line {lineno}: duplicate key {key!r} in [{section}]")
            continue
        entries[(section, key)] = (value, lineno)
    return entries, section_lines


def _convert(entries, violations):
    """Type-convert raw strings; drop entries that fail."""
    values = {}
    for (section, key), (raw, lineno) in entries.items():
        typ, _ = _SCHEMA[section][key]
        if typ is str:
            values[(section, key)] = (raw, lineno)
            continue
        try:
            values[(section, key)] = (typ(raw), lineno)
        except ValueError:
            values[(section, key)] = None
            violations.append(
                f"line {lineno}: {section}.{key} = {raw!r} is not "
                f"{'an integer' if typ is int else 'a number'}")
    return {k: v for k, v in values.items() if v is not None}


def parse_config(text):
    """Parse and fully validate a scenario config.

    Returns a populated ScenarioConfig, or raises ConfigError carrying
    every violation found (unknown keys, missing keys, type errors, range
    violations), each with its line number.
    """
    violations = []
    entries, section_lines = _scan(text, violations)
    values = _convert(entries, violations)

    def got(section, key):
        return values.get((section, key), (None, None))[0]

    # grid first: later range checks depend on it
    grid = None
    grid_missing = [k for k in ("d", "num_cells", "n_max")
                    if (("grid", k) not in values
                        and ("grid", k) not in entries)]
    if "grid" not in section_lines:
        violations.append(
            "missing [grid] section (required keys d, num_cells, n_max)")
    elif grid_missing:
        violations.append(
            f"line {section_lines['grid']}: [grid] missing required "
            f"key(s) {', '.join(grid_missing)}")

    def check_range(section, key):
        item = values.get((section, key))
        if item is None:
            return None
        value, lineno = item
        ok = _RANGE_CHECKS.get((section, key), lambda v, g: True)(value, grid)
        if not ok:
            constraint = _SCHEMA[section][key][1]
            violations.append(
                f"line {lineno}: {section}.{key} = {value!r} violates "
                f"{constraint}")
            return None
        return value

    checked = {k: check_range("grid", k) for k in ("d", "num_cells", "n_max")
               if ("grid", k) in values}
    if len(checked) == 3 and all(v is not None for v in checked.values()):
        grid = GridSpec(d=checked["d"], num_cells=checked["num_cells"],
                        n_max=checked["n_max"])

    def resolve_enum(section, default):
        item = values.get((section, "kind"))
        if item is None:
            return default
        value, lineno = item
        if value not in _ENUM_VALUES[(section, "kind")]:
            violations.append(
                f"line {lineno}: {section}.kind = {value!r} violates "
                f"{_SCHEMA[section]['kind'][1]}")
            return None
        return value

    def kind_block(section, default):
        """Validate kind-dependent keys; return dict of validated values."""
        kind = resolve_enum(section, default)
        out = {"kind": kind}
        if kind is None:
            return out
        required, optional = _KIND_KEYS[(section, kind)]
        allowed = set(required) | set(optional)
        for key in _SCHEMA[section]:
            if key == "kind":
                continue
            present = (section, key) in values or (section, key) in entries
            if not present:
                continue
            if key not in allowed:
                lineno = entries[(section, key)][1]
                violations.append(
                    f"line {lineno}: {section}.{key} not allowed for "
                    f"kind {kind!r}")
                continue
            out[key] = check_range(section, key)
        missing = [k for k in required if k not in out or out[k] is None]
        # only report truly absent keys; bad values were reported above
        absent = [k for k in missing if (section, k) not in entries]
        if absent and (section in section_lines or section != "initial"):
            where = section_lines.get(section)
            prefix = f"line {where}: " if where else ""
            violations.append(
                f"{prefix}[{section}] kind {kind!r} missing required "
                f"key(s) {', '.join(absent)}")
        return out

    pot = kind_block("potential", "zero")
    ini = kind_block("initial", "uniform")
    col = kind_block("collision", "none")

    if "initial" not in section_lines:
        violations.append(
            "missing [initial] section (kind plus its parameters)")

    for key in ("dt", "t_end", "scheme", "snapshot_every"):
        check_range("integrator", key)
    check_range("output", "dir")

    if violations:
        raise ConfigError(violations)

    integ = IntegratorConfig(
        dt=got("integrator", "dt") or DEFAULT_DT,
        t_end=got("integrator", "t_end") or DEFAULT_T_END,
        scheme=got("integrator", "scheme") or "rk4",
        snapshot_every=got("integrator", "snapshot_every") or 1,
    )
    return ScenarioConfig(
        grid=grid,
        potential=PotentialSettings(
            kind=pot["kind"], e0=pot.get("E0"),
            k_spring=pot.get("k_spring"), file=pot.get("file")),
        initial=InitialSettings(
            kind=ini["kind"], n0=ini.get("n0"),
            center_m=ini.get("center_m"), center_n=ini.get("center_n"),
            sigma_r=ini.get("sigma_r"), sigma_k=ini.get("sigma_k"),
            amplitude=ini.get("amplitude"), mu=ini.get("mu"),
            temperature=ini.get("T")),
        collision=CollisionSettings(
            kind=col["kind"], file=col.get("file"), eps=col.get("eps"),
            temperature=col.get("T"), eta=col.get("eta"),
            q_max=col.get("q_max")),
        integrator=integ,
        output_dir=got("output", "dir") or "out",
    )


def _fmt(value):
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def serialize_config(config):
    """Render a ScenarioConfig back to config text; parse round-trips."""
    lines = ["[grid]",
             f"d = {_fmt(config.grid.d)}",
             f"num_cells = {config.grid.num_cells}",
             f"n_max = {config.grid.n_max}",
             "",
             "[potential]",
             f"kind = {config.potential.kind}"]
    pot = config.potential
    if pot.kind == "uniform_field":
        lines.append(f"E0 = {_fmt(pot.e0)}")
    elif pot.kind == "harmonic":
        lines.append(f"k_spring = {_fmt(pot.k_spring)}")
    elif pot.kind == "custom_table":
        lines.append(f"file = {pot.file}")

    ini = config.initial
    lines += ["", "[initial]", f"kind = {ini.kind}"]
    if ini.kind == "uniform":
        lines.append(f"n0 = {_fmt(ini.n0)}")
    elif ini.kind == "gaussian_rk":
        lines += [f"center_m = {ini.center_m}",
                  f"center_n = {ini.center_n}",
                  f"sigma_r = {_fmt(ini.sigma_r)}",
                  f"sigma_k = {_fmt(ini.sigma_k)}",
                  f"amplitude = {_fmt(ini.amplitude)}"]
    else:
        lines += [f"mu = {_fmt(ini.mu)}", f"T = {_fmt(ini.temperature)}"]

    col = config.collision
    lines += ["", "[collision]", f"kind = {col.kind}"]
    if col.kind == "user_table":
        lines.append(f"file = {col.file}")
        if col.temperature is not None:
            lines.append(f"T = {_fmt(col.temperature)}")
    elif col.kind == "static_screened_coulomb":
        lines += [f"eps = {_fmt(col.eps)}", f"T = {_fmt(col.temperature)}"]
        if col.eta is not None:
            lines.append(f"eta = {_fmt(col.eta)}")
        if col.q_max is not None:
            lines.append(f"q_max = {col.q_max}")

    integ = config.integrator
    lines += ["", "[integrator]",
              f"dt = {_fmt(integ.dt)}",
              f"t_end = {_fmt(integ.t_end)}",
              f"scheme = {integ.scheme}",
              f"snapshot_every = {integ.snapshot_every}",
              "",
              "[output]",
              f"dir = {config.output_dir}",
              ""]
    return "\n".join(lines)


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def build_profile(config, base_dir="."):
    """Materialize the potential profile named by the config."""
    spec = config.grid
    pot = config.potential
    if pot.kind == "zero":
        return PotentialProfile.zero(spec)
    if pot.kind == "uniform_field":
        return PotentialProfile.uniform_field(spec, pot.e0)
    if pot.kind == "harmonic":
        return PotentialProfile.harmonic(spec, pot.k_spring)
    path = os.path.join(base_dir, pot.file)
    table = np.loadtxt(path, dtype=float, comments="#", ndmin=1)
    if table.shape != (spec.num_cells,):
        raise ValueError(
            f"potential table {path} has {table.shape[0] if table.ndim == 1 else table.shape} "
            f"values, expected {spec.num_cells}")
    return PotentialProfile.from_potential(spec, table)


def build_initial(config):
    """Materialize the initial occupation field named by the config."""
    spec = config.grid
    ini = config.initial
    if ini.kind == "uniform":
        return DistributionField.uniform(spec, ini.n0)
    if ini.kind == "gaussian_rk":
        return DistributionField.gaussian_rk(
            spec, ini.center_m, ini.center_n, ini.sigma_r, ini.sigma_k,
            ini.amplitude)
    return DistributionField.fermi_dirac(spec, ini.mu, ini.temperature)


def build_collision(config, base_dir="."):
    """Materialize the collision model, or None for collisionless runs.

    user_table files hold the dense N x N rate matrix (whitespace or comma
    separated); the optional T key supplies the bath temperature used by
    the detailed-balance diagnostic (default 1).
    """
    spec = config.grid
    col = config.collision
    if col.kind == "none":
        return None
    if col.kind == "user_table":
        path = os.path.join(base_dir, col.file)
        with open(path, "r", encoding="utf-8") as fh:
            txt = fh.read()
        delim = "," if "," in txt.split("\n", 1)[0] else None
        rates = np.loadtxt(path, dtype=float, comments="#", delimiter=delim)
        temperature = 1.0 if col.temperature is None else col.temperature
        return CollisionModel(spec, rates, temperature, "user_table")
    return build_screened_coulomb_rates(
        spec, col.temperature, epsilon_static=col.eps,
        eta=DEFAULT_ETA if col.eta is None else col.eta,
        q_max=col.q_max)
