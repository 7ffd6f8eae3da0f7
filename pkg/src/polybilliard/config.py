"""Flat key-value config files and integral specifiers.

Format::

    # comment
    [table]
    kind = "parabolic_lens"
    b = 2.0
    s1 = 1.0, s2 = ...     # one key per line

    [run]
    steps = 1000
    x0 = 0.1, 0, 0.5

Every error carries the offending line number.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import integrals as ig
from . import tables as tb
from .errors import ConfigError
from .geom import SkewMatrix

_SECTION = re.compile(r"^\[\s*([A-Za-z_][\w-]*)\s*\]$")
_KEY = re.compile(r"^([A-Za-z_][\w]*)\s*=\s*(.*)$")


@dataclass
class Entry:
    value: str
    line: int


@dataclass
class Section:
    name: str
    line: int
    entries: dict = field(default_factory=dict)

    def get(self, key, default=None):
        e = self.entries.get(key)
        return default if e is None else e.value

    def line_of(self, key):
        e = self.entries.get(key)
        return self.line if e is None else e.line


def _unquote(s: str) -> str:
    s = s.strip()
    if len(s) >= 2 and s[0] == s[-1] and s[0] in "\"'":
        return s[1:-1]
    return s


def parse_config(text: str) -> dict:
    sections: dict = {}
    cur: Optional[Section] = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = _SECTION.match(line)
        if m:
            name = m.group(1)
            if name in sections:
                raise ConfigError(f"duplicate section [{name}]", no)
            cur = sections[name] = Section(name, no)
            continue
        m = _KEY.match(line)
        if not m:
            raise ConfigError(f"cannot parse {raw.strip()!r}", no)
        if cur is None:
            raise ConfigError(f"key {m.group(1)!r} outside any section", no, m.group(1))
        key, val = m.group(1), m.group(2)
        if not (val.startswith('"') or val.startswith("'")) and "#" in val:
            val = val.split("#", 1)[0]
        if key in cur.entries:
            raise ConfigError(f"duplicate key {key!r} in [{cur.name}]", no, key)
        cur.entries[key] = Entry(_unquote(val), no)
    return sections


def read_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


# ---------------------------------------------------------------------------
# values


def to_float(section: Section, key: str) -> float:
    raw = section.get(key)
    try:
        x = float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"key {key!r}: expected a real number, got {raw!r}",
                          section.line_of(key), key) from None
    if not math.isfinite(x):
        raise ConfigError(f"key {key!r}: value must be finite", section.line_of(key), key)
    return x


def to_int(section: Section, key: str) -> int:
    raw = section.get(key)
    try:
        return int(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"key {key!r}: expected an integer, got {raw!r}",
                          section.line_of(key), key) from None


def to_bool(section: Section, key: str) -> bool:
    raw = str(section.get(key)).strip().lower()
    if raw in ("1", "true", "yes", "on"):
        return True
    if raw in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"key {key!r}: expected true/false, got {raw!r}", section.line_of(key), key)


def parse_list(raw: str) -> list:
    parts = [p for p in re.split(r"[,\s]+", raw.strip()) if p]
    return [float(p) for p in parts]


def to_list(section: Section, key: str) -> list:
    raw = section.get(key)
    try:
        return parse_list(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"key {key!r}: expected a list of reals, got {raw!r}",
                          section.line_of(key), key) from None


# ---------------------------------------------------------------------------
# tables

# kind -> {key: converter}; missing keys use constructor defaults
TABLE_KEYS = {
    "circle": {"R": to_float, "a": to_float, "b": to_float},
    "ellipse": {"a2": to_float, "lam": to_float},
    "hyperbola": {"a2": to_float, "lam": to_float},
    "parabola": {"p": to_float, "lam": to_float},
    "perturbed_ellipse": {"a2": to_float, "lam": to_float, "eps": to_float, "k": to_int},
    "exp_wire": {"upper": to_list, "gamma0": to_list, "period": to_float},
    "toric_knot": {"a": to_float, "b": to_float, "k": to_int, "m": to_int},
    "perturbed_toric_knot": {"a": to_float, "b": to_float, "k": to_int, "m": to_int,
                             "eps": to_float},
    "spiral": {"R": to_float, "a": to_float},
    "arctan_surface": {"alpha": to_float, "beta": to_float, "f_slope": to_float,
                       "f_offset": to_float},
    "parabolic_lens": {"b": to_float, "c": to_float, "s1": to_float, "s2": to_float},
    "tetragon_torus": {"a": to_float, "b": to_float, "c": to_float, "s_e1": to_float,
                       "s_e2": to_float, "s_h1": to_float, "s_h2": to_float, "upper": to_bool},
}


def _exp_wire(upper, gamma0, period=None):
    return tb.ExpWire(SkewMatrix(len(gamma0), upper), gamma0, period)


TABLE_FACTORIES = {
    "circle": tb.CircleTable,
    "ellipse": tb.EllipseTable,
    "hyperbola": tb.HyperbolaTable,
    "parabola": tb.ParabolaTable,
    "perturbed_ellipse": tb.perturbed_ellipse,
    "exp_wire": _exp_wire,
    "toric_knot": tb.ToricKnot,
    "perturbed_toric_knot": tb.perturbed_toric_knot,
    "spiral": tb.Spiral,
    "arctan_surface": tb.ArctanSurface,
    "parabolic_lens": tb.make_parabolic_lens,
    "tetragon_torus": tb.make_tetragon_torus,
}


def build_table(kind: str, params: dict):
    """Construct a catalog table from already-typed parameters."""
    if kind not in TABLE_FACTORIES:
        raise ValueError(f"unknown table kind {kind!r}")
    return TABLE_FACTORIES[kind](**params)


def table_params(section: Section) -> tuple:
    """``(kind, typed params)`` from a ``[table]`` section."""
    kind = section.get("kind")
    if kind is None:
        raise ConfigError("[table] needs a 'kind' key", section.line)
    if kind not in TABLE_KEYS:
        raise ConfigError(f"key 'kind': unknown table kind {kind!r} (see 'table list')",
                          section.line_of("kind"), "kind")
    allowed = TABLE_KEYS[kind]
    params = {}
    for key in section.entries:
        if key == "kind":
            continue
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} for table kind {kind!r}",
                              section.line_of(key), key)
        params[key] = allowed[key](section, key)
    return kind, params


def table_from_section(section: Section):
    kind, params = table_params(section)
    try:
        return build_table(kind, params)
    except (ValueError, TypeError) as exc:
        if type(exc).__name__ in ("EmptyRegion", "AxisTouching"):
            raise
        raise ConfigError(f"invalid {kind} table: {exc}", section.line) from None


# ---------------------------------------------------------------------------
# integrals


def split_top(text: str) -> list:
    """Split on commas that are not inside parentheses."""
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if "".join(cur).strip():
        out.append("".join(cur).strip())
    return [t for t in out if t]


_TOKEN = re.compile(r"^([A-Za-z_]\w*)\s*(?:\((.*)\))?$")


def parse_integral(token: str, table=None) -> list:
    m = _TOKEN.match(token.strip())
    if not m:
        raise ValueError(f"cannot parse integral {token!r}")
    name, body = m.group(1), m.group(2)
    kw = {}
    if body:
        for part in split_top(body):
            if "=" not in part:
                raise ValueError(f"integral {token!r}: expected key=value, got {part!r}")
            k, v = part.split("=", 1)
            kw[k.strip()] = v.strip()

    def num(key, default=None):
        if key not in kw:
            if default is None:
                raise ValueError(f"integral {name!r} needs {key}=...")
            return default
        return float(kw[key])

    if name == "auto":
        if table is None:
            raise ValueError("'auto' integrals need a table")
        return list(table.natural_integrals())
    if name == "M":
        return [ig.PlanarDeg1()]
    if name == "planar_deg1":
        return [ig.PlanarDeg1(num("a", 0.0), num("b", 0.0))]
    if name == "parabola":
        return [ig.ParabolaIntegral(num("lambda"))]
    if name == "conic":
        return [ig.ConicIntegral(num("lambda"))]
    if name == "M3":
        return [ig.AxialDeg1()]
    if name == "axial":
        return [ig.AxialDeg1(num("alpha", 1.0), num("beta", 0.0))]
    if name == "F2":
        return [ig.Degree2Axial(num("a"), num("b"), num("c"))]
    if name == "momentum":
        n = int(num("n"))
        up = parse_list(kw.get("upper", ""))
        b = tuple(parse_list(kw["b"])) if "b" in kw else None
        return [ig.LinearMomentum(SkewMatrix(n, up), b)]
    raise ValueError(f"unknown integral {name!r}")


def parse_integrals(text: str, table=None) -> list:
    specs = []
    for tok in split_top(text):
        specs.extend(parse_integral(tok, table))
    if not specs:
        raise ValueError("no integrals given")
    return specs


# ---------------------------------------------------------------------------
# run configuration


@dataclass
class RunConfig:
    kind: str = ""
    table_params: dict = field(default_factory=dict)
    x0: Optional[list] = None
    v0: Optional[list] = None
    chord: Optional[list] = None
    steps: int = 100
    integrals: str = "auto"
    policy: str = "forward"
    seed: int = 0

    def table(self):
        return build_table(self.kind, self.table_params)


RUN_KEYS = {"x0": to_list, "v0": to_list, "chord": to_list, "steps": to_int,
            "integrals": lambda s, k: s.get(k), "policy": lambda s, k: s.get(k), "seed": to_int}


def run_config(sections: dict) -> RunConfig:
    if "table" not in sections:
        raise ConfigError("missing [table] section", 1)
    kind, params = table_params(sections["table"])
    cfg = RunConfig(kind, params)
    run = sections.get("run")
    if run is not None:
        for key in run.entries:
            if key not in RUN_KEYS:
                raise ConfigError(f"unknown key {key!r} in [run]", run.line_of(key), key)
            setattr(cfg, key, RUN_KEYS[key](run, key))
        if cfg.policy not in ("forward", "nearest"):
            raise ConfigError(f"key 'policy': must be forward or nearest, got {cfg.policy!r}",
                              run.line_of("policy"), "policy")
    return cfg


def sweep_grid(sections: dict) -> tuple:
    """Table kind, base params and the list of grid points from ``[sweep]``.

    Each ``[sweep]`` key holds a list; the grid is their Cartesian product in
    file order.  ``seed`` may be swept like a table parameter.
    """
    cfg = run_config(sections)
    sw = sections.get("sweep")
    if sw is None:
        return cfg, [dict()]
    allowed = set(TABLE_KEYS[cfg.kind]) | {"seed"}
    axes = []
    for key in sw.entries:
        if key not in allowed:
            raise ConfigError(f"cannot sweep {key!r} for table kind {cfg.kind!r}",
                              sw.line_of(key), key)
        vals = to_list(sw, key)
        if not vals:
            raise ConfigError(f"sweep key {key!r} is empty", sw.line_of(key), key)
        if key in ("seed", "k", "m"):
            vals = [int(v) for v in vals]
        axes.append((key, vals))
    points = [dict()]
    for key, vals in axes:
        points = [dict(p, **{key: v}) for p in points for v in vals]
    return cfg, points


def initial_from_config(cfg: RunConfig, table):
    """Explicit initial condition if given, otherwise seeded random."""
    from .dynamics import PhaseState, WireChord, initial_condition, state_dim
    from .tables import WireTable

    if isinstance(table, WireTable):
        if cfg.chord is not None:
            if len(cfg.chord) != 2:
                raise ConfigError("key 'chord': needs two parameters s, t", key="chord")
            return WireChord(*cfg.chord)
        return initial_condition(table, np.random.default_rng(cfg.seed))
    if cfg.x0 is not None or cfg.v0 is not None:
        if cfg.x0 is None or cfg.v0 is None:
            raise ConfigError("x0 and v0 must be given together")
        n = state_dim(table)
        for key in ("x0", "v0"):
            if len(getattr(cfg, key)) != n:
                raise ConfigError(f"key {key!r}: expected {n} components, got "
                                  f"{len(getattr(cfg, key))}", key=key)
        try:
            return PhaseState.make(cfg.x0, cfg.v0, normalize=True)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return initial_condition(table, np.random.default_rng(cfg.seed))
