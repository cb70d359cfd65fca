"""Scenario configuration files.

Configs are INI files (``configparser``) with one section per concern.
Every key is checked against the schema below; unknown sections or keys
are errors.  Initial data and numeric weights are numpy expressions in the
coordinates ``x`` (and ``y``), validated by walking their syntax tree.

Example::

    [scenario]
    name = clm_torus
    kind = run

    [grid]
    domain = torus
    n = 1024

    [operator]
    name = H

    [initial]
    omega0 = -sin(x)

    [run]
    integrator = exponential_euler
    dt = 1e-4
    t_end = 2.5

    [certificate]
    weight = clm_torus
"""
from __future__ import annotations

import ast
import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .simulator import DIAGNOSTICS, INTEGRATORS, BlowupThresholds, Scenario
from .spectral import Grid, operator_by_name
from .weights import CATALOG, WeightPair, catalog_pair, numeric_weight

__all__ = ["ConfigError", "ScenarioConfig", "load_config", "parse_config", "compile_expression",
           "SCHEMA", "KINDS", "ORACLES"]

KINDS = ("run", "certify", "polar")
ORACLES = ("none", "clm", "burgers", "neg_identity")
POLAR_EXPERIMENTS = ("s_identity", "stream_modes", "cone_inequality", "adjointness", "arctan",
                     "dominance", "ha", "key_bound")


class ConfigError(ValueError):
    """Invalid configuration (exit status 2)."""


# section -> key -> (parser, default); a default of ``REQUIRED`` must be given
REQUIRED = object()


def _int(v):
    return int(v)


def _float(v):
    return float(v)


def _bool(v):
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _str(v):
    return v.strip()


def _floats(v):
    return tuple(float(p) for p in v.replace(",", " ").split())


def _words(v):
    return tuple(p for p in v.replace(",", " ").split())


def _ints(v):
    return tuple(int(p) for p in v.replace(",", " ").split())


SCHEMA = {
    "scenario": {"name": (_str, REQUIRED), "kind": (_str, "run"), "seed": (_int, 0),
                 "criteria": (_ints, ())},
    "grid": {"domain": (_str, "torus"), "n": (_int, REQUIRED), "ndim": (_int, 1),
             "length": (_float, 2 * math.pi), "half_width": (_float, 32.0)},
    "operator": {"name": (_str, REQUIRED)},
    "initial": {"omega0": (_str, REQUIRED)},
    "run": {"integrator": (_str, "exponential_euler"), "dt": (_float, REQUIRED),
            "t_end": (_float, REQUIRED), "diagnostics": (_words, ("L1", "Linf", "spectral_tail")),
            "sample_every": (_int, 1), "bisections": (_int, 12), "dealias": (_bool, True)},
    "thresholds": {"sup_factor": (_float, 1e6), "tail_fraction": (_float, 1e-2),
                   "max_halvings": (_int, 20)},
    "certificate": {"weight": (_str, "none"), "w2": (_str, ""), "bound_rtol": (_float, 1e-3),
                    "bound_t_max": (_float, math.inf)},
    "oracle": {"kind": (_str, "none"), "check_until": (_float, 0.9), "tolerance": (_float, 1e-3)},
    "checks": {"bracket_within": (_floats, ()), "bracket_rel": (_floats, ()),
               "J": (_floats, ()), "T_bound": (_floats, ()), "T_bound_at_least": (_float, None),
               "bound_ok": (_bool, None), "refused": (_str, None), "oracle_ok": (_bool, None),
               "sign_bounds": (_bool, None)},
    "polar": {"experiments": (_words, POLAR_EXPERIMENTS), "alpha_scan": (_floats, (0.2, 0.1, 0.05, 0.02, 0.01)),
              "c": (_float, 1.0), "C": (_float, 1.0), "r_min": (_float, 1e-6), "r_max": (_float, 1e6),
              "per_decade": (_int, 64), "k_max": (_int, 64), "theta_samples": (_int, 10000),
              "adjoint_pairs": (_int, 50), "ha_n": (_int, 2048), "ha_half_width": (_float, 12.8),
              "ha_r_min": (_float, 1e-3), "ha_r_max": (_float, 10.0), "ha_epsilon": (_float, 1e-3),
              "ha_control_factor": (_float, 10.0), "ha_center": (_float, math.pi / 2),
              "ha_control_center": (_float, 0.0), "kb_n": (_int, 256), "kb_half_width": (_float, 8.0),
              "kb_dt": (_float, 0.02), "kb_t_end": (_float, 2.0), "kb_sample_every": (_int, 5)},
}

SECTIONS_BY_KIND = {
    "run": {"scenario", "grid", "operator", "initial", "run", "thresholds", "certificate", "oracle", "checks"},
    "certify": {"scenario", "grid", "operator", "initial", "certificate", "checks"},
    "polar": {"scenario", "polar", "checks"},
}


# --- expressions --------------------------------------------------------------

_FUNCS = {name: getattr(np, name) for name in (
    "sin", "cos", "tan", "exp", "log", "sqrt", "abs", "tanh", "cosh", "sinh", "arctan", "arctan2",
    "hypot", "where", "maximum", "minimum", "sign", "heaviside")}
_CONSTS = {"pi": math.pi, "e": math.e}
_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
          ast.Compare, ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd, ast.Mod,
          ast.Lt, ast.LtE, ast.Gt, ast.GtE, ast.Eq, ast.NotEq, ast.BitAnd, ast.BitOr)


def compile_expression(text: str, variables=("x",)) -> Callable:
    """Compile a numpy expression in ``variables`` to a callable.

    >>> compile_expression("-sin(x)")(np.array([np.pi / 2]))
    array([-1.])
    """
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"bad expression {text!r}: {exc.msg}") from None
    allowed = set(_FUNCS) | set(_CONSTS) | set(variables)
    for node in ast.walk(tree):
        if not isinstance(node, _NODES):
            raise ConfigError(f"expression {text!r}: {type(node).__name__} not allowed")
        if isinstance(node, ast.Name) and node.id not in allowed:
            raise ConfigError(f"expression {text!r}: unknown name {node.id!r}")
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name) and node.func.id in _FUNCS):
            raise ConfigError(f"expression {text!r}: only numpy functions {sorted(_FUNCS)} may be called")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ConfigError(f"expression {text!r}: only numeric constants allowed")
    code = compile(tree, "<config>", "eval")
    env = {"__builtins__": {}, **_FUNCS, **_CONSTS}

    def f(*coords):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = eval(code, env, dict(zip(variables, coords)))
        return np.asarray(out, dtype=float) * np.ones(np.broadcast(*coords).shape)

    f.expression = text.strip()
    return f


# --- config object --------------------------------------------------------------

@dataclass
class ScenarioConfig:
    name: str
    kind: str
    seed: int
    sections: dict
    path: Optional[Path] = None
    criteria: tuple = ()
    checks: dict = field(default_factory=dict)

    def section(self, name: str) -> dict:
        return self.sections.get(name, {k: d for k, (_, d) in SCHEMA[name].items()})

    def echo(self) -> dict:
        """Config as parsed, with defaults filled in (JSON friendly)."""
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return str(v)
            if isinstance(v, tuple):
                return [clean(x) for x in v]
            return v

        return {s: {k: clean(v) for k, v in vals.items()} for s, vals in self.sections.items()}

    # builders -------------------------------------------------------------
    def grid(self) -> Grid:
        g = self.section("grid")
        if g["domain"] == "torus":
            return Grid.torus(g["n"], ndim=g["ndim"], length=g["length"])
        return Grid.box(g["n"], half_width=g["half_width"], ndim=g["ndim"])

    def coords(self):
        return ("x",) if self.section("grid")["ndim"] == 1 else ("x", "y")

    def initial_data(self) -> Callable:
        return compile_expression(self.section("initial")["omega0"], self.coords())

    def operator(self):
        return operator_by_name(self.section("operator")["name"], self.section("grid")["ndim"])

    def weight_pair(self) -> Optional[WeightPair]:
        c = self.section("certificate")
        if c["weight"] == "none":
            return None
        grid = self.grid()
        if c["weight"] == "numeric":
            w2 = compile_expression(c["w2"], self.coords())
            return numeric_weight(self.operator(), w2, grid, name="numeric")
        return catalog_pair(c["weight"], grid)

    def scenario(self) -> Scenario:
        r = self.section("run")
        t = self.section("thresholds")
        return Scenario(
            grid=self.grid(), operator=self.operator(), initial_data=self.initial_data(),
            dt=r["dt"], t_end=r["t_end"], weight_pair=self.weight_pair(), integrator=r["integrator"],
            diagnostics=tuple(r["diagnostics"]),
            thresholds=BlowupThresholds(t["sup_factor"], t["tail_fraction"], t["max_halvings"]),
            sample_every=r["sample_every"], bisections=r["bisections"], dealias=r["dealias"])


def _validate(cfg: ScenarioConfig) -> None:
    if cfg.kind == "polar":
        p = cfg.section("polar")
        bad = set(p["experiments"]) - set(POLAR_EXPERIMENTS)
        if bad:
            raise ConfigError(f"unknown polar experiments {sorted(bad)}")
        if not 0 < p["r_min"] < p["r_max"]:
            raise ConfigError("polar r_min/r_max must satisfy 0 < r_min < r_max")
        if not all(0 < a < 0.5 for a in p["alpha_scan"]) or not p["alpha_scan"]:
            raise ConfigError("alpha_scan values must lie in (0, 1/2)")
        if not (p["c"] > 0 and p["C"] >= 0):
            raise ConfigError("need c > 0 and C >= 0")
        return
    g = cfg.section("grid")
    if g["domain"] not in ("torus", "box"):
        raise ConfigError("grid.domain must be 'torus' or 'box'")
    if g["ndim"] not in (1, 2) or g["n"] < 4 or g["n"] % 2:
        raise ConfigError("grid needs ndim in {1, 2} and an even n >= 4")
    if not (g["length"] > 0 and g["half_width"] > 0):
        raise ConfigError("grid length and half_width must be positive")
    try:
        cfg.operator()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    f = cfg.initial_data()
    vals = f(*cfg.grid().mesh())
    if not np.all(np.isfinite(vals)):
        raise ConfigError("initial data is not finite on the grid")
    c = cfg.section("certificate")
    if c["weight"] not in ("none", "numeric") and c["weight"] not in CATALOG:
        raise ConfigError(f"unknown weight pair {c['weight']!r}; known: {sorted(CATALOG)}")
    if c["weight"] == "numeric" and not c["w2"]:
        raise ConfigError("certificate.weight = numeric needs certificate.w2")
    if cfg.kind == "certify" and c["weight"] == "none":
        raise ConfigError("certify needs a certificate.weight")
    if cfg.kind == "run":
        r = cfg.section("run")
        if r["integrator"] not in INTEGRATORS:
            raise ConfigError(f"run.integrator must be one of {INTEGRATORS}")
        bad = set(r["diagnostics"]) - set(DIAGNOSTICS)
        if bad:
            raise ConfigError(f"unknown diagnostics {sorted(bad)}")
        if not (r["dt"] > 0 and r["t_end"] > 0 and r["sample_every"] >= 1 and r["bisections"] >= 0):
            raise ConfigError("run needs dt > 0, t_end > 0, sample_every >= 1, bisections >= 0")
        t = cfg.section("thresholds")
        if not (t["sup_factor"] > 0 and t["tail_fraction"] > 0 and t["max_halvings"] > 0):
            raise ConfigError("thresholds must be positive")
        if cfg.section("oracle")["kind"] not in ORACLES:
            raise ConfigError(f"oracle.kind must be one of {ORACLES}")
        if "M_functional" in r["diagnostics"] and c["weight"] == "none":
            raise ConfigError("M_functional needs a certificate weight")
        try:
            cfg.scenario()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def parse_config(text: str, path: Optional[Path] = None) -> ScenarioConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case sensitive (c versus C)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from None
    if "scenario" not in cp:
        raise ConfigError("missing [scenario] section")
    kind = cp["scenario"].get("kind", "run").strip()
    if kind not in KINDS:
        raise ConfigError(f"scenario.kind must be one of {KINDS}")
    allowed = SECTIONS_BY_KIND[kind]
    sections = {}
    for name in cp.sections():
        if name not in allowed:
            raise ConfigError(f"unknown section [{name}] for kind {kind!r}")
    for name in sorted(allowed, key=list(SCHEMA).index):
        raw = cp[name] if name in cp else {}
        unknown = set(raw) - set(SCHEMA[name])
        if unknown:
            raise ConfigError(f"unknown key(s) {sorted(unknown)} in [{name}]")
        vals = {}
        for key, (conv, default) in SCHEMA[name].items():
            if key in raw:
                try:
                    vals[key] = conv(raw[key])
                except ValueError as exc:
                    raise ConfigError(f"[{name}] {key}: {exc}") from None
            elif default is REQUIRED:
                if name in ("grid", "operator", "initial", "run") or name in cp:
                    raise ConfigError(f"missing required key [{name}] {key}")
            else:
                vals[key] = default
        sections[name] = vals
    sc = sections["scenario"]
    checks = {k: v for k, v in sections.get("checks", {}).items() if v not in (None, ())}
    cfg = ScenarioConfig(name=sc["name"], kind=kind, seed=sc["seed"], sections=sections, path=path,
                         criteria=sc["criteria"], checks=checks)
    _validate(cfg)
    return cfg


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, path)
