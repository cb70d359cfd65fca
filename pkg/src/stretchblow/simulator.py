"""Time integration of ``d_t w = w R(w)`` with blow-up detection.

Two integrators are available:

* ``exponential_euler``: ``w <- w exp(dt R(w))``, the discrete form of
  ``w = w0 exp(int R(w))``.  Sign and support of ``w`` are preserved exactly.
* ``rk4``: classical fourth order on the raw form with 2/3 de-aliasing of
  the quadratic product.

Blow-up is a numerical proxy: sup-norm growth, loss of resolution in the
spectral tail, or a failed step that survives 20 halvings.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence

import numpy as np
import scipy.fft as sfft
from scipy.optimize import brentq

from .spectral import (Grid, MultiplierOp, SpectralField, apply_multiplier, derivative,
                       riesz, riesz_product)
from .weights import WeightPair

__all__ = [
    "BlowupThresholds",
    "Scenario",
    "Trajectory",
    "StepFailure",
    "step_exponential",
    "step_rk4",
    "run",
    "detect_blowup",
    "spectral_tail_fraction",
    "energy_diagnostics",
    "clm_exact",
    "clm_blowup_time",
    "burgers_exact",
    "burgers_blowup_time",
    "oracle_residual",
    "numeric_derivative",
    "dissipation_study",
    "DissipationStudy",
    "DIAGNOSTICS",
]

#: Canonical diagnostic order; also the CSV column order after ``t``.
DIAGNOSTICS = ("L1", "L2_R1", "Linf", "M_functional", "H1_log", "spectral_tail")
INTEGRATORS = ("exponential_euler", "rk4")
MAX_EXP = 700.0


class StepFailure(ArithmeticError):
    """A time step produced overflow or non-finite values."""

    def __init__(self, message: str, value: float = float("nan")):
        super().__init__(message)
        self.value = value


@dataclass(frozen=True)
class BlowupThresholds:
    sup_factor: float = 1e6
    tail_fraction: float = 1e-2
    max_halvings: int = 20

    def __post_init__(self):
        if not (self.sup_factor > 0 and self.tail_fraction > 0 and self.max_halvings > 0):
            raise ValueError("blow-up thresholds must be positive")


@dataclass(frozen=True, eq=False)
class Scenario:
    grid: Grid
    operator: MultiplierOp
    initial_data: Callable | SpectralField
    dt: float
    t_end: float
    weight_pair: Optional[WeightPair] = None
    integrator: str = "exponential_euler"
    diagnostics: tuple = ("L1", "Linf", "spectral_tail")
    thresholds: BlowupThresholds = field(default_factory=BlowupThresholds)
    sample_every: int = 1
    bisections: int = 12
    dealias: bool = True

    def __post_init__(self):
        if not (self.dt > 0 and self.t_end > 0):
            raise ValueError("dt and t_end must be positive")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}")
        unknown = set(self.diagnostics) - set(DIAGNOSTICS)
        if unknown:
            raise ValueError(f"unknown diagnostics {sorted(unknown)}")
        if "M_functional" in self.diagnostics and self.weight_pair is None:
            raise ValueError("M_functional needs a weight pair")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")

    def initial_field(self) -> SpectralField:
        if isinstance(self.initial_data, SpectralField):
            if self.initial_data.grid != self.grid:
                raise ValueError("initial field is on a different grid")
            return self.initial_data
        return SpectralField.from_function(self.grid, self.initial_data)


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    diagnostics: Dict[str, np.ndarray]
    final_state: SpectralField
    termination: str
    blowup_bracket: Optional[tuple] = None
    blowup_reason: Optional[str] = None
    steps: int = 0
    failure: Optional[str] = None

    @property
    def blowup_estimate(self) -> Optional[float]:
        if self.blowup_bracket is None:
            return None
        return 0.5 * (self.blowup_bracket[0] + self.blowup_bracket[1])

    def columns(self) -> list:
        return ["t"] + [d for d in DIAGNOSTICS if d in self.diagnostics]

    def write_csv(self, path) -> None:
        cols = self.columns()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(cols)
            for i, t in enumerate(self.times):
                row = [t] + [self.diagnostics[c][i] for c in cols[1:]]
                w.writerow([repr(float(v)) for v in row])

    def summary(self) -> dict:
        return {"termination": self.termination, "steps": self.steps,
                "t_final": float(self.times[-1]) if self.times.size else 0.0,
                "blowup_bracket": list(self.blowup_bracket) if self.blowup_bracket else None,
                "blowup_reason": self.blowup_reason, "failure": self.failure,
                "samples": int(self.times.size)}


# --- stepping -------------------------------------------------------------

def step_exponential(state: SpectralField, op: MultiplierOp, dt: float) -> SpectralField:
    """One exponential Euler step ``w exp(dt R(w))``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    arg = dt * apply_multiplier(state, op).values
    worst = float(np.max(arg))
    if worst > MAX_EXP:
        i = int(np.argmax(arg))
        raise StepFailure(f"exponential overflow at node {i}: dt*R(w) = {worst:.3e}", worst)
    out = state.values * np.exp(arg)
    if not np.all(np.isfinite(out)):
        raise StepFailure("non-finite state after exponential step")
    return SpectralField(state.grid, out)


def _dealias_mask(grid: Grid) -> np.ndarray:
    j = np.broadcast_arrays(*grid.mode_index)
    keep = np.ones(grid.shape, dtype=bool)
    for ji in j:
        keep &= np.abs(ji) < grid.n / 3
    return keep


def _rhs(values: np.ndarray, grid: Grid, op: MultiplierOp, mask) -> np.ndarray:
    c = sfft.fftn(values)
    if mask is not None:
        c = np.where(mask, c, 0.0)
    w = sfft.ifftn(c).real
    r = sfft.ifftn(op.symbol_on(grid) * c).real
    prod = w * r
    if mask is not None:
        prod = sfft.ifftn(np.where(mask, sfft.fftn(prod), 0.0)).real
    return prod


def step_rk4(state: SpectralField, op: MultiplierOp, dt: float, dealias: bool = True) -> SpectralField:
    """Classical RK4 on ``w R(w)``."""
    grid = state.grid
    mask = _dealias_mask(grid) if dealias else None
    w = state.values
    k1 = _rhs(w, grid, op, mask)
    k2 = _rhs(w + 0.5 * dt * k1, grid, op, mask)
    k3 = _rhs(w + 0.5 * dt * k2, grid, op, mask)
    k4 = _rhs(w + dt * k3, grid, op, mask)
    out = w + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise StepFailure("non-finite state after rk4 step")
    return SpectralField(grid, out)


# --- diagnostics ----------------------------------------------------------

def spectral_tail_fraction(state: SpectralField, kmax: Optional[float] = None) -> float:
    """Energy in the top third of resolved frequencies over total energy.

    ``kmax`` is the highest resolved index per axis: ``n/2`` by default,
    ``n/3`` for de-aliased runs whose upper band is identically zero.
    """
    e = np.abs(state.coefficients) ** 2
    total = float(e.sum())
    if total == 0.0:
        return 0.0
    kmax = state.grid.n / 2 if kmax is None else kmax
    j = np.broadcast_arrays(*state.grid.mode_index)
    top = np.zeros(state.grid.shape, dtype=bool)
    for ji in j:
        top |= np.abs(ji) >= 2 * kmax / 3
    return float(e[top].sum() / total)


def _r1(grid: Grid) -> MultiplierOp:
    return riesz(1, grid.ndim)


def _grad_sq(values: np.ndarray, grid: Grid) -> float:
    f = SpectralField(grid, values)
    tot = 0.0
    for axis in range(grid.ndim):
        d = apply_multiplier(f, derivative(axis, grid.ndim)).values
        tot += float(np.sum(d * d))
    return tot * grid.cell_volume


def energy_diagnostics(state: SpectralField) -> dict:
    """Quantities governed by the dissipation identities of ``d_t w = w R1^2 w``.

    Returns ``L1``, ``L2_R1`` (``|R1 w|^2``), ``dissipation``
    (``int w (R1^2 w)^2``) and, for strictly positive ``w``, ``H1_log``
    (``|grad log w|^2``; ``None`` otherwise).
    """
    grid = state.grid
    if grid.ndim != 2:
        raise ValueError("energy diagnostics are defined on 2-D grids")
    r1w = apply_multiplier(state, _r1(grid)).values
    r11w = apply_multiplier(state, riesz_product(1, 1)).values
    out = {
        "L1": float(np.sum(np.abs(state.values)) * grid.cell_volume),
        "L2_R1": float(np.sum(r1w * r1w) * grid.cell_volume),
        "dissipation": float(np.sum(state.values * r11w**2) * grid.cell_volume),
        "H1_log": None,
    }
    if np.min(state.values) > 0:
        out["H1_log"] = _grad_sq(np.log(state.values), grid)
    return out


class _Diagnostics:
    def __init__(self, scenario: Scenario, extra: Optional[Dict[str, Callable]] = None):
        self.names = [d for d in DIAGNOSTICS if d in scenario.diagnostics]
        self.grid = scenario.grid
        self.w1 = None
        if "M_functional" in self.names:
            w2f, w1f = scenario.weight_pair.fields(self.grid)
            mass = float(np.sum(w2f.values) * self.grid.cell_volume)
            self.w1 = w1f.values / mass
        self.extra = dict(extra or {})
        self.kmax = _kmax(scenario)

    def __call__(self, state: SpectralField) -> dict:
        g = self.grid
        out = {}
        for name in self.names:
            if name == "L1":
                out[name] = float(np.sum(np.abs(state.values)) * g.cell_volume)
            elif name == "L2_R1":
                r = apply_multiplier(state, _r1(g)).values
                out[name] = float(np.sum(r * r) * g.cell_volume)
            elif name == "Linf":
                out[name] = state.sup_norm()
            elif name == "M_functional":
                out[name] = float(np.sum(state.values * self.w1) * g.cell_volume)
            elif name == "H1_log":
                if np.min(state.values) <= 0:
                    raise ValueError("H1_log needs strictly positive w")
                out[name] = _grad_sq(np.log(state.values), g)
            elif name == "spectral_tail":
                out[name] = spectral_tail_fraction(state, self.kmax)
        for name, fn in self.extra.items():
            out[name] = float(fn(state))
        return out


# --- detection ------------------------------------------------------------

def detect_blowup(sup_norms: Sequence[float], tail_fractions: Optional[Sequence[float]] = None,
                  thresholds: BlowupThresholds = BlowupThresholds(), halvings: int = 0):
    """Index of the first sample flagged as blown up, and the reason.

    Returns ``(None, None)`` when nothing triggers.  The sup-norm threshold is
    relative to the first sample.
    """
    sup = np.asarray(sup_norms, dtype=float)
    if sup.size < 2:
        raise ValueError("need at least two samples")
    if halvings > thresholds.max_halvings:
        return sup.size - 1, "dt_cascade"
    limit = thresholds.sup_factor * sup[0]
    hits = []
    over = np.flatnonzero(~(sup <= limit))
    if over.size:
        hits.append((int(over[0]), "sup_norm"))
    if tail_fractions is not None:
        tail = np.asarray(tail_fractions, dtype=float)
        over = np.flatnonzero(tail > thresholds.tail_fraction)
        if over.size:
            hits.append((int(over[0]), "spectral_tail"))
    if not hits:
        return None, None
    return min(hits)


def _triggered(state: SpectralField, sup0: float, th: BlowupThresholds,
               kmax: Optional[float] = None) -> Optional[str]:
    if not state.sup_norm() <= th.sup_factor * sup0:
        return "sup_norm"
    if spectral_tail_fraction(state, kmax) > th.tail_fraction:
        return "spectral_tail"
    return None


def _kmax(scenario: Scenario) -> float:
    n = scenario.grid.n
    return n / 3 if scenario.integrator == "rk4" and scenario.dealias else n / 2


def run(scenario: Scenario, extra_diagnostics: Optional[Dict[str, Callable]] = None,
        on_sample: Optional[Callable] = None) -> Trajectory:
    """Integrate the scenario to ``t_end`` or until blow-up is detected.

    On detection the offending step is bisected (``scenario.bisections``
    times) from the last healthy state; the reported bracket's lower end is
    always a healthy time.  A first step that cannot be taken at all raises
    :class:`StepFailure`.
    """
    op, th = scenario.operator, scenario.thresholds
    kmax = _kmax(scenario)
    if scenario.integrator == "exponential_euler":
        def step(s, h):
            return step_exponential(s, op, h)
    else:
        def step(s, h):
            return step_rk4(s, op, h, scenario.dealias)

    state = scenario.initial_field()
    diag = _Diagnostics(scenario, extra_diagnostics)
    sup0 = state.sup_norm()
    if sup0 == 0.0:
        sup0 = 1.0
    times = [0.0]
    rows = [diag(state)]
    if on_sample:
        on_sample(0.0, state)
    t, n = 0.0, 0
    termination, bracket, reason, failure = "reached_t_end", None, None, None
    eps = 1e-12 * scenario.t_end

    while t < scenario.t_end - eps:
        h = min(scenario.dt, scenario.t_end - t)
        halvings = 0
        while True:
            try:
                new = step(state, h)
                break
            except StepFailure as exc:
                halvings += 1
                h *= 0.5
                failure = str(exc)
                if halvings > th.max_halvings:
                    break
        if halvings > th.max_halvings:
            if n == 0:
                raise StepFailure(f"first step fails after {th.max_halvings} halvings: {failure}")
            termination, reason = "blowup_detected", "dt_cascade"
            bracket = (t, t + h * 2)
            break
        hit = _triggered(new, sup0, th, kmax)
        if hit:
            lo, hi = 0.0, h
            for _ in range(scenario.bisections):
                mid = 0.5 * (lo + hi)
                try:
                    probe = _triggered(step(state, mid), sup0, th, kmax)
                except StepFailure:
                    probe = "step_failure"
                if probe:
                    hi = mid
                else:
                    lo = mid
            termination, reason, bracket = "blowup_detected", hit, (t + lo, t + hi)
            break
        t_new = t + h
        k = round(t_new / scenario.dt)
        if abs(t_new - k * scenario.dt) <= 1e-9 * scenario.dt:
            t_new = k * scenario.dt  # keep sample times on the dt lattice
        state, t, n = new, t_new, n + 1
        failure = None if halvings == 0 else failure
        if n % scenario.sample_every == 0 or t >= scenario.t_end - eps:
            times.append(t)
            rows.append(diag(state))
            if on_sample:
                on_sample(t, state)

    if termination == "blowup_detected" and times[-1] != t:
        times.append(t)
        rows.append(diag(state))
        if on_sample:
            on_sample(t, state)
    names = list(rows[0])
    return Trajectory(
        times=np.array(times), diagnostics={k: np.array([r[k] for r in rows]) for k in names},
        final_state=state, termination=termination, blowup_bracket=bracket,
        blowup_reason=reason, steps=n, failure=failure)


# --- exact oracles ----------------------------------------------------------

def clm_exact(omega0: np.ndarray, h_omega0: np.ndarray, t: float) -> np.ndarray:
    """Closed-form solution of ``w_t = w H w`` from ``w0`` and ``H w0``."""
    return 4.0 * omega0 / ((2.0 - t * h_omega0) ** 2 + t**2 * omega0**2)


def clm_blowup_time(omega0: np.ndarray, h_omega0: np.ndarray, zero_tol: float = 1e-12) -> float:
    """``2 / max{H w0 : w0 = 0}`` evaluated over the samples."""
    zeros = np.abs(omega0) <= zero_tol * max(1.0, float(np.max(np.abs(omega0))))
    cand = h_omega0[zeros]
    cand = cand[cand > 0]
    return 2.0 / float(np.max(cand)) if cand.size else math.inf


def burgers_exact(x: np.ndarray, t: float, f: Callable, df: Callable, tol: float = 1e-14) -> np.ndarray:
    """Characteristics solution of ``w_t = w w_x``: ``w(x, t) = f(x0)``, ``x = x0 - t f(x0)``.

    Valid before the first crossing ``t < 1 / max f'``.
    """
    x = np.asarray(x, dtype=float)
    x0 = x.copy()
    for _ in range(100):
        g = x0 - t * f(x0) - x
        step = g / (1.0 - t * df(x0))
        x0 = x0 - step
        if np.max(np.abs(step)) < tol:
            break
    return f(x0)


def burgers_blowup_time(df: Callable, lo: float, hi: float, samples: int = 20001) -> float:
    """``1 / max f'`` over ``[lo, hi]``, refined with a bracketed root of ``f''``."""
    xs = np.linspace(lo, hi, samples)
    d = df(xs)
    i = int(np.argmax(d))
    best = d[i]
    a, b = xs[max(i - 1, 0)], xs[min(i + 1, samples - 1)]
    h = 1e-6

    def ddf(z):
        return (df(z + h) - df(z - h)) / (2 * h)

    try:
        if ddf(a) * ddf(b) < 0:
            best = max(best, df(brentq(ddf, a, b, xtol=1e-14)))
    except ValueError:
        pass
    return 1.0 / best if best > 0 else math.inf


def numeric_derivative(f: Callable, h: float = 1e-3) -> Callable:
    """Fourth-order central difference of a scalar function."""
    def df(x):
        x = np.asarray(x, dtype=float)
        return (8 * (f(x + h) - f(x - h)) - (f(x + 2 * h) - f(x - 2 * h))) / (12 * h)
    return df


def oracle_residual(kind: str, grid: Grid, f: Callable, times: Sequence[float],
                    df: Optional[Callable] = None, dt: float = 1e-5) -> float:
    """Max of ``|d_t w - w R(w)|`` over ``times`` for an exact solution, relative to ``max |w R(w)|``.

    ``kind`` is ``clm`` (``R = H``, 1-D torus data ``f``; uses ``H f``
    computed spectrally) or ``burgers`` (``R = d/dx``).  The time
    derivative is a central difference of step ``dt``; the right side is
    spectral.  A small value certifies the closed form before it is used.
    """
    from .spectral import hilbert

    x = grid.mesh()[0]
    if kind == "clm":
        w0 = SpectralField.from_function(grid, f)
        hw0 = apply_multiplier(w0, hilbert()).values

        def exact(t):
            return clm_exact(w0.values, hw0, t)

        op = hilbert()
    elif kind == "burgers":
        df = df or numeric_derivative(f)

        def exact(t):
            return burgers_exact(x, t, f, df)

        op = derivative(0, 1)
    else:
        raise ValueError(f"no oracle residual for {kind!r}")
    worst = 0.0
    for t in times:
        dwdt = (exact(t + dt) - exact(t - dt)) / (2 * dt) if t > dt else (exact(t + dt) - exact(t)) / dt
        w = SpectralField(grid, exact(t))
        rhs = w.values * apply_multiplier(w, op).values
        worst = max(worst, float(np.max(np.abs(dwdt - rhs)) / max(np.max(np.abs(rhs)), 1e-300)))
    return worst


@dataclass(frozen=True)
class DissipationStudy:
    dts: tuple
    residuals: tuple
    orders: tuple
    max_increase_R1: tuple
    max_increase_H1: tuple
    tolerance: float

    @property
    def observed_order(self) -> float:
        return float(min(self.orders))

    @property
    def monotone(self) -> bool:
        return max(self.max_increase_R1 + self.max_increase_H1) <= 0.0

    def to_dict(self) -> dict:
        return {"dts": list(self.dts), "residuals": list(self.residuals), "orders": list(self.orders),
                "observed_order": self.observed_order,
                "max_increase_L2_R1": list(self.max_increase_R1),
                "max_increase_H1_log": list(self.max_increase_H1),
                "per_step_tolerance": self.tolerance, "monotone": self.monotone}


def dissipation_study(omega0: SpectralField, t_end: float, dts: Sequence[float],
                      rtol: float = 1e-6) -> DissipationStudy:
    """Refinement study of ``d_t w = w R1^2 w`` with exponential Euler.

    Per ``dt``: the largest ``|(L1(t+dt) - L1(t))/dt + |R1 w(t)|^2|`` over the
    run, and the largest per-step increases of ``|R1 w|^2`` and
    ``|grad log w|^2`` in excess of ``rtol`` times their initial values.
    Orders are ``log2`` of successive residual ratios (``dts`` halving).
    """
    op = riesz_product(1, 1)
    d0 = energy_diagnostics(omega0)
    if d0["H1_log"] is None:
        raise ValueError("dissipation study needs strictly positive data")
    res, inc_r, inc_h = [], [], []
    for dt in dts:
        steps = int(round(t_end / dt))
        s, d = omega0, d0
        worst, ir, ih = 0.0, -math.inf, -math.inf
        for _ in range(steps):
            s2 = step_exponential(s, op, dt)
            d2 = energy_diagnostics(s2)
            worst = max(worst, abs((d2["L1"] - d["L1"]) / dt + d["L2_R1"]))
            ir = max(ir, d2["L2_R1"] - d["L2_R1"] - rtol * d0["L2_R1"])
            ih = max(ih, d2["H1_log"] - d["H1_log"] - rtol * d0["H1_log"])
            s, d = s2, d2
        res.append(worst)
        inc_r.append(ir)
        inc_h.append(ih)
    orders = tuple(float(np.log2(a / b)) for a, b in zip(res[:-1], res[1:]))
    return DissipationStudy(tuple(dts), tuple(res), orders, tuple(inc_r), tuple(inc_h), rtol)
