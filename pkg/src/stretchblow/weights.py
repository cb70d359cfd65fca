"""Weight pairs ``(W2, W1 = R*(W2))`` for the Jensen blow-up criterion.

Closed-form pairs come from the classical examples (Burgers, CLM on the
line and torus, ``R1 R2`` on the torus).  ``numeric_weight`` builds ``W1``
spectrally for any catalog operator.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .spectral import (Grid, MultiplierOp, SpectralField, adjoint, apply_multiplier,
                       derivative, hilbert, riesz_product)

__all__ = ["WeightPair", "catalog_pair", "numeric_weight", "CATALOG", "image_sum"]

CLOSED_FORM = "closed_form"
NUMERIC = "numeric"


@dataclass(frozen=True, eq=False)
class WeightPair:
    """Test weights of the criterion.

    ``w2`` and ``w1`` are callables of the coordinate arrays.  For numeric
    pairs ``w1`` is ``None`` and W1 is recomputed spectrally on whatever grid
    it is sampled on.  ``normalization`` is the quadrature of W2 on
    ``grid`` (exact for tori); ``exact_mass`` is the mass over the whole
    domain when known, so the box deficit of line problems can be reported.
    """

    operator_name: str
    op: MultiplierOp
    w2: Callable
    w1: Optional[Callable]
    provenance: str
    grid: Grid
    normalization: float
    exact_mass: Optional[float] = None
    periodic_w1: Optional[Callable] = field(default=None, repr=False)
    periodic_w2: Optional[Callable] = field(default=None, repr=False)
    name: str = ""

    def fields(self, grid: Optional[Grid] = None) -> tuple:
        """``(W2, W1)`` as spectral fields on ``grid`` (default: the pair's grid)."""
        grid = grid or self.grid
        w2 = SpectralField.from_function(grid, self.w2)
        if np.any(w2.values < 0):
            raise ValueError(f"W2 of {self.name or self.operator_name} is negative on the grid")
        if self.w1 is not None:
            w1 = SpectralField.from_function(grid, self.w1)
        else:
            w1 = apply_multiplier(SpectralField(grid, w2.values), adjoint(self.op))
        return w2, w1

    def sample(self, grid: Optional[Grid] = None) -> tuple:
        w2, w1 = self.fields(grid)
        return w2.values, w1.values

    def mass_on(self, grid: Grid) -> float:
        if not grid.is_line and self.exact_mass is not None:
            return self.exact_mass
        return float(np.sum(self.sample(grid)[0]) * grid.cell_volume)

    @property
    def mass_deficit(self) -> Optional[float]:
        """Exact mass minus box quadrature (line domains), else ``None``."""
        if self.exact_mass is None or not self.grid.is_line:
            return None
        return self.exact_mass - self.normalization

    def describe(self) -> dict:
        d = {"name": self.name, "operator": self.operator_name, "provenance": self.provenance,
             "normalization": self.normalization, "grid": self.grid.describe()}
        if self.exact_mass is not None:
            d["exact_mass"] = self.exact_mass
        if self.mass_deficit is not None:
            d["box_mass_deficit"] = self.mass_deficit
        return d


def image_sum(f: Callable, period: float, images: int = 2000) -> Callable:
    """Periodization ``sum_n f(x + n period)`` over ``|n| <= images`` (1-D)."""
    shifts = period * np.arange(-images, images + 1)

    def g(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for s in np.array_split(shifts, 16):
            out += f(x[..., None] + s).sum(axis=-1)
        return out

    return g


# --- closed forms ---------------------------------------------------------

def _burgers_w2(x):
    return 1.0 / (1.0 + x**2) ** 2


def _burgers_w1(x):
    return 4.0 * x / (1.0 + x**2) ** 3


def _clm_line_w2(x):
    return 1.0 / (1.0 + x**2)


def _clm_line_w1(x):
    return -x / (1.0 + x**2)


def _poisson_periodic(L):
    # periodizations of 1/(1+x^2) and x/(1+x^2) with period 2L, in closed form
    a = np.pi / L

    def w2(x):
        return 0.5 * a * np.sinh(a) / (np.cosh(a) - np.cos(a * x))

    def w1(x):
        return -0.5 * a * np.sin(a * x) / (np.cosh(a) - np.cos(a * x))

    return w2, w1


def _burgers(grid):
    grid = grid or Grid.box(4096, 32.0)
    per = image_sum(_burgers_w2, grid.length), image_sum(_burgers_w1, grid.length)
    return dict(op=derivative(0, 1), w2=_burgers_w2, w1=_burgers_w1, grid=grid,
                exact_mass=np.pi / 2, periodic_w2=per[0], periodic_w1=per[1])


def _clm_line(grid):
    grid = grid or Grid.box(4096, 32.0)
    w2p, w1p = _poisson_periodic(grid.half_width)
    return dict(op=hilbert(), w2=_clm_line_w2, w1=_clm_line_w1, grid=grid,
                exact_mass=np.pi, periodic_w2=w2p, periodic_w1=w1p)


def _clm_torus(grid):
    return dict(op=hilbert(), w2=lambda x: 1.0 + np.cos(x), w1=lambda x: -np.sin(x),
                grid=grid or Grid.torus(256), exact_mass=2 * np.pi)


def _riesz12_torus(grid):
    return dict(op=riesz_product(1, 2), w2=lambda x, y: 1.0 + np.cos(x) * np.cos(y),
                w1=lambda x, y: 0.5 * np.sin(x) * np.sin(y),
                grid=grid or Grid.torus(64, ndim=2), exact_mass=4 * np.pi**2)


def _riesz12_plane(grid):
    return dict(op=riesz_product(1, 2), w2=lambda x, y: 1.0 / (1.0 + x**2 + y**2) ** 3,
                w1=None, grid=grid or Grid.box(512, 32.0, ndim=2), exact_mass=np.pi / 2)


CATALOG = {
    "burgers_line": _burgers,
    "clm_line": _clm_line,
    "clm_torus": _clm_torus,
    "riesz12_torus": _riesz12_torus,
    "riesz12_plane": _riesz12_plane,
}


def catalog_pair(name: str, grid: Optional[Grid] = None) -> WeightPair:
    """Named weight pair of the classical examples.

    >>> p = catalog_pair("clm_torus")
    >>> float(p.w1(np.pi / 2))
    -1.0
    """
    try:
        spec = CATALOG[name](grid)
    except KeyError:
        raise ValueError(f"unknown weight pair {name!r}; known: {sorted(CATALOG)}") from None
    g = spec["grid"]
    op = spec["op"]
    if op.ndim is not None and op.ndim != g.ndim:
        raise ValueError(f"{name} is {op.ndim}-D but the grid is {g.ndim}-D")
    provenance = CLOSED_FORM if spec["w1"] is not None else NUMERIC
    pair = WeightPair(
        operator_name=op.name, op=op, w2=spec["w2"], w1=spec["w1"], provenance=provenance,
        grid=g, normalization=float("nan"), exact_mass=spec.get("exact_mass"),
        periodic_w1=spec.get("periodic_w1"), periodic_w2=spec.get("periodic_w2"), name=name)
    return replace(pair, normalization=pair.mass_on(g))


def numeric_weight(op: MultiplierOp, W2: Callable, grid: Grid, name: str = "") -> WeightPair:
    """Pair with ``W1 = R*(W2)`` computed spectrally on ``grid``."""
    vals = np.broadcast_to(np.asarray(W2(*grid.mesh()), dtype=float), grid.shape)
    if not np.all(np.isfinite(vals)):
        raise ValueError("W2 is not finite on the grid")
    if np.any(vals < 0):
        raise ValueError("W2 is negative on the grid")
    pair = WeightPair(operator_name=op.name, op=op, w2=W2, w1=None, provenance=NUMERIC,
                      grid=grid, normalization=float(np.sum(vals) * grid.cell_volume),
                      name=name or f"numeric[{op.name}]")
    return pair
