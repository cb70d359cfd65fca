"""Uniform periodic grids, real fields and Fourier multiplier operators.

Every operator in the package is a Fourier multiplier ``m(xi)`` acting
diagonally on the discrete Fourier coefficients of a real field.  Line
problems (R or R^2) are approximated on a periodic box ``[-L, L)^d``.

Conventions:

* Hilbert transform: symbol ``-i sgn(xi)``, so ``H cos = sin``.
* Riesz transform ``R_j``: symbol ``-i xi_j / |xi|``.
* Symbols of H, R_j and their compositions vanish at ``xi = 0``.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid",
    "SpectralField",
    "MultiplierOp",
    "DimensionMismatch",
    "apply_multiplier",
    "adjoint",
    "compose",
    "inner_product",
    "l2_norm",
    "random_field",
    "derivative",
    "hilbert",
    "riesz",
    "riesz_product",
    "neg_identity",
    "zero_operator",
    "operator_by_name",
    "REALITY_TOL",
]

#: Relative bound on the imaginary residue of a multiplier applied to a real field.
REALITY_TOL = 1e-12


class DimensionMismatch(ValueError):
    """Raised when fields/operators live on incompatible grids."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[origin, origin + length)^ndim``.

    ``half_width`` is set for boxes that truncate a line domain and is
    ``None`` for genuine tori.
    """

    ndim: int
    n: int
    length: float = 2 * np.pi
    origin: float = 0.0
    half_width: Optional[float] = None

    def __post_init__(self):
        if self.ndim not in (1, 2):
            raise ValueError(f"ndim must be 1 or 2, got {self.ndim}")
        if self.n < 4 or self.n % 2:
            raise ValueError(f"points per axis must be even and >= 4, got {self.n}")
        if not self.length > 0:
            raise ValueError("period must be positive")

    @classmethod
    def torus(cls, n: int, ndim: int = 1, length: float = 2 * np.pi) -> "Grid":
        return cls(ndim=ndim, n=n, length=float(length), origin=0.0)

    @classmethod
    def box(cls, n: int, half_width: float = 32.0, ndim: int = 1) -> "Grid":
        """Periodic box ``[-L, L)^ndim`` standing in for the whole line/plane."""
        L = float(half_width)
        return cls(ndim=ndim, n=n, length=2 * L, origin=-L, half_width=L)

    @property
    def is_line(self) -> bool:
        return self.half_width is not None

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.ndim

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.ndim

    @cached_property
    def nodes(self) -> np.ndarray:
        """1-D node coordinates along each axis."""
        return self.origin + self.spacing * np.arange(self.n)

    def mesh(self, shift: float = 0.0, refine: int = 1) -> tuple:
        """Coordinate arrays (``indexing='ij'``).

        ``refine`` subdivides each cell and ``shift`` offsets every node by
        that fraction of the (refined) spacing; ``shift=0.5`` gives cell
        midpoints.
        """
        m = self.n * refine
        h = self.length / m
        x = self.origin + h * (np.arange(m) + shift)
        if self.ndim == 1:
            return (x,)
        return tuple(np.meshgrid(x, x, indexing="ij"))

    @cached_property
    def wavenumbers(self) -> tuple:
        """Physical wavenumbers per axis, broadcastable against field arrays."""
        k = 2 * np.pi / self.length * sfft.fftfreq(self.n, 1.0 / self.n)
        if self.ndim == 1:
            return (k,)
        return (k[:, None], k[None, :])

    @cached_property
    def mode_index(self) -> tuple:
        """Integer frequency indices per axis (broadcastable)."""
        j = np.rint(sfft.fftfreq(self.n, 1.0 / self.n)).astype(int)
        if self.ndim == 1:
            return (j,)
        return (j[:, None], j[None, :])

    def describe(self) -> dict:
        d = {"ndim": self.ndim, "points_per_axis": self.n, "period": self.length,
             "origin": self.origin, "spacing": self.spacing}
        if self.is_line:
            d["box_half_width"] = self.half_width
        return d


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Real field sampled on a grid, with lazily cached Fourier coefficients.

    ``source`` optionally keeps the function the samples came from, so
    off-grid evaluation can use it instead of trigonometric interpolation.
    """

    grid: Grid
    values: np.ndarray
    source: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise DimensionMismatch(f"values shape {v.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, f: Callable, keep_source: bool = True) -> "SpectralField":
        vals = np.broadcast_to(np.asarray(f(*grid.mesh()), dtype=float), grid.shape)
        return cls(grid, vals, f if keep_source else None)

    @cached_property
    def coefficients(self) -> np.ndarray:
        return sfft.fftn(self.values)

    def evaluate_on(self, refine: int = 1, shift: float = 0.0) -> np.ndarray:
        """Values on a refined and/or shifted uniform grid.

        Uses ``source`` when available, otherwise the trigonometric
        interpolant (the Nyquist coefficient is split evenly between +/-).
        """
        if self.source is not None:
            out = np.asarray(self.source(*self.grid.mesh(shift=shift, refine=refine)), dtype=float)
            return np.broadcast_to(out, (self.grid.n * refine,) * self.grid.ndim).copy()
        if refine == 1 and shift == 0.0:
            return np.array(self.values)
        n, m = self.grid.n, self.grid.n * refine
        c = self.coefficients
        for axis in range(self.grid.ndim):
            c = _zero_pad(c, axis, n, m)
        idx = np.rint(sfft.fftfreq(m, 1.0 / m))
        phase = np.exp(2j * np.pi * idx * shift / m)
        for axis in range(self.grid.ndim):
            shape = [1] * self.grid.ndim
            shape[axis] = m
            c = c * phase.reshape(shape)
        return sfft.ifftn(c).real * refine**self.grid.ndim

    def with_values(self, values: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, values)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def _zero_pad(c: np.ndarray, axis: int, n: int, m: int) -> np.ndarray:
    if m == n:
        return c
    c = np.moveaxis(c, axis, 0)
    out = np.zeros((m,) + c.shape[1:], dtype=complex)
    half = n // 2
    out[:half] = c[:half]
    out[m - half + 1:] = c[half + 1:]
    out[half] = 0.5 * c[half]
    out[m - half] = 0.5 * c[half]
    return np.moveaxis(out, 0, axis)


@dataclass(frozen=True, eq=False)
class MultiplierOp:
    """Fourier multiplier ``xi -> symbol(xi)``.

    ``symbol`` receives a tuple of physical wavenumber arrays (one per axis)
    and returns the complex symbol.  ``zero_mode`` overrides the value at
    ``xi = 0``; ``None`` keeps whatever the symbol gives there.  ``ndim``
    restricts the operator to one dimension (``None``: any).
    """

    name: str
    symbol: Callable
    zero_mode: Optional[complex] = 0.0
    ndim: Optional[int] = None

    def symbol_on(self, grid: Grid) -> np.ndarray:
        return _symbol_array(self, grid)

    def __repr__(self):
        return f"MultiplierOp({self.name!r})"


@functools.lru_cache(maxsize=128)
def _symbol_array(op: MultiplierOp, grid: Grid) -> np.ndarray:
    if op.ndim is not None and op.ndim != grid.ndim:
        raise DimensionMismatch(f"operator {op.name} is {op.ndim}-D, grid is {grid.ndim}-D")
    ks = np.broadcast_arrays(*grid.wavenumbers)
    with np.errstate(divide="ignore", invalid="ignore"):
        m = np.asarray(op.symbol(tuple(ks)), dtype=complex)
    m = np.broadcast_to(m, grid.shape).copy()
    origin = (0,) * grid.ndim
    if op.zero_mode is not None:
        m[origin] = op.zero_mode
    if not np.all(np.isfinite(m)):
        bad = np.argwhere(~np.isfinite(m))[0]
        raise ValueError(f"symbol of {op.name} is not finite at frequency index {tuple(bad)}")
    # Hermitian part: exact real-to-real action on the grid.  Only modes on the
    # Nyquist planes change for symbols with m(-xi) = conj(m(xi)).
    mirror = m
    for axis in range(grid.ndim):
        mirror = np.roll(np.flip(mirror, axis=axis), 1, axis=axis)
    m = 0.5 * (m + np.conj(mirror))
    m.flags.writeable = False
    return m


def apply_multiplier(f: SpectralField, op: MultiplierOp) -> SpectralField:
    """Return ``op(f)`` as a real field."""
    m = op.symbol_on(f.grid)
    out = sfft.ifftn(m * f.coefficients)
    scale = max(1.0, float(np.max(np.abs(out.real))), f.sup_norm() * float(np.max(np.abs(m))))
    resid = float(np.max(np.abs(out.imag)))
    if resid > REALITY_TOL * scale:
        raise ValueError(f"{op.name} produced a complex field (imag residue {resid:.3e})")
    return SpectralField(f.grid, out.real)


def adjoint(op: MultiplierOp) -> MultiplierOp:
    """Formal L^2 adjoint: the conjugate symbol."""
    zm = None if op.zero_mode is None else np.conj(op.zero_mode)
    return MultiplierOp(f"adjoint({op.name})", lambda k, s=op.symbol: np.conj(s(k)), zm, op.ndim)


def compose(a: MultiplierOp, b: MultiplierOp) -> MultiplierOp:
    """``a o b`` (multipliers commute, so order only affects the name)."""
    if a.ndim is not None and b.ndim is not None and a.ndim != b.ndim:
        raise DimensionMismatch("cannot compose operators of different dimension")
    if a.zero_mode is None or b.zero_mode is None:
        zm = None
    else:
        zm = a.zero_mode * b.zero_mode
    return MultiplierOp(f"{a.name}{b.name}", lambda k: a.symbol(k) * b.symbol(k), zm, a.ndim or b.ndim)


def inner_product(f: SpectralField, g: SpectralField) -> float:
    """Uniform-node quadrature of ``f g`` over the periodic domain."""
    if f.grid != g.grid:
        raise DimensionMismatch("fields live on different grids")
    return float(np.sum(f.values * g.values) * f.grid.cell_volume)


def l2_norm(f: SpectralField) -> float:
    return float(np.sqrt(inner_product(f, f)))


def random_field(grid: Grid, rng: np.random.Generator, *, mean_zero: bool = False,
                 below_nyquist: bool = True, decay: float = 0.0) -> SpectralField:
    """Seeded random real field.

    With ``below_nyquist`` the field is a trigonometric polynomial with no
    Nyquist content, the class on which ``H^2 = -Id`` holds exactly.
    ``decay`` damps coefficients like ``(1 + |j|)^-decay``.
    """
    vals = rng.standard_normal(grid.shape)
    c = sfft.fftn(vals)
    j = np.broadcast_arrays(*grid.mode_index)
    if decay:
        c = c * (1.0 + np.sqrt(sum(ji.astype(float) ** 2 for ji in j))) ** (-decay)
    if below_nyquist:
        for ji in j:
            c[np.abs(ji) == grid.n // 2] = 0.0
    if mean_zero:
        c[(0,) * grid.ndim] = 0.0
    return SpectralField(grid, sfft.ifftn(c).real)


# --- operator catalog -----------------------------------------------------

def _abs_k(k):
    return np.sqrt(sum(ki**2 for ki in k))


def derivative(axis: int = 0, ndim: Optional[int] = None) -> MultiplierOp:
    """``d/dx_axis``; symbol ``i xi_axis``."""
    name = "dx" if axis == 0 else "dy"
    return MultiplierOp(name, lambda k: 1j * k[axis], 0.0, ndim)


def hilbert() -> MultiplierOp:
    return MultiplierOp("H", lambda k: -1j * np.sign(k[0]), 0.0, 1)


def riesz(j: int, ndim: int = 2) -> MultiplierOp:
    """First (``j=1``) or second (``j=2``) Riesz transform.  In 1-D, R_1 = H."""
    if not 1 <= j <= ndim:
        raise ValueError(f"no Riesz component {j} in {ndim}-D")
    return MultiplierOp(f"R{j}", lambda k: -1j * k[j - 1] / _abs_k(k), 0.0, ndim)


def riesz_product(i: int, j: int) -> MultiplierOp:
    """``R_i R_j`` on the plane; symbol ``-xi_i xi_j / |xi|^2``."""
    name = f"R{i}^2" if i == j else f"R{i}R{j}"
    return MultiplierOp(name, lambda k: -k[i - 1] * k[j - 1] / _abs_k(k) ** 2, 0.0, 2)


def neg_identity(ndim: Optional[int] = None) -> MultiplierOp:
    return MultiplierOp("-Id", lambda k: -np.ones_like(k[0]), -1.0, ndim)


def zero_operator(ndim: Optional[int] = None) -> MultiplierOp:
    return MultiplierOp("0", lambda k: np.zeros_like(k[0]), 0.0, ndim)


def operator_by_name(name: str, ndim: int) -> MultiplierOp:
    """Look up a catalog operator by its short name."""
    table = {
        "dx": lambda: derivative(0, ndim),
        "dy": lambda: derivative(1, ndim),
        "H": hilbert,
        "R1": lambda: riesz(1, ndim),
        "R2": lambda: riesz(2, ndim),
        "R1R2": lambda: riesz_product(1, 2),
        "R1^2": lambda: riesz_product(1, 1),
        "R2^2": lambda: riesz_product(2, 2),
        "-Id": lambda: neg_identity(ndim),
        "0": lambda: zero_operator(ndim),
    }
    try:
        op = table[name]()
    except KeyError:
        raise ValueError(f"unknown operator {name!r}; known: {sorted(table)}") from None
    if op.ndim is not None and op.ndim != ndim:
        raise DimensionMismatch(f"operator {name} is {op.ndim}-D, scenario is {ndim}-D")
    return op
