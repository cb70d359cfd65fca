"""Polar analysis of ``d_t w = w R1^2 w`` for data supported in a cone.

Angular cosine modes, the radial modes of ``Delta psi = w``, the linear
operator ``L`` bounding the angular average of ``R1^2 w`` from below with
its generated adjoint ``L*``, the singular weight
``W2 = r^(a-1) / (1 + r^(2a))`` and the spectral sign experiment for
``R1^2 (W2 Gamma)``.

The cone is the set of angles within ``pi/8`` of ``center`` modulo pi
(default ``center = pi/2``, i.e. ``3pi/8 < |theta| < 5pi/8``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.fft as sfft
from scipy import integrate, special
from scipy.ndimage import map_coordinates

from .radial import RadialGrid, RadialProfile, TailError, moment_above, moment_below
from .spectral import Grid, MultiplierOp, SpectralField, apply_multiplier, riesz_product

__all__ = [
    "CONE", "HALF_WIDTH", "SymmetryError", "PolarModes", "angular_modes", "solve_stream_modes",
    "mode_ode_residual", "s_integral", "cone_inequality_check", "Term", "L_terms", "adjoint_terms",
    "apply_terms", "L_apply", "Lstar_apply", "radial_inner", "SingularWeight", "singular_weight",
    "DominanceResult", "dominance_check", "dominance_scan", "ConeAngularProfile", "HaReport",
    "ha_experiment", "ALPHA_SCAN", "KeyBoundReport", "key_bound_monitor", "default_radial_grid",
    "write_profile_csv", "theta_samples",
]

CONE = (3 * np.pi / 8, 5 * np.pi / 8)
HALF_WIDTH = np.pi / 8
ALPHA_SCAN = (0.2, 0.1, 0.05, 0.02, 0.01)


def default_radial_grid(r_min: float = 1e-6, r_max: float = 1e6, per_decade: int = 64,
                        knots: Sequence[float] = (1.0,), jumps: Sequence[float] = ()) -> RadialGrid:
    return RadialGrid.log_spaced(r_min, r_max, per_decade, knots=knots, jumps=jumps)


def write_profile_csv(path, r: np.ndarray, values: np.ndarray) -> None:
    """Two-column CSV ``r,value`` with CRLF line ends."""
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["r", "value"])
        for a, b in zip(np.asarray(r, float), np.asarray(values, float)):
            w.writerow([repr(float(a)), repr(float(b))])


# --- angular modes ----------------------------------------------------------

class SymmetryError(ValueError):
    """Samples are not even and pi-periodic in theta."""

    def __init__(self, defect: float, tol: float):
        super().__init__(f"angular samples are not even and pi-periodic: defect {defect:.3e} > {tol:.1e}")
        self.defect = defect


@dataclass(frozen=True, eq=False)
class PolarModes:
    """Cosine modes ``f_2k(r)``, ``k = 0..K``, stacked as ``modes[k]``."""

    radial_grid: RadialGrid
    modes: np.ndarray
    symmetry_defect: float = 0.0

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.modes, dtype=float))
        if m.shape[1] != len(self.radial_grid):
            raise ValueError("modes do not match the radial grid")
        if not np.all(np.isfinite(m)):
            raise ValueError("mode values must be finite")
        object.__setattr__(self, "modes", m)

    @property
    def k_max(self) -> int:
        return self.modes.shape[0] - 1

    def mode(self, k: int) -> RadialProfile:
        return RadialProfile(self.radial_grid, self.modes[k], name=f"mode{2 * k}")

    def reconstruct(self, theta) -> np.ndarray:
        """``sum_k f_2k(r) cos(2k theta)``, shape ``(nr, ntheta)``."""
        theta = np.asarray(theta, dtype=float)
        k = np.arange(self.modes.shape[0])
        return self.modes.T @ np.cos(2 * np.outer(k, theta))


def theta_samples(n_theta: int) -> np.ndarray:
    return 2 * np.pi * np.arange(n_theta) / n_theta


def angular_modes(f, radial_grid: RadialGrid, n_theta: int = 260, k_max: Optional[int] = None,
                  tol: float = 1e-8) -> PolarModes:
    """Cosine modes of ``f`` by trapezoidal angular quadrature per radial node.

    ``f`` is a callable ``f(r, theta)`` (broadcasting) or an array of
    samples of shape ``(nr, n_theta)`` at ``theta_j = 2 pi j / n_theta``.
    Sine content or odd harmonics above ``tol`` relative raise
    :class:`SymmetryError`; nothing is projected away silently.
    """
    if callable(f):
        th = theta_samples(n_theta)
        vals = np.asarray(f(radial_grid.nodes[:, None], th[None, :]), dtype=float)
        vals = np.broadcast_to(vals, (len(radial_grid), n_theta))
    else:
        vals = np.asarray(f, dtype=float)
        if vals.ndim != 2 or vals.shape[0] != len(radial_grid):
            raise ValueError("samples must have shape (nr, n_theta)")
        n_theta = vals.shape[1]
    if n_theta % 4:
        raise ValueError("n_theta must be a multiple of 4")
    c = sfft.rfft(vals, axis=1) / n_theta
    scale = float(np.max(np.abs(c))) if c.size else 0.0
    defect = 0.0
    if scale > 0:
        odd = np.abs(c[:, 1::2]).max() if c.shape[1] > 1 else 0.0
        sine = np.abs(c.imag).max()
        defect = float(max(odd, sine) / scale)
    if defect > tol:
        raise SymmetryError(defect, tol)
    top = n_theta // 4
    k_max = top - 1 if k_max is None else k_max
    if k_max > top:
        raise ValueError(f"k_max {k_max} needs n_theta > {4 * k_max}")
    modes = np.empty((k_max + 1, len(radial_grid)))
    for k in range(k_max + 1):
        w = 1.0 if k == 0 or 2 * k == n_theta // 2 else 2.0
        modes[k] = w * c[:, 2 * k].real
    return PolarModes(radial_grid, modes, defect)


# --- stream function --------------------------------------------------------

def _stream_mode(omega: RadialProfile, k: int) -> np.ndarray:
    r = omega.grid.nodes
    if not np.any(omega.values):
        return np.zeros_like(r)
    if k == 0:
        inner = moment_below(omega, 1.0)
        return moment_below(omega.with_values(inner), -1.0)
    n = 2 * k
    inner = moment_below(omega, n + 1.0)
    outer = moment_above(omega.with_values(inner), -2.0 * n - 1.0)
    return -(r**n) * outer


def solve_stream_modes(omega: PolarModes) -> PolarModes:
    """Radial modes of the decaying solution of ``Delta psi = w``.

    ``psi_0 = int_0^r s^-1 int_0^s t w_0 dt ds`` and, for ``k >= 1``,
    ``psi_2k = -r^2k int_r^inf s^(-4k-1) int_0^s t^(2k+1) w_2k dt ds``.
    Tails beyond the grid use power-law extrapolation; non-decaying tails
    raise :class:`TailError`.
    """
    out = np.array([_stream_mode(omega.mode(k), k) for k in range(omega.k_max + 1)])
    return PolarModes(omega.radial_grid, out)


def _d2_log(values: np.ndarray, grid: RadialGrid) -> np.ndarray:
    """Fourth-order second derivative in ``u = log r`` per segment (NaN near ends)."""
    out = np.full(values.size, np.nan)
    u = np.log(grid.nodes)
    for a, b in grid.segments:
        if b - a < 4:
            continue
        h = (u[b] - u[a]) / (b - a)
        f = values[a:b + 1]
        d = (-f[4:] + 16 * f[3:-1] - 30 * f[2:-2] + 16 * f[1:-3] - f[:-4]) / (12 * h * h)
        out[a + 2:b - 1] = d
    return out


def mode_ode_residual(psi: RadialProfile, omega: RadialProfile, k: int) -> np.ndarray:
    """``psi'' + psi'/r - (2k)^2 psi / r^2 - w_2k`` at each node (NaN where no stencil fits)."""
    if psi.grid is not omega.grid and not np.array_equal(psi.grid.nodes, omega.grid.nodes):
        raise ValueError("profiles live on different grids")
    if k < 0:
        raise ValueError("k must be >= 0")
    if len(psi.grid) < 5:
        raise ValueError("need at least 5 nodes")
    r = psi.grid.nodes
    lap = (_d2_log(psi.values, psi.grid) - (2 * k) ** 2 * psi.values) / r**2
    return lap - omega.values


def s_integral(omega2: RadialProfile, r: float) -> dict:
    """``S(r) = int_r^inf s^-5 int_0^s t^3 w_2 dt ds`` two ways.

    ``nested`` is the direct double quadrature, ``by_parts`` is
    ``1/4 int_r^inf w_2 / s ds + 1/4 r^-4 int_0^r s^3 w_2 ds``.
    """
    i = omega2.grid.index_of(r)
    inner = moment_below(omega2, 3.0)
    nested = float(moment_above(omega2.with_values(inner), -5.0)[i])
    by_parts = float(0.25 * moment_above(omega2, -1.0)[i] + 0.25 * r**-4 * inner[i])
    den = max(abs(nested), abs(by_parts))
    defect = abs(nested - by_parts) / den if den > 0 else 0.0
    return {"r": float(r), "nested": nested, "by_parts": by_parts, "defect": defect}


def cone_inequality_check(k_max: int, theta) -> float:
    """``min_k min_theta sqrt(2)|cos 2theta| - |cos 2k theta|`` over ``1 <= k <= k_max``."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < CONE[0] - 1e-15) or np.any(theta > CONE[1] + 1e-15):
        raise ValueError("theta samples must lie in [3pi/8, 5pi/8]")
    k = np.arange(1, k_max + 1)[:, None]
    slack = np.sqrt(2.0) * np.abs(np.cos(2 * theta))[None, :] - np.abs(np.cos(2 * k * theta[None, :]))
    return float(slack.min())


# --- L and its adjoint --------------------------------------------------------

@dataclass(frozen=True)
class Term:
    """``coef * r^a g(r)`` (kind ``id``), ``coef * r^a int_0^r s^b g`` (``lower``)
    or ``coef * r^a int_r^inf s^b g`` (``upper``)."""

    kind: str
    coef: float
    a: float
    b: float = 0.0

    def adjoint(self) -> "Term":
        # <r^a int_0^r s^b g, h> = <g, s^b int_s^inf r^a h>
        if self.kind == "id":
            return self
        flip = {"lower": "upper", "upper": "lower"}[self.kind]
        return Term(flip, self.coef, self.b, self.a)

    def describe(self) -> str:
        if self.kind == "id":
            return f"{self.coef:+g} r^{self.a:g} g(r)"
        lim = "int_0^r" if self.kind == "lower" else "int_r^inf"
        return f"{self.coef:+g} r^{self.a:g} {lim} s^{self.b:g} g(s) ds"


def L_terms(c: float, C: float) -> tuple:
    """``L g = c int_r^inf g/s - C (g + r^-1 int_0^r g + r int_r^inf g/s^2)``."""
    return (Term("upper", c, 0.0, -1.0), Term("id", -C, 0.0), Term("lower", -C, -1.0, 0.0),
            Term("upper", -C, 1.0, -2.0))


def adjoint_terms(terms: Sequence[Term]) -> tuple:
    return tuple(t.adjoint() for t in terms)


def apply_terms(terms: Sequence[Term], g: RadialProfile) -> RadialProfile:
    r = g.grid.nodes
    out = np.zeros_like(r)
    for t in terms:
        if t.coef == 0:
            continue
        if t.kind == "id":
            part = g.values
        elif t.kind == "lower":
            part = moment_below(g, t.b)
        else:
            part = moment_above(g, t.b)
        out += t.coef * r**t.a * part
    return g.with_values(out)


def L_apply(g: RadialProfile, c: float, C: float) -> RadialProfile:
    return apply_terms(L_terms(c, C), g)


def Lstar_apply(g: RadialProfile, c: float, C: float) -> RadialProfile:
    """Formal adjoint of :func:`L_apply` with respect to ``int_0^inf . dr``."""
    return apply_terms(adjoint_terms(L_terms(c, C)), g)


def radial_inner(f: RadialProfile, g: RadialProfile) -> float:
    """``int f g dr`` over the grid (no tails)."""
    from .radial import _cumulative

    F = f.values * g.values * f.grid.nodes
    return float(_cumulative(f.grid, F)[-1])


# --- singular weight ----------------------------------------------------------

def _weight_moment(alpha: float) -> Callable:
    """Closed-form ``int_lo^hi s^m W2(s) ds`` via ``v = s^(2 alpha)``."""

    def moment(m, lo, hi):
        b = (m + alpha) / (2 * alpha)
        pre = 1.0 / (2 * alpha)
        if lo == 0.0:
            if b <= 0:
                raise TailError(f"int_0 s^{m} W2 diverges at 0")
            V = hi ** (2 * alpha)
            val, _ = integrate.quad(lambda v: 1.0 / (1.0 + v), 0.0, V, weight="alg", wvar=(b - 1, 0.0),
                                    epsabs=0.0, epsrel=1e-13)
            return pre * val
        if hi == np.inf:
            if b >= 1:
                raise TailError(f"int^inf s^{m} W2 diverges")
            Winv = lo ** (-2 * alpha)
            val, _ = integrate.quad(lambda w: 1.0 / (1.0 + w), 0.0, Winv, weight="alg", wvar=(-b, 0.0),
                                    epsabs=0.0, epsrel=1e-13)
            return pre * val
        val, _ = integrate.quad(lambda s: s ** (m - 1 + alpha) / (1 + s ** (2 * alpha)), lo, hi,
                                epsabs=0.0, epsrel=1e-13)
        return val

    return moment


@dataclass(frozen=True, eq=False)
class SingularWeight:
    alpha: float
    profile: RadialProfile
    exact_cumulative: np.ndarray  # arctan(r^alpha) / alpha

    def cumulative(self) -> np.ndarray:
        """``int_0^r W2`` by grid quadrature plus the closed-form head."""
        return moment_below(self.profile, 0.0)

    def quadrature_error(self) -> float:
        """Max relative error of :meth:`cumulative` against ``arctan(r^alpha)/alpha``."""
        return float(np.max(np.abs(self.cumulative() - self.exact_cumulative) / self.exact_cumulative))


def singular_weight(alpha: float, grid: Optional[RadialGrid] = None) -> SingularWeight:
    """``W2(r) = r^(alpha-1) / (1 + r^(2 alpha))`` for ``0 < alpha < 1/2``."""
    if not 0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 1/2), got {alpha}")
    grid = grid or default_radial_grid()

    def w2(r):
        r = np.asarray(r, dtype=float)
        return r ** (alpha - 1) / (1 + r ** (2 * alpha))

    prof = RadialProfile.from_function(grid, w2, name=f"W2[alpha={alpha:g}]",
                                       moment=_weight_moment(alpha))
    return SingularWeight(alpha, prof, np.arctan(grid.nodes**alpha) / alpha)


@dataclass(frozen=True, eq=False)
class DominanceResult:
    alpha: float
    c: float
    C: float
    r: np.ndarray
    W1: np.ndarray
    margin: np.ndarray

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margin))

    @property
    def argmin(self) -> float:
        return float(self.r[int(np.argmin(self.margin))])

    @property
    def passes(self) -> bool:
        return self.min_margin > 0

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "c": self.c, "C": self.C, "passes": self.passes,
                "min_margin": self.min_margin, "argmin_r": self.argmin,
                "r_range": [float(self.r[0]), float(self.r[-1])], "nodes": int(self.r.size)}


def dominance_check(alpha: float, c: float = 1.0, C: float = 1.0,
                    grid: Optional[RadialGrid] = None) -> DominanceResult:
    """Margin ``L*(W2) - c arctan(r^alpha) / (2 alpha r)`` over the grid."""
    if not (c > 0 and C >= 0):
        raise ValueError("need c > 0 and C >= 0")
    sw = singular_weight(alpha, grid)
    r = sw.profile.grid.nodes
    w1 = Lstar_apply(sw.profile, c, C).values
    margin = w1 - c * sw.exact_cumulative / (2 * r)
    return DominanceResult(alpha, c, C, r, w1, margin)


def dominance_scan(alphas: Sequence[float] = ALPHA_SCAN, c: float = 1.0, C: float = 1.0,
                   grid: Optional[RadialGrid] = None) -> list:
    return [dominance_check(a, c, C, grid) for a in alphas]


# --- cone profile and the sign experiment -------------------------------------

def _fold(theta, center: float) -> np.ndarray:
    """Offset of ``theta`` from ``center`` reduced mod pi to ``[-pi/2, pi/2)``."""
    return np.mod(np.asarray(theta, dtype=float) - center + np.pi / 2, np.pi) - np.pi / 2


def _poly_bump(power: int, scale: float = 1.0):
    """``scale ((t - 3pi/8)(5pi/8 - t))^power`` on the cone interval, zero outside.

    Also returns the polynomial in the offset ``t - pi/2``.
    """
    poly = scale * np.polynomial.Polynomial([HALF_WIDTH**2, 0.0, -1.0]) ** power

    def f(theta):
        t = np.asarray(theta, dtype=float)
        inside = (t > CONE[0]) & (t < CONE[1])
        return np.where(inside, scale * ((t - CONE[0]) * (CONE[1] - t)) ** power, 0.0)

    return f, poly


@dataclass(frozen=True, eq=False)
class ConeAngularProfile:
    """Angular data ``Gamma`` and test weight ``W`` on ``[3pi/8, 5pi/8]``.

    Both are given on the canonical interval about ``pi/2`` and moved to the
    cone about ``center``; the extension is even and pi-periodic, which
    needs ``Gamma`` and ``W`` symmetric about the interval midpoint.
    """

    gamma: Callable
    weight: Callable
    center: float = np.pi / 2
    smoothness: int = 7
    name: str = "poly_bump"
    weight_poly: Optional[np.polynomial.Polynomial] = field(default=None, repr=False)

    def __post_init__(self):
        th = np.linspace(CONE[0], CONE[1], 2001)
        g = np.asarray(self.gamma(th), dtype=float)
        if np.any(g < 0):
            raise ValueError("Gamma must be nonnegative")
        scale = max(float(np.max(g)), 1e-300)
        if abs(g[0]) > 1e-12 * scale or abs(g[-1]) > 1e-12 * scale:
            raise ValueError("Gamma must vanish at the cone edges")
        if np.max(np.abs(g - g[::-1])) > 1e-12 * scale:
            raise ValueError("Gamma must be symmetric about the cone axis")
        w = np.asarray(self.weight(th), dtype=float)
        if np.max(np.abs(w - w[::-1])) > 1e-12 * max(float(np.max(np.abs(w))), 1e-300):
            raise ValueError("W must be symmetric about the cone axis")

    @classmethod
    def default(cls, center: float = np.pi / 2, gamma_power: int = 8, weight_power: int = 5):
        # int (h^2 - p^2)^q dp over [-h, h] = h^(2q+1) B(1/2, q+1)
        z = HALF_WIDTH ** (2 * weight_power + 1) * special.beta(0.5, weight_power + 1)
        w, wpoly = _poly_bump(weight_power, 1.0 / z)
        gam, _ = _poly_bump(gamma_power, HALF_WIDTH ** (-2 * gamma_power))
        return cls(gamma=gam, weight=w, center=center, smoothness=gamma_power - 1,
                   name=f"poly_bump[{gamma_power},{weight_power}]", weight_poly=wpoly)

    def gamma_on(self, theta) -> np.ndarray:
        phi = _fold(theta, self.center)
        return np.where(np.abs(phi) < HALF_WIDTH, self.gamma(np.pi / 2 + phi), 0.0)

    def weight_on(self, theta) -> np.ndarray:
        phi = _fold(theta, self.center)
        return np.where(np.abs(phi) < HALF_WIDTH, self.weight(np.pi / 2 + phi), 0.0)

    def in_cone(self, theta) -> np.ndarray:
        return np.abs(_fold(theta, self.center)) < HALF_WIDTH

    def weight_integral(self) -> float:
        val, _ = integrate.quad(self.weight, CONE[0], CONE[1], epsabs=0.0, epsrel=1e-13, limit=200)
        return val

    def boundary_derivatives(self, order: int = 4, npts: int = 41) -> np.ndarray:
        """Derivatives ``0..order`` of ``W`` at the lower edge.

        Exact for polynomial weights; otherwise a one-sided Chebyshev fit whose
        higher derivatives are only good to roughly ``1e-3`` relative.
        """
        if self.weight_poly is not None:
            p = self.weight_poly  # in the offset theta - pi/2
            return np.array([p.deriv(j)(-HALF_WIDTH) if j else p(-HALF_WIDTH) for j in range(order + 1)])
        x = np.linspace(0.0, HALF_WIDTH, npts)
        p = np.polynomial.Chebyshev.fit(x, self.weight(CONE[0] + x), deg=min(12, npts - 1),
                                        domain=[0.0, HALF_WIDTH])
        return np.array([p.deriv(j)(0.0) if j else p(0.0) for j in range(order + 1)])

    def describe(self) -> dict:
        return {"name": self.name, "center": self.center, "half_width": HALF_WIDTH,
                "smoothness": self.smoothness}


@dataclass(frozen=True)
class HaReport:
    alpha: float
    min_value: float
    max_weight: float
    annulus: tuple
    l1: float
    l2: float
    n: int
    half_width: float
    spacing: float
    truncation: tuple
    center: float
    epsilon: float = 1e-3
    note: str = ("nonnegativity is certified only up to discretization tolerance on a truncated "
                 "annulus; the continuum statement is not tested")

    @property
    def relative_min(self) -> float:
        return self.min_value / self.max_weight if self.max_weight > 0 else 0.0

    @property
    def nonnegative(self) -> bool:
        return self.min_value >= -self.epsilon * self.max_weight

    @property
    def l2_over_l1(self) -> float:
        return self.l2 / self.l1 if self.l1 > 0 else 0.0

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "center": self.center, "min_R11W": self.min_value,
                "max_W": self.max_weight, "relative_min": self.relative_min,
                "epsilon": self.epsilon, "nonnegative": self.nonnegative,
                "annulus": list(self.annulus), "truncation": list(self.truncation),
                "L1": self.l1, "L2": self.l2, "L2_over_L1": self.l2_over_l1,
                "N": self.n, "half_width": self.half_width, "spacing": self.spacing,
                "note": self.note}


def ha_experiment(alpha: float, cone: Optional[ConeAngularProfile] = None, grid: Optional[Grid] = None,
                  r_min: float = 1e-3, r_max: float = 10.0, annulus: Optional[tuple] = None,
                  epsilon: float = 1e-3, amplitude: float = 1.0) -> HaReport:
    """Sign of ``R1^2 W~`` for ``W~ = W2(r) Gamma(theta)`` truncated to ``[r_min, r_max]``.

    The minimum is taken over the support of ``W~`` inside the annulus
    ``[max(10 r_min, 8h), r_max / 10]`` (``h`` the grid spacing) unless
    ``annulus`` is given.  ``L1``/``L2`` are the masses of the sampled
    ``W~``.
    """
    cone = cone or ConeAngularProfile.default()
    grid = grid or Grid.box(2048, 12.8, ndim=2)
    if grid.ndim != 2:
        raise ValueError("the sign experiment needs a 2-D grid")
    if not 0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 1/2), got {alpha}")
    if r_max > grid.length / 2:
        raise ValueError("truncation radius exceeds the box")
    h = grid.spacing
    if annulus is None:
        annulus = (max(10 * r_min, 8 * h), r_max / 10)
    if annulus[0] >= annulus[1]:
        raise ValueError(f"grid too coarse: annulus {annulus} is empty at spacing {h:.3g}")
    X, Y = grid.mesh()
    r = np.hypot(X, Y)
    th = np.arctan2(Y, X)
    with np.errstate(divide="ignore"):
        w2 = np.where((r >= r_min) & (r <= r_max), r ** (alpha - 1) / (1 + r ** (2 * alpha)), 0.0)
    W = amplitude * w2 * cone.gamma_on(th)
    R = apply_multiplier(SpectralField(grid, W), riesz_product(1, 1)).values
    probe = (r >= annulus[0]) & (r <= annulus[1]) & (W > 0)
    vmin = float(R[probe].min()) if probe.any() else 0.0
    cell = grid.cell_volume
    return HaReport(alpha=alpha, min_value=vmin, max_weight=float(W.max()), annulus=tuple(annulus),
                    l1=float(np.sum(np.abs(W)) * cell), l2=float(np.sqrt(np.sum(W * W) * cell)),
                    n=grid.n, half_width=float(grid.length / 2), spacing=h,
                    truncation=(r_min, r_max), center=cone.center, epsilon=epsilon)


# --- self-amplification monitor -------------------------------------------------

@dataclass(frozen=True)
class KeyBoundReport:
    times: np.ndarray
    G: np.ndarray
    amplification: np.ndarray  # G(t) exp(-int_0^t G)
    radii: np.ndarray
    degenerate: bool
    alpha: float
    c: float
    C: float
    termination: str = ""

    @property
    def increasing(self) -> bool:
        return bool(not self.degenerate and self.G.size > 1 and np.all(np.diff(self.G) > 0))

    @property
    def non_increasing(self) -> bool:
        if self.G.size < 2:
            return False
        return bool(np.all(np.diff(self.G) <= 1e-12 * max(1.0, float(np.max(np.abs(self.G))))))

    @property
    def bounded_below(self) -> bool:
        return bool(not self.degenerate and np.min(self.amplification) > 0)

    def to_dict(self) -> dict:
        return {"samples": int(self.times.size), "degenerate": self.degenerate,
                "G_increasing": self.increasing, "G_non_increasing": self.non_increasing,
                "amplification_bounded_below": self.bounded_below,
                "min_amplification": float(np.min(self.amplification)) if self.times.size else None,
                "radii": [float(self.radii[0]), float(self.radii[-1])], "alpha": self.alpha,
                "c": self.c, "C": self.C, "termination": self.termination,
                "t_final": float(self.times[-1]) if self.times.size else 0.0}


def key_bound_monitor(initial_data: Callable, cone: ConeAngularProfile, grid: Grid, dt: float,
                      t_end: float, operator: Optional[MultiplierOp] = None, alpha: float = 0.1,
                      c: float = 1.0, C: float = 1.0, n_radii: int = 96, n_theta: int = 256,
                      sample_every: int = 1) -> KeyBoundReport:
    """Track ``G(t) = int |w_2(t, r)| W1(r) dr`` along a Cartesian run.

    ``initial_data(x, y)`` must vanish outside the cone.  ``W1`` is
    ``L*(W2)`` from :func:`dominance_check`, interpolated in ``log r``.
    Radii run from four grid spacings to 0.45 of the box width.
    """
    from .simulator import Scenario, run

    if grid.ndim != 2:
        raise ValueError("the monitor needs a 2-D grid")
    operator = operator or riesz_product(1, 1)
    X, Y = grid.mesh()
    w0 = np.asarray(initial_data(X, Y), dtype=float) * np.ones(grid.shape)
    outside = ~cone.in_cone(np.arctan2(Y, X)) | (np.hypot(X, Y) == 0)
    scale = float(np.max(np.abs(w0)))
    if np.any(np.abs(w0[outside]) > 1e-12 * max(scale, 1e-300)):
        raise ValueError("initial data is not supported in the cone")

    h = grid.spacing
    radii = np.exp(np.linspace(np.log(4 * h), np.log(0.45 * grid.length), n_radii))
    rgrid = RadialGrid.log_spaced(radii[0], radii[-1], per_decade=max(8, int(n_radii / np.log10(radii[-1] / radii[0]))))
    radii = rgrid.nodes
    dom = dominance_check(alpha, c, C)
    w1 = np.interp(np.log(radii), np.log(dom.r), dom.W1)
    th = theta_samples(n_theta)
    px = (radii[:, None] * np.cos(th)[None, :] - grid.origin) / h
    py = (radii[:, None] * np.sin(th)[None, :] - grid.origin) / h
    times, G = [], []

    def sample(t, state):
        vals = map_coordinates(state.values, [px.ravel(), py.ravel()], order=3, mode="grid-wrap")
        vals = vals.reshape(px.shape)
        modes = angular_modes(vals, rgrid, k_max=1, tol=1e-6)
        f = np.abs(modes.modes[1])
        times.append(t)
        G.append(radial_inner(RadialProfile(rgrid, f), RadialProfile(rgrid, w1)))

    sc = Scenario(grid=grid, operator=operator, initial_data=SpectralField(grid, w0), dt=dt,
                  t_end=t_end, integrator="exponential_euler", diagnostics=("Linf",),
                  sample_every=sample_every)
    traj = run(sc, on_sample=sample)
    t = np.array(times)
    g = np.array(G)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * np.diff(t))]) if t.size else t
    return KeyBoundReport(times=t, G=g, amplification=g * np.exp(-cum), radii=radii,
                          degenerate=bool(scale == 0.0 or not np.any(g)), alpha=alpha, c=c, C=C,
                          termination=traj.termination)
