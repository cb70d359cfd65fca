"""Log-spaced radial grids and high-order quadrature for profiles on (0, inf).

Integrals ``int g(s) s^m ds`` are done in ``u = log s`` where power laws
become exponentials and the singular weights of the polar analysis are
smooth.  A grid is split into segments at ``knots``; a knot listed in
``jumps`` appears twice so profiles can carry left and right limits.
Interpolating stencils never cross a segment boundary.

Beyond the grid, ``int_0^{r_min}`` and ``int_{r_max}^inf`` come from the
profile's closed-form ``moment`` when it has one, then from its exact
function, otherwise from a power-law fit to the two end nodes; a fit that
does not decay raises :class:`TailError`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

__all__ = ["RadialGrid", "RadialProfile", "TailError", "moment_below", "moment_above",
           "integrate_profile", "STENCIL"]

#: Points per interpolating stencil (order of the cumulative rule).
STENCIL = 8


class TailError(ValueError):
    """Improper integral does not converge according to the end-node fit."""


@dataclass(frozen=True, eq=False)
class RadialGrid:
    nodes: np.ndarray
    segments: tuple  # (start, stop) index pairs, inclusive of stop
    jumps: tuple = ()

    @classmethod
    def log_spaced(cls, r_min: float, r_max: float, per_decade: int = 64,
                   knots: Sequence[float] = (), jumps: Sequence[float] = ()) -> "RadialGrid":
        if not 0 < r_min < r_max:
            raise ValueError("need 0 < r_min < r_max")
        cuts = sorted({float(r_min), float(r_max), *map(float, knots), *map(float, jumps)})
        if cuts[0] < r_min or cuts[-1] > r_max:
            raise ValueError("knots must lie inside [r_min, r_max]")
        jump_set = {float(j) for j in jumps}
        pieces, segs, start = [], [], 0
        for a, b in zip(cuts[:-1], cuts[1:]):
            m = max(2, int(np.ceil(per_decade * np.log10(b / a) - 1e-9)))
            seg = np.exp(np.linspace(np.log(a), np.log(b), m + 1))
            seg[0], seg[-1] = a, b
            if pieces and a not in jump_set:
                seg = seg[1:]
                start -= 1
            pieces.append(seg)
            stop = start + (m + 1) - 1
            segs.append((start, stop))
            start = stop + 1
        nodes = np.concatenate(pieces)
        nodes.flags.writeable = False
        return cls(nodes=nodes, segments=tuple(segs), jumps=tuple(sorted(jump_set)))

    @property
    def r_min(self) -> float:
        return float(self.nodes[0])

    @property
    def r_max(self) -> float:
        return float(self.nodes[-1])

    def __len__(self):
        return self.nodes.size

    def index_of(self, r: float, side: str = "left") -> int:
        """Index of the node equal to ``r`` (relative 1e-12); ``side`` picks a jump copy."""
        hits = np.flatnonzero(np.isclose(self.nodes, r, rtol=1e-12, atol=0))
        if hits.size == 0:
            raise ValueError(f"r = {r} is not a grid node; add it as a knot")
        return int(hits[0] if side == "left" else hits[-1])

    def log_ratios(self) -> list:
        """Spacing ratio per segment (constant within a segment)."""
        out = []
        for a, b in self.segments:
            seg = self.nodes[a:b + 1]
            out.append(seg[1:] / seg[:-1])
        return out

    def sample(self, f: Callable) -> np.ndarray:
        """Values of ``f`` on the nodes, one-sided limits at jump copies."""
        r = np.array(self.nodes, dtype=float)
        for j in self.jumps:
            i0 = self.index_of(j, "left")
            r[i0] = np.nextafter(j, 0.0)
            r[i0 + 1] = np.nextafter(j, np.inf)
        return np.asarray(f(r), dtype=float) * np.ones_like(r)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Function of ``r`` on a radial grid.

    ``exact`` (optional) is the function itself and ``moment(m, lo, hi)``
    (optional) returns ``int_lo^hi g(s) s^m ds`` in closed form; either is
    used for the parts of improper integrals beyond the grid.
    """

    grid: RadialGrid
    values: np.ndarray
    exact: Optional[Callable] = field(default=None, repr=False)
    name: str = ""
    moment: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.nodes.shape:
            raise ValueError("profile does not match its grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("profile values must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: RadialGrid, f: Callable, exact: bool = True, name: str = "",
                      moment: Optional[Callable] = None):
        return cls(grid, grid.sample(f), f if exact else None, name, moment)

    def with_values(self, values, name: str = "") -> "RadialProfile":
        """Plain profile on the same grid (no exact function)."""
        return RadialProfile(self.grid, values, name=name)

    def __call__(self, r: float, side: str = "left") -> float:
        return float(self.values[self.grid.index_of(r, side)])

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes


@lru_cache(maxsize=None)
def _interval_weights(npts: int) -> np.ndarray:
    """Row ``p``: weights integrating the ``npts``-point interpolant over [p, p+1]."""
    x = np.arange(npts, dtype=float)
    V = np.vander(x, npts, increasing=True)
    rows = []
    for p in range(npts - 1):
        mono = np.array([((p + 1) ** (k + 1) - p ** (k + 1)) / (k + 1) for k in range(npts)])
        rows.append(np.linalg.solve(V.T, mono))
    return np.array(rows)


def _cumulative_segment(F: np.ndarray, du: float) -> np.ndarray:
    n = F.size
    out = np.zeros(n)
    if n < 2:
        return out
    k = min(STENCIL, n)
    W = _interval_weights(k)
    pieces = np.empty(n - 1)
    for i in range(n - 1):
        # interval [i, i+1] sits in the middle of the stencil away from the ends
        s = min(max(i - (k // 2 - 1), 0), n - k)
        pieces[i] = W[i - s] @ F[s:s + k]
    out[1:] = np.cumsum(pieces) * du
    return out


def _cumulative(grid: RadialGrid, F: np.ndarray) -> np.ndarray:
    """``int_{u_0}^{u_i} F du`` at every node, continuous across segments."""
    u = np.log(grid.nodes)
    out = np.zeros(F.size)
    base = 0.0
    for a, b in grid.segments:
        seg = _cumulative_segment(F[a:b + 1], (u[b] - u[a]) / (b - a))
        out[a:b + 1] = base + seg
        base = out[b]
    return out


def _power_tail(F0: float, F1: float, du: float, side: str, scale: float = 0.0) -> float:
    """Integral of ``F0 exp(p (u - u0))`` beyond the last node (``side`` = 'above'|'below').

    End values below ``1e-14 scale`` count as compact support.
    """
    if max(abs(F0), abs(F1)) <= 1e-14 * scale or (F0 == 0.0 and F1 == 0.0):
        return 0.0
    if F0 == 0.0 or F1 == 0.0 or np.sign(F0) != np.sign(F1):
        raise TailError("cannot extrapolate a sign-changing or vanishing end profile")
    p = np.log(F1 / F0) / du
    if side == "above":
        # F1 is the outermost node, F0 its neighbour; need decay (p < 0)
        if p >= -1e-9:
            raise TailError(f"integrand grows beyond r_max (local exponent {p:.3g})")
        return -F1 / p
    if p <= 1e-9:
        raise TailError(f"integrand does not decay towards 0 (local exponent {p:.3g})")
    return F0 / p


def _exact_moment(f: Callable, m: float, lo: float, hi: float) -> float:
    def g(u):
        with np.errstate(over="ignore"):
            s = np.exp(u)
        if s == 0.0 or not np.isfinite(s):
            return 0.0
        with np.errstate(over="ignore", invalid="ignore"):
            v = float(f(np.array([s]))[0]) * s ** (m + 1)
        return v if np.isfinite(v) else 0.0

    a = -np.inf if lo == 0 else np.log(lo)
    b = np.inf if hi == np.inf else np.log(hi)
    val, _ = integrate.quad(g, a, b, epsabs=1e-300, epsrel=1e-12, limit=400)
    return val


def _integrand(profile: RadialProfile, m: float) -> np.ndarray:
    r = profile.grid.nodes
    return profile.values * r ** (m + 1)


def _du(grid: RadialGrid, end: str) -> float:
    a, b = grid.segments[0] if end == "below" else grid.segments[-1]
    return float(np.log(grid.nodes[b] / grid.nodes[a]) / (b - a))


def moment_below(profile: RadialProfile, m: float = 0.0) -> np.ndarray:
    """``A(r) = int_0^r g(s) s^m ds`` at every node."""
    F = _integrand(profile, m)
    if profile.moment is not None:
        head = profile.moment(m, 0.0, profile.grid.r_min)
    elif profile.exact is not None:
        head = _exact_moment(profile.exact, m, 0.0, profile.grid.r_min)
    else:
        head = _power_tail(F[0], F[1], _du(profile.grid, "below"), "below", np.max(np.abs(F)))
    return head + _cumulative(profile.grid, F)


def moment_above(profile: RadialProfile, m: float = 0.0) -> np.ndarray:
    """``B(r) = int_r^inf g(s) s^m ds`` at every node."""
    F = _integrand(profile, m)
    if profile.moment is not None:
        tail = profile.moment(m, profile.grid.r_max, np.inf)
    elif profile.exact is not None:
        tail = _exact_moment(profile.exact, m, profile.grid.r_max, np.inf)
    else:
        tail = _power_tail(F[-2], F[-1], _du(profile.grid, "above"), "above", np.max(np.abs(F)))
    cum = _cumulative(profile.grid, F)
    return tail + (cum[-1] - cum)


def integrate_profile(profile: RadialProfile, m: float = 0.0) -> float:
    """``int_0^inf g(s) s^m ds``."""
    return float(moment_below(profile, m)[-1] + moment_above(profile, m)[-1])
