"""Jensen-inequality blow-up certificates for ``d_t w = w R(w)``.

Given data ``w0`` and a weight pair with unit-mass ``W2`` and
``W1 = R*(W2)``, the functional ``M(t) = int w W1`` obeys
``M(t) >= c* / (1 - c* t)`` with ``c* = exp(J)``,
``J = int log(w0 W1 / W2) W2``.  So smooth solutions cannot outlive
``T_bound = 1 / c*``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .spectral import SpectralField
from .weights import WeightPair

__all__ = [
    "HypothesisReport",
    "BlowupCertificate",
    "CertificateRefused",
    "BoundMonitor",
    "check_hypothesis",
    "issue_certificate",
    "monitor_bound",
    "LOG_FLOOR",
]

#: Floor for ``log(w0 W1 / W2)``: the log of the smallest normal double.
LOG_FLOOR = math.log(np.finfo(float).tiny)
SIGN_TOL = 1e-12
CONVERGENCE_TOL = 1e-6
CLIP_STABILITY_TOL = 1e-4


class CertificateRefused(ValueError):
    """Raised by :func:`issue_certificate`; ``condition`` names the failed check."""

    def __init__(self, condition: str, message: str):
        super().__init__(f"{condition}: {message}")
        self.condition = condition


@dataclass(frozen=True)
class HypothesisReport:
    sign_ok: bool
    pairing: float
    jensen_integral: float
    integrable: bool
    notes: tuple = ()
    min_product: float = 0.0
    product_scale: float = 0.0
    clipped_nodes: tuple = ()
    midpoint_levels: tuple = ()
    richardson: tuple = ()
    convergence_defect: float = float("nan")
    normalization: float = float("nan")
    w1_provenance: str = ""
    weight_name: str = ""
    grid: dict = field(default_factory=dict)

    @property
    def passes(self) -> bool:
        return self.failed_condition() is None

    def failed_condition(self) -> Optional[str]:
        if not self.sign_ok:
            return "sign"
        if not (0.0 < self.pairing < math.inf):
            return "pairing"
        if not (self.integrable and math.isfinite(self.jensen_integral)):
            return "integrability"
        return None

    def to_dict(self) -> dict:
        return {
            "sign_ok": self.sign_ok, "pairing": self.pairing,
            "jensen_integral": self.jensen_integral, "integrable": self.integrable,
            "min_product": self.min_product, "product_scale": self.product_scale,
            "sign_tolerance": SIGN_TOL, "clipped_nodes": list(self.clipped_nodes),
            "log_floor": LOG_FLOOR, "midpoint_levels": list(self.midpoint_levels),
            "richardson": list(self.richardson), "convergence_defect": self.convergence_defect,
            "convergence_tolerance": CONVERGENCE_TOL, "clip_stability_tolerance": CLIP_STABILITY_TOL,
            "normalization": self.normalization, "w1_provenance": self.w1_provenance,
            "weight_pair": self.weight_name, "grid": self.grid, "notes": list(self.notes),
        }


@dataclass(frozen=True)
class BlowupCertificate:
    c_star: float
    T_bound: float
    report: HypothesisReport

    @property
    def jensen_integral(self) -> float:
        return self.report.jensen_integral

    def lower_bound(self, t):
        """``c* / (1 - c* t)``, the guaranteed floor for ``M(t)``."""
        t = np.asarray(t, dtype=float)
        return self.c_star / (1.0 - self.c_star * t)

    def to_dict(self) -> dict:
        return {"c_star": self.c_star, "T_bound": self.T_bound,
                "w1_provenance": self.report.w1_provenance, "hypothesis": self.report.to_dict()}


def _midpoint_J(omega0: SpectralField, w1: SpectralField, w2: SpectralField, refine: int):
    """Midpoint-rule J on a grid refined by ``refine``, W2 renormalized there."""
    grid = omega0.grid
    cell = (grid.length / (grid.n * refine)) ** grid.ndim
    om = omega0.evaluate_on(refine, 0.5)
    a = w1.evaluate_on(refine, 0.5)
    b = w2.evaluate_on(refine, 0.5)
    mass = float(np.sum(b) * cell)
    a, b = a / mass, b / mass
    p = om * a
    live = b > 0
    # sum of logs: the product may underflow where each factor is representable
    pos = live & (np.sign(om) * np.sign(a) > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        logr = np.where(pos, np.log(np.abs(np.where(pos, om, 1.0))) + np.log(np.abs(np.where(pos, a, 1.0)))
                        - np.log(np.where(live, b, 1.0)), -np.inf)
    clip = live & ~(logr >= LOG_FLOOR)
    logr = np.where(clip, LOG_FLOOR, logr)
    integrand = np.where(live, logr * b, 0.0)
    J = float(np.sum(integrand) * cell)
    clip_part = float(np.sum(integrand[clip]) * cell)
    return J, int(np.count_nonzero(clip)), clip_part, float(np.min(p)), float(np.max(np.abs(p)))


def check_hypothesis(omega0: SpectralField, pair: WeightPair, levels: int = 3) -> HypothesisReport:
    """Evaluate the three conditions of the criterion for ``(R, W2, w0)``.

    J is computed with the midpoint rule on cell centres at ``levels``
    successive refinements (off-grid values from the data's source function
    or its trigonometric interpolant), then Richardson-extrapolated against
    the ``h`` and ``h^3`` error terms that isolated log zeros of ``w0 W1``
    produce.  Log-ratios below :data:`LOG_FLOOR` are clipped and counted.
    """
    if levels < 3:
        raise ValueError("need at least three refinement levels")
    grid = omega0.grid
    w2f, w1f = pair.fields(grid)
    notes = []

    w2n, w1n = w2f.values, w1f.values
    if not (np.all(np.isfinite(w1n)) and np.all(np.isfinite(omega0.values))):
        raise ValueError("non-finite quadrature inputs")
    node_mass = float(np.sum(w2n) * grid.cell_volume)
    if not node_mass > 0:
        raise ValueError("W2 has no mass on the grid")
    prod_nodes = omega0.values * w1n / node_mass
    pairing = float(np.sum(prod_nodes) * grid.cell_volume)

    runs = [_midpoint_J(omega0, w1f, w2f, 2**lv) for lv in range(levels)]
    Js = [r[0] for r in runs]
    clipped = tuple(r[1] for r in runs)
    min_p = min([float(np.min(prod_nodes))] + [r[3] for r in runs])
    scale = max([float(np.max(np.abs(prod_nodes)))] + [r[4] for r in runs])
    sign_ok = bool(min_p >= -SIGN_TOL * scale)
    if scale == 0:
        notes.append("w0 W1 vanishes identically")

    # eliminate the O(h) then O(h^3) terms
    r1 = [2 * Js[i + 1] - Js[i] for i in range(levels - 1)]
    r2 = [(8 * r1[i + 1] - r1[i]) / 7 for i in range(levels - 2)]
    J = r2[-1]
    defect = abs(r2[-1] - r1[-1])
    if len(r2) > 1:
        defect = max(defect, abs(r2[-1] - r2[-2]))
    integrable = bool(np.isfinite(J) and defect <= CONVERGENCE_TOL * max(1.0, abs(J)))
    if any(clipped):
        notes.append(f"log-ratio clipped at {LOG_FLOOR:.1f} on {list(clipped)} nodes per level")
        drift = abs(runs[-1][2] - runs[-2][2])
        if drift > CLIP_STABILITY_TOL:
            integrable = False
            notes.append(f"clipped contribution moves by {drift:.3e} between levels")
    if not integrable and np.isfinite(J):
        notes.append(f"J not converged: defect {defect:.3e}")
    if not sign_ok and scale > 0:
        notes.append(f"w0 W1 reaches {min_p:.3e} (scale {scale:.3e})")

    return HypothesisReport(
        sign_ok=sign_ok, pairing=pairing, jensen_integral=float(J), integrable=integrable,
        notes=tuple(notes), min_product=min_p, product_scale=scale, clipped_nodes=clipped,
        midpoint_levels=tuple(Js), richardson=tuple(r1 + r2), convergence_defect=float(defect),
        normalization=node_mass, w1_provenance=pair.provenance,
        weight_name=pair.name or pair.operator_name, grid=grid.describe())


def issue_certificate(report: HypothesisReport) -> BlowupCertificate:
    """``c* = exp(J)`` and ``T_bound = 1/c*``; refuses when a condition fails."""
    cond = report.failed_condition()
    if cond == "sign":
        raise CertificateRefused("sign", f"w0 W1 takes negative values (min {report.min_product:.3e})")
    if cond == "pairing":
        raise CertificateRefused("pairing", f"int w0 W1 = {report.pairing!r} is not in (0, inf)")
    if cond == "integrability":
        raise CertificateRefused("integrability", "; ".join(report.notes) or "J is not finite")
    c_star = math.exp(report.jensen_integral)
    if c_star == 0.0:
        raise CertificateRefused("integrability", "J underflows exp")
    return BlowupCertificate(c_star=c_star, T_bound=1.0 / c_star, report=report)


@dataclass(frozen=True)
class BoundMonitor:
    times: np.ndarray
    slack: np.ndarray
    tolerance: np.ndarray
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"ok": self.ok, "samples": int(self.times.size),
                "min_slack": float(np.min(self.slack)) if self.slack.size else None,
                "min_relative_slack": float(np.min(self.slack / np.maximum(self.tolerance, 1e-300)))
                if self.slack.size else None,
                "violations": [float(t) for t in self.times[list(self.violations)]]}


def monitor_bound(times: Sequence[float], M: Sequence[float], c_star: float,
                  rtol: float = 1e-3) -> BoundMonitor:
    """Slack ``M(t)(1 - c* t) - c*`` per sample; flags slack below ``-rtol M(t)``."""
    t = np.asarray(times, dtype=float)
    m = np.asarray(M, dtype=float)
    if t.shape != m.shape:
        raise ValueError("times and M differ in length")
    if np.any(t >= 1.0 / c_star):
        raise ValueError(f"timestamps reach T_bound = {1.0 / c_star:.6g}")
    slack = m * (1.0 - c_star * t) - c_star
    tol = rtol * np.abs(m)
    bad = tuple(int(i) for i in np.flatnonzero(slack < -tol))
    return BoundMonitor(times=t, slack=slack, tolerance=tol, violations=bad)
