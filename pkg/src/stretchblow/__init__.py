"""Blow-up certificates, simulations and polar analysis for ``d_t w = w R(w)``.

``R`` is a Fourier multiplier (derivative, Hilbert or Riesz transforms and
their products).  Submodules:

* ``spectral``: grids, fields and multiplier operators
* ``weights``: test-weight pairs ``(W2, W1 = R* W2)``
* ``certificate``: Jensen-integral blow-up certificates
* ``simulator``: time stepping, blow-up detection, exact oracles
* ``radial`` and ``polar``: log-grid quadrature and cone analysis
* ``config`` and ``cli``: scenario files and the command line
"""
__version__ = "0.1.0"

from .spectral import (Grid, MultiplierOp, SpectralField, adjoint, apply_multiplier, compose,
                       inner_product, l2_norm, operator_by_name)
from .weights import WeightPair, catalog_pair, numeric_weight
from .certificate import (BlowupCertificate, CertificateRefused, HypothesisReport, check_hypothesis,
                          issue_certificate, monitor_bound)
from .simulator import BlowupThresholds, Scenario, StepFailure, Trajectory, run

__all__ = [
    "__version__", "Grid", "MultiplierOp", "SpectralField", "adjoint", "apply_multiplier", "compose",
    "inner_product", "l2_norm", "operator_by_name", "WeightPair", "catalog_pair", "numeric_weight",
    "BlowupCertificate", "CertificateRefused", "HypothesisReport", "check_hypothesis",
    "issue_certificate", "monitor_bound", "BlowupThresholds", "Scenario", "StepFailure", "Trajectory",
    "run",
]
