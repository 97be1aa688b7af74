"""Extended-precision q-moment toolkit.

Jackson integration on the geometric grid, the Hahn-Exton q-Bessel
transform, moments of the weights ``e(-x^(2p), q^(2p))``, finite-horizon
determinacy criteria and orthonormal polynomials built from moments.
"""
from .errors import (
    DomainError,
    InsufficientDataError,
    PoleError,
    PositivityError,
    PrecisionOverflowError,
    QMomentError,
    TailDivergenceError,
    TailWarning,
    ValidationError,
)
from .qcore import GridFunction, QContext, jackson_integral, q_exp, qpochhammer_finite, qpochhammer_inf
from .moments import MomentSequence, WeightSpec, closed_form_moments, direct_moments, moment_closed_form
from .qbessel import QBesselTransform, qbessel_j, qfourier
from .criteria import carleman_diag, perron_diag, q_criterion_diag, riesz_diag
from .orthopoly import OrthoBasis, recurrence_from_moments

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "InsufficientDataError",
    "PoleError",
    "PositivityError",
    "PrecisionOverflowError",
    "QMomentError",
    "TailDivergenceError",
    "TailWarning",
    "ValidationError",
    "GridFunction",
    "QContext",
    "jackson_integral",
    "q_exp",
    "qpochhammer_finite",
    "qpochhammer_inf",
    "MomentSequence",
    "WeightSpec",
    "closed_form_moments",
    "direct_moments",
    "moment_closed_form",
    "QBesselTransform",
    "qbessel_j",
    "qfourier",
    "carleman_diag",
    "perron_diag",
    "q_criterion_diag",
    "riesz_diag",
    "OrthoBasis",
    "recurrence_from_moments",
]
