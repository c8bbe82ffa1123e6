"""Weyl coefficients and high-energy diagnostics of 2x2 canonical systems."""

from .asymptotics import A_L, asymptotics_row, d_of, d_values, preimage_measure, rescale, t_hat
from .errors import CanonSysError, ModelError, NoConvergence
from .hamiltonian import (
    CATALOG,
    DiagonalPower,
    GammaForm,
    Hamiltonian,
    PiecewiseConstant,
    PowerLog,
    SingularPower,
    TwoPhaseRotation,
    catalog,
    from_dict,
    load_model,
    reparameterize,
    trace_reparameterize,
)
from .weyl import NevanlinnaSample, constant_q, propagate, weyl_coefficient, weyl_disc

__all__ = [
    "A_L", "asymptotics_row", "d_of", "d_values", "preimage_measure", "rescale", "t_hat",
    "CanonSysError", "ModelError", "NoConvergence",
    "CATALOG", "DiagonalPower", "GammaForm", "Hamiltonian", "PiecewiseConstant", "PowerLog",
    "SingularPower", "TwoPhaseRotation", "catalog", "from_dict", "load_model",
    "reparameterize", "trace_reparameterize",
    "NevanlinnaSample", "constant_q", "propagate", "weyl_coefficient", "weyl_disc",
]
