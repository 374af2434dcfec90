"""Carleman and Carleman-Fourier linearization of periodic and quasi-periodic ODEs."""

__version__ = "0.1.0"

from .analysis import (
    BoundParams,
    ErrorSurface,
    clip_metric,
    error_primary,
    extract_phase,
    n0_search,
    proof_chain_check,
    sweep_error_surface,
    t0_bound,
    theorem_bound,
)
from .carleman_classical import ClassicalSystem, build_classical, build_classical_kuramoto
from .carleman_fourier import LiftedSystem, enumerate_multiindices, lift_1d, lift_multi
from .fourier_field import (
    FieldError,
    FourierField1D,
    QuasiPeriodicField,
    extend_field,
    fit_envelope,
    maclaurin_from_fourier,
)
from .integrate import TimeGrid, Trajectory, integrate_classical, integrate_linear, integrate_reference
from .kuramoto import KuramotoModel, NormalizedKuramoto, equilibria, full_rhs, normalize, reduced_field

__all__ = [
    "BoundParams",
    "ClassicalSystem",
    "ErrorSurface",
    "FieldError",
    "FourierField1D",
    "KuramotoModel",
    "LiftedSystem",
    "NormalizedKuramoto",
    "QuasiPeriodicField",
    "TimeGrid",
    "Trajectory",
    "build_classical",
    "build_classical_kuramoto",
    "clip_metric",
    "enumerate_multiindices",
    "equilibria",
    "error_primary",
    "extend_field",
    "extract_phase",
    "fit_envelope",
    "full_rhs",
    "integrate_classical",
    "integrate_linear",
    "integrate_reference",
    "lift_1d",
    "lift_multi",
    "maclaurin_from_fourier",
    "n0_search",
    "normalize",
    "proof_chain_check",
    "reduced_field",
    "sweep_error_surface",
    "t0_bound",
    "theorem_bound",
]
