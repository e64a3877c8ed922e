"""Exact and numerical toolkit for Carnot groups, homogeneous gauges, Hardy
inequalities and general Hörmander families."""

__version__ = "0.1.0"

from .algebra import (
    StratifiedAlgebra,
    StructuralError,
    abelian,
    bracket,
    engel,
    heisenberg,
    kappa,
    load_algebra,
    preset,
    validate,
)
from .free import free_nilpotent
from .gauge import Gauge, ScanSettings, build_gauge, layered_gauge, symbol_scan
from .group import (
    bch,
    bch_symbolic,
    identity_suite,
    left_invariant_fields,
    radial_field,
)
from .hardy import Bump, ExpGauss, hardy_report, ibp_residual
from .hypo import (
    FieldFamily,
    adapted_coordinates,
    bracket_flag,
    counterexample,
    general_radial,
    step3_repair,
    well_adapted_check,
)
from .poly import GaugeExpr, Polynomial, PolyVectorField
from .quadrature import QuadratureSpec, default_spec, integrate

__all__ = [
    "Bump", "ExpGauss", "FieldFamily", "Gauge", "GaugeExpr", "Polynomial", "PolyVectorField",
    "QuadratureSpec", "ScanSettings", "StratifiedAlgebra", "StructuralError",
    "abelian", "adapted_coordinates", "bch", "bch_symbolic", "bracket", "bracket_flag",
    "build_gauge", "counterexample", "default_spec", "engel", "free_nilpotent",
    "general_radial", "hardy_report", "heisenberg", "ibp_residual", "identity_suite",
    "integrate", "kappa", "layered_gauge", "left_invariant_fields", "load_algebra", "preset",
    "radial_field", "step3_repair", "symbol_scan", "validate", "well_adapted_check",
]
