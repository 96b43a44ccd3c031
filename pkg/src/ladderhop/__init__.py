"""Photon-mediated correlated hopping in a synthetic ladder of atomic ground states."""

from ladderhop.angular import CGTable, build_cg_table, compute_cg
from ladderhop.fock import (
    FockBasis,
    ProductBasis,
    SparseOperator,
    build_bilinear,
    embed,
    enumerate_basis,
)
from ladderhop.ladder import LevelScheme, build_ladder_operators, leg_populations, site_coordinate
from ladderhop.heff import (
    DriveParams,
    EffectiveHamiltonian,
    build_heff_exact,
    build_heff_perturbative,
    shift_suppression_diagnostic,
)
from ladderhop.results import SweepResult, TimeSeries
from ladderhop.dynamics import evolve, finite_size_collapse, long_time_average
from ladderhop.upa import bdg_solve, four_level_phase_boundary, six_level_quadratic
from ladderhop.fullmodel import ZeemanParams, benchmark_heff, build_full, integrate

__version__ = "0.1.0"

__all__ = [
    "SweepResult",
    "TimeSeries",
    "evolve",
    "finite_size_collapse",
    "long_time_average",
    "bdg_solve",
    "four_level_phase_boundary",
    "six_level_quadratic",
    "ZeemanParams",
    "benchmark_heff",
    "build_full",
    "integrate",
    "CGTable",
    "DriveParams",
    "EffectiveHamiltonian",
    "FockBasis",
    "LevelScheme",
    "ProductBasis",
    "SparseOperator",
    "build_bilinear",
    "build_cg_table",
    "build_heff_exact",
    "build_heff_perturbative",
    "build_ladder_operators",
    "compute_cg",
    "embed",
    "enumerate_basis",
    "leg_populations",
    "shift_suppression_diagnostic",
    "site_coordinate",
]
