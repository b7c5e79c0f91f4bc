"""Certified interval approximation of topological pressure for
nearest-neighbor lattice interactions on the square lattice."""

from .errors import BudgetError, GibbsPressError, HypothesisError, UsageError
from .interaction import (
    Alphabet,
    Configuration,
    Interaction,
    build_checkerboard,
    build_full_shift,
    build_hard_square,
    build_ising,
    energy,
    energy_with_boundary,
    per_site_contribution,
)
from .lattice import Region, Site, box, boundary, canopy_decomposition, inner_boundary, past_in_box
from .pressure import (
    PInterval,
    PressureEstimate,
    finite_positivity_probe,
    gk_pressure,
    p_interval,
    representation_residual,
    ssm_gap_probe,
    width_decay_diagnostic,
)
from .sft import (
    PeriodicPoint,
    diagonal_3coloring_point,
    is_locally_admissible,
    orbit_sites,
    periodic_point_from_ssf,
    safe_symbol_check,
    ssf_check,
)
from .transfer import (
    ConstrainedRegion,
    StripBounds,
    box_log_partition,
    conditional_probability,
    conditional_sum_check,
    log_partition,
    strip_pressure,
    strip_sequence,
)

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "BudgetError",
    "Configuration",
    "ConstrainedRegion",
    "GibbsPressError",
    "HypothesisError",
    "Interaction",
    "PInterval",
    "PeriodicPoint",
    "PressureEstimate",
    "Region",
    "Site",
    "StripBounds",
    "UsageError",
    "boundary",
    "box",
    "box_log_partition",
    "build_checkerboard",
    "build_full_shift",
    "build_hard_square",
    "build_ising",
    "canopy_decomposition",
    "conditional_probability",
    "conditional_sum_check",
    "diagonal_3coloring_point",
    "energy",
    "energy_with_boundary",
    "finite_positivity_probe",
    "gk_pressure",
    "inner_boundary",
    "is_locally_admissible",
    "log_partition",
    "orbit_sites",
    "p_interval",
    "past_in_box",
    "per_site_contribution",
    "periodic_point_from_ssf",
    "representation_residual",
    "safe_symbol_check",
    "ssf_check",
    "ssm_gap_probe",
    "strip_pressure",
    "strip_sequence",
    "width_decay_diagnostic",
]
