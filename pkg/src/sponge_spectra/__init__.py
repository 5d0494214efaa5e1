"""L^q spectra and dimensions of self-affine measures on diagonal sponges."""

from .ifs import (DiagonalMap, ProjectedSystem, SpongeIFS, SPPCReport, ValidationReport,
                  as_fraction, check_sppc, exact_overlap, project_index_set, validate)
from .orderings import (Admissibility, Coefficients, PeriodicWord, ProbStack, admissible_orderings,
                        coefficients, in_Q, lyapunov, scale_ordering, stopping, stoppings)
from .potentials import (PotentialFamily, WeightedMeasure, cube_measure, legendre_transform,
                         lq_potential, phi_value, project_measure, zero_potential)
from .pressure import (ClosedFormResult, DimensionResult, PressureResult, S_value, box_dimension,
                       closed_dimension_bounds, entropy_dimension, lq_spectrum, lq_value,
                       measure_dimensions, solve_closed_form,
                       sup_over_Q, t_value, variational_pressure)
from .oracle import (ApproximateCube, BudgetExceeded, TypeVector, enumerate_cubes,
                     finite_scale_measure_extremes, finite_scale_pressure, type_census)

__all__ = [name for name in dir() if not name.startswith("_")]
