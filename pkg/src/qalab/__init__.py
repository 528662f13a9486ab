"""Desk-scale quantum annealing laboratory for k-body Ising instances."""

from .bounds import (BoundsReport, coefficient_a, coefficient_a_stirling, gap_bound_check, hopf_check,
                     kappa_bound, kappa_exact, positive_power)
from .dynamics import Propagator, Trajectory, evolve, initial_ground_state, residual_energy
from .errors import (CapacityError, DimensionError, EigensolverError, NormDriftError, ParseError,
                     PositivityError, QALabError, ScheduleJunctionError, SingularityError, StructureError)
from .ising import (DriverKind, HamiltonianView, IsingInstance, Term, apply_hamiltonian, materialize_dense,
                    parse_instance, potential_diagonal, random_instance)
from .oracle import ClassicalSummary, enumerate_classical, success_probability
from .schedules import (AdiabaticityTarget, Constant, Exponential, ExtendedPowerLaw, Linear, PowerLaw,
                        adiabaticity_envelope, calibrate_alpha, dgamma_dt, gamma_at)
from .spectra import AdiabaticEstimate, Spectrum, adiabatic_estimate, full_spectrum, gap

__version__ = "0.1.0"
