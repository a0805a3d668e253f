"""Kinetic model of income distribution under taxation, evasion and audits."""
from .calibration import (FitCoefficients, SweepTable, bilinear_fit, sigma_for_target, sweep,
                          xi_for_target)
from .dynamics import (EquilibriumResult, IntegratorSettings, KineticRates, equilibrium,
                       find_steady_state, integrate, make_initial_condition)
from .errors import (ConfigurationError, ConstraintViolation, DegenerateDistributionError, FitError,
                     IntegrationError, NegativityError, SingularInversionError, TaxKineticsError)
from .kinetic_core import (EnforcementParams, ModelConfig, PopulationState, TransitionTensors,
                           audited_rates, build_payer_matrix, build_tensors, effective_rates,
                           rhs_audit, rhs_base)
from .metrics import gini, lorenz, sector_mean_income, tax_revenue

__version__ = "0.1.0"
