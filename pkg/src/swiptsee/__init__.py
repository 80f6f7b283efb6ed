"""Secure energy efficiency of SWIPT distributed antenna systems.

Power allocation that maximises secrecy rate per consumed watt under
energy-harvesting constraints, closed-form outage probability of that
efficiency, and Monte Carlo cross-checks.
"""
__version__ = "0.1.0"

from .errors import (ConfigError, DimensionError, GridTooLargeError, NumericalRangeError,
                     QuadratureError, UndefinedRatioError)
from .model import (ChannelRealization, PowerAllocation, SystemConfig, consumed_power,
                    harvested_energy_bob, harvested_energy_eve, secrecy_rate, see, total_rate)
from .channel import ChannelSampler, dbm_to_watts, sample, watts_to_dbm
from .outage import (OutageScenario, eve_cdf_term, outage_closed_form, outage_known_bob,
                     outage_worst_case, outage_worst_case_exact, quadrature_eve_cdf,
                     regularized_lower_gamma, regularized_upper_gamma)
from .optimizer import (SolveReport, SolverOptions, check_feasibility, dinkelbach_subproblem,
                        grid_oracle, kkt_residual, solve_p1)
from .montecarlo import McEstimate, mc_outage, mc_outage_known_bob, mc_outage_worst_case
