"""Fractional-age survival and net single premiums under Balducci's assumption."""

from .errors import (AgeRangeError, DomainError, QuadratureError, SeriesError, TableError,
                     TruncationError)
from .fractional import (Assumption, FractionalAge, LifetimeSampler, conditional_density,
                         force_of_mortality, sample_lifetime, sample_lifetimes,
                         subyear_death_probability, survival_fraction)
from .mortality import (MortalityTable, WeibullLaw, from_weibull, kpx, load_table,
                        probabilities, read_table_csv, write_table_csv)
from .oracle import (Monotonicity, OrderingResult, Payoff, Window, monte_carlo_expectation,
                     ordering_check, payoff_for, quadrature_expectation)
from .premiums import (TO_OMEGA, ContractSpec, InterestEnvironment, Kind, Layout, MomentResult,
                       annually_increasing_moment, compute_moment,
                       increasing_continuous_moment, lifetime_moment, mthly_increasing_moment,
                       mthly_insurance_moment, mthly_mean_payment_time, term_insurance_moment,
                       whole_life_moment)
from .quadrature import QuadratureConfig
from .special_functions import (ei_difference, ei_difference_scaled, ei_difference_subyear,
                                ei_difference_subyear_scaled, exp_integral_e1, exp_integral_ei)

__version__ = "0.1.0"
