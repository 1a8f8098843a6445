"""Non-overlapping uniform k-spacings: empirical processes, Gaussian limits,
strong couplings, oscillation moduli and a Monte Carlo harness."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CapacityError,
    ConfigError,
    DomainError,
    FitError,
    RepresentationError,
    ResolutionError,
    SpacingsLabError,
)
from .rng import RngStream  # noqa: E402
from .gamma import (  # noqa: E402
    gamma_cdf,
    gamma_cdf_second_derivative,
    gamma_eval,
    gamma_pdf,
    gamma_quantile,
    gamma_sf,
    gamma_tail_bound_check,
    log_gamma,
    psi,
    shorack_constant,
    shorack_limit,
)
from .process import GammaCDF, Identity, StepProcess  # noqa: E402
from .spacings import (  # noqa: E402
    SpacingsSample,
    beta_process,
    gc_statistic,
    integral_identity,
    lambda_process,
    lil_statistic,
    mean_value_bound_check,
    reduced_process,
    remainder_decomposition,
    sample_exponential_spacings,
    sample_uniform_spacings,
    sup_r2,
)
from .gaussian import (  # noqa: E402
    BridgePath,
    ShorackPath,
    refine_bridge,
    sample_brownian_bridge,
    sample_shorack,
    sample_shorack_batch,
    shorack_covariance,
    shorack_from_bridge,
    shorack_grid,
)
from .coupling import CoupledPair, binomial_quantile, coupling_distance, dyadic_coupling  # noqa: E402
from .oscillation import (  # noqa: E402
    RateSequences,
    WindowSpec,
    kappa,
    kappa_prime,
    mws_window,
    rate_values,
    shift_scale,
    stute_conditions_check,
)
from .harness import ExperimentConfig, ExperimentResult, run_experiment, slope_fit  # noqa: E402
