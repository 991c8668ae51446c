"""Privacy accounting, noise calibration and simulation for shuffled and online PNSGD."""

__version__ = "0.1.0"

from .composition import (
    GdpParam,
    RdpPoint,
    compose_epochs,
    rdp_alpha_sweep,
    dp_to_gdp,
    dp_to_rdp,
    gdp_compose,
    gdp_to_dp,
    rdp_compose,
    rdp_to_dp,
)
from .privacy_bounds import (
    BoundConstants,
    GeometrySpec,
    NoiseModel,
    PrivacyBudget,
    ScheduleSpec,
    ab_constants,
    delta_star_fixed_gaussian,
    delta_star_fixed_laplace,
    fixed_gaussian_scale,
    fixed_laplace_scale,
    online_delta_finite,
    online_delta_limit_lower,
    online_delta_limit_upper,
    online_scale,
    per_index_delta,
    randomly_stopped_delta,
    shuffled_delta,
    shuffled_delta_fixed_noise,
)
from .simulator import PnsgdConfig, TrajectoryResult, generate_synthetic, paired_losses, run
from .special_functions import (
    LossProfile,
    contraction_m,
    divergence_oracle,
    lambert_w0,
    log_q_function,
    q_function,
    theta,
    theta_asymptotic,
    theta_asymptotic_deficit,
    theta_complement,
)
