from .multivariate_f import log_density_u, log_density_w, log_normalizer
from .conditional import ConditionalLaw, build_law, cdf_abs, log_q, solve_w, log_linear_map
