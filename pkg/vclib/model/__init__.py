from .reduction import MixedModelSpec, EigenReduction, build_residual_projector, eigen_reduce, sufficient_stats, \
    ratio_stats, reduce_model, validate_eigenstructure
from .association import AssociationContext, f_values, phi, g_vector, conditioning_matrix, conditioning_value, \
    build_context, rho_to_psi, psi_to_rho
