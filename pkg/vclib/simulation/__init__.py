from .generators import gen_oneway, gen_baseline, oneway_design
from .study import SimConfig, StudyResult, RepRecord, run_replication, run_study, run_grid, DESIGN_PATTERNS, \
    VARIANCE_PAIRS, LAMB_FITTED_VARIANCES
