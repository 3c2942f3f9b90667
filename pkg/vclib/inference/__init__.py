from .plausibility import GridSpec, PlausibilityResult, pl_at, pl_curve, interval
