"""hmlab: a Monte Carlo laboratory for harmonic measure on planar and spatial domains.

The package simulates Brownian exit distributions with walk-on-spheres,
compares conditioned exit histograms in total variation as the inner
compact set grows, and builds finite representing-measure approximations
for positive harmonic functions, with closed-form disk oracles used to
calibrate every estimator.
"""

__version__ = "0.1.0"

from .errors import ChartError, ConditioningError, OracleError

__all__ = ["ChartError", "ConditioningError", "OracleError", "__version__"]
