"""Latent logarithm: a denoised log of non-negative data.

Each measurement ``t`` taken at exposure ``o`` is treated as a noisy draw
around a latent abundance ``exp(z) * o`` with ``z ~ N(mu, sigma2)``. ``nlag``
returns the MAP ``z`` and ``lag`` returns ``z + log(o)``; zeros need no
pseudocount.

>>> import numpy as np
>>> from latentlog import lag, PriorSpec
>>> lag(np.array([0.0, 3.0, 250.0]), o=np.array([2.0, 2.0, 2.0]), prior=PriorSpec(0.0, 1.0)).round(4)
array([-0.1595,  0.9932,  5.502 ])
"""

__version__ = "0.1.0"

from .exceptions import (
    ConvergenceError,
    DataError,
    InvalidObservationError,
    LatentLogError,
    PriorFormatError,
    QuadratureError,
)
from .map_solver import MapSolution, Observation, PriorSpec, SolverOptions, solve_map, solve_map_batch
from .icm import FitOptions, LatentFit, fit
from .transform import (
    TransformResult,
    TransformRow,
    lag,
    load_prior,
    nlag,
    save_prior,
    transform_fixed,
    transform_learned,
    transform_with_prior,
)

__all__ = [
    "ConvergenceError",
    "DataError",
    "FitOptions",
    "InvalidObservationError",
    "LatentFit",
    "LatentLogError",
    "MapSolution",
    "Observation",
    "PriorFormatError",
    "PriorSpec",
    "QuadratureError",
    "SolverOptions",
    "TransformResult",
    "TransformRow",
    "fit",
    "lag",
    "load_prior",
    "nlag",
    "save_prior",
    "solve_map",
    "solve_map_batch",
    "transform_fixed",
    "transform_learned",
    "transform_with_prior",
]
