"""Iterated conditional modes for the Poisson-Normal hierarchy.

Alternates two exact coordinate maximisations of the joint log-likelihood

    sum_i [t_i z_i - exp(z_i) o_i - log Gamma(t_i + 1)]
      + sum_i [-log(2 pi sigma2)/2 - (z_i - mu)^2 / (2 sigma2)]

(Continuous-Poisson normaliser dropped, as in the per-sample MAP): every
``z_i`` given ``(mu, sigma2)``, then ``(mu, sigma2)`` given ``z``. Each step can
only increase the objective, so the recorded trace is monotone.

With ``mu_step="profile"`` (the default) the latent step also re-solves
``mu``: for fixed ``sigma2`` the objective is jointly concave in ``(z, mu)``
and its maximiser is the root of ``mean(z(mu)) - mu``, found by safeguarded
Newton. Fixed points are the same as plain ICM, but this avoids the crawl of
``mu`` by ``O(sigma2)`` per sweep once ``sigma2`` has shrunk onto the floor,
which happens on sparse data.

Reductions use :func:`math.fsum`, which is exactly rounded, so the learned
prior and the trace do not depend on row order.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .exceptions import LatentLogError
from .map_solver import PriorSpec, SolverOptions, _expo, _logo, as_arrays, solve_map_batch

__all__ = [
    "VARIANCE_FLOOR",
    "FitOptions",
    "LatentFit",
    "init_params",
    "update_params",
    "joint_objective",
    "fit",
]

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-6


@dataclass(frozen=True)
class FitOptions:
    tol: float = 1e-8
    max_iter: int = 500
    mu_step: str = "profile"  # or "mean": plain alternation
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if self.mu_step not in ("profile", "mean"):
            raise ValueError(f"mu_step must be 'profile' or 'mean', got {self.mu_step!r}")


@dataclass(frozen=True)
class LatentFit:
    z: np.ndarray
    prior: PriorSpec
    objective_trace: np.ndarray
    converged: bool
    iterations: int

    @property
    def objective(self):
        return float(self.objective_trace[-1])


def _mean_var(values):
    n = len(values)
    mean = math.fsum(values) / n
    var = math.fsum((values - mean) ** 2) / n
    return mean, max(var, VARIANCE_FLOOR)


def init_params(obs, o=None):
    """Pseudocount initialiser: mean and variance of ``log(t/o + 1)``.

    Rows with ``o == 0`` are skipped. The variance uses the ``1/n`` divisor,
    like :func:`update_params`, and is floored at ``VARIANCE_FLOOR``.
    """
    t, o = as_arrays(obs, o)
    t, o = t.ravel(), o.ravel()
    usable = o > 0
    if usable.sum() < 2:
        raise LatentLogError(
            f"need at least 2 rows with positive exposure to initialise, got {int(usable.sum())}")
    mu, sigma2 = _mean_var(np.log1p(t[usable] / o[usable]))
    return PriorSpec(mu, sigma2)


def update_params(z):
    """Closed-form prior update: mean and (1/n) variance of ``z``, floored."""
    z = np.asarray(z, dtype=float).ravel()
    if z.size < 2:
        raise LatentLogError(f"need at least 2 latent values, got {z.size}")
    mu, sigma2 = _mean_var(z)
    return PriorSpec(mu, sigma2)


def joint_objective(obs, z, prior, o=None):
    """Joint log-likelihood of data and latent rates (normaliser dropped).

    Returns ``-inf`` if any ``exp(z_i)*o_i`` overflows.
    """
    t, o = as_arrays(obs, o)
    t, o = t.ravel(), o.ravel()
    z = np.asarray(z, dtype=float).ravel()
    if z.size != t.size:
        raise ValueError(f"got {z.size} latent values for {t.size} observations")
    e = _expo(z, _logo(o))
    if np.isinf(e).any():
        return -math.inf
    tz = np.where(t == 0, 0.0, t * z)
    d = z - prior.mu
    terms = np.concatenate([
        tz, -e, -gammaln(t + 1.0),
        -d * d / (2.0 * prior.sigma2),
        [-0.5 * z.size * math.log(2.0 * math.pi * prior.sigma2)],
    ])
    return math.fsum(terms)


def _profile_mu(t, o, prior, solver, max_iter=100, max_doublings=64):
    """Jointly maximise over ``(z, mu)`` at fixed ``sigma2``.

    ``h(mu) = mean(z(mu)) - mu`` is strictly decreasing with slope
    ``mean(w) - 1`` where ``w_i = (1/sigma2) / (exp(z_i) o_i + 1/sigma2)``.
    A root exists iff some ``t > 0``; otherwise (or if bracketing fails)
    returns ``None`` and the caller takes the plain mean step.
    """
    if not np.any(t > 0):
        return None
    s2 = prior.sigma2
    n = t.size
    logo = _logo(o)

    def h(mu):
        z = solve_map_batch((t, o), PriorSpec(mu, s2), solver).z
        return math.fsum(z) / n - mu, z

    mu = prior.mu
    hm, z = h(mu)
    if hm == 0.0:
        return z, mu
    # bracket the root, expanding away from the start
    step = max(1.0, math.sqrt(s2))
    lo = hi = mu
    if hm > 0:
        hi, hhi = mu + step, h(mu + step)[0]
        for _ in range(max_doublings):
            if hhi <= 0:
                break
            lo, step = hi, 2.0 * step
            hi, hhi = mu + step, h(mu + step)[0]
        else:
            return None
    else:
        lo, hlo = mu - step, h(mu - step)[0]
        for _ in range(max_doublings):
            if hlo >= 0:
                break
            hi, step = lo, 2.0 * step
            lo, hlo = mu - step, h(mu - step)[0]
        else:
            return None

    for _ in range(max_iter):
        if hm > 0:
            lo = max(lo, mu)
        else:
            hi = min(hi, mu)
        e = _expo(z, logo)
        slope = math.fsum((1.0 / s2) / (e + 1.0 / s2)) / n - 1.0
        nxt = mu - hm / slope
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - mu) <= 1e-14 * (1.0 + abs(mu)) or hi - lo <= 4e-16 * (1.0 + abs(mu)):
            mu = nxt
            hm, z = h(mu)
            break
        mu = nxt
        hm, z = h(mu)
        if hm == 0.0:
            break
    return z, mu


def fit(obs, opts=None, o=None, init=None):
    """Learn ``z``, ``mu`` and ``sigma2`` by iterated conditional modes.

    Starts from :func:`init_params` unless ``init`` (a :class:`PriorSpec`) is
    given. Stops once the joint objective changes by at most
    ``opts.tol * (1 + |objective|)`` between sweeps; if ``opts.max_iter``
    sweeps pass first, the last state is returned with ``converged=False``.
    """
    opts = opts or FitOptions()
    t, o = as_arrays(obs, o)
    t, o = t.ravel(), o.ravel()
    if t.size < 2:
        raise LatentLogError("learning the prior needs at least 2 observations")
    prior = init if init is not None else init_params(t, o)

    trace = []
    z = None
    converged = False
    for it in range(opts.max_iter):
        if it:
            prior = update_params(z)
        # z is re-solved last so the returned z is the MAP under the returned prior
        profiled = _profile_mu(t, o, prior, opts.solver) if opts.mu_step == "profile" else None
        if profiled is not None:
            z, mu = profiled
            prior = PriorSpec(mu, prior.sigma2)
        else:
            z = solve_map_batch((t, o), prior, opts.solver).z
        value = joint_objective((t, o), z, prior)
        trace.append(value)
        if it and abs(value - trace[-2]) <= opts.tol * (1.0 + abs(value)):
            converged = True
            break
    logger.debug("ICM stopped after %d sweeps (converged=%s, mu=%.6g, sigma2=%.6g)",
                 len(trace), converged, prior.mu, prior.sigma2)
    return LatentFit(z=z, prior=prior, objective_trace=np.array(trace),
                     converged=converged, iterations=len(trace))
