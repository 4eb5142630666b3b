"""Independent reference computations used by the tests.

Nothing here imports latentlog: each oracle re-derives its answer from the
model formulas with plain ``math`` / ``mpmath`` so it cannot share a bug
with the code under test.
"""

import math

import mpmath as mp
import numpy as np


def map_gradient(z, t, o, mu, s2):
    e = math.exp(z + math.log(o)) if o > 0 and z + math.log(o) < 700 else (0.0 if o == 0 else math.inf)
    return t - e - (z - mu) / s2


def map_objective(z, t, o, mu, s2):
    e = o * math.exp(z) if o > 0 else 0.0
    return t * z - e - (z - mu) ** 2 / (2 * s2)


def bisect_map(t, o, mu, s2):
    """MAP z by bisection on the (strictly decreasing) gradient."""
    lo, hi = mu - 1.0, mu + 1.0
    while map_gradient(lo, t, o, mu, s2) < 0:
        lo = mu - 2 * (mu - lo)
    while map_gradient(hi, t, o, mu, s2) > 0:
        hi = mu + 2 * (hi - mu)
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if map_gradient(mid, t, o, mu, s2) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def central_difference(f, x, h=1e-6):
    return (f(x + h) - f(x - h)) / (2 * h)


def joint_objective(t, o, z, mu, s2):
    """Straight-line loop over rows; no vectorisation, no fsum."""
    total = 0.0
    for ti, oi, zi in zip(t, o, z):
        total += ti * zi - (oi * math.exp(zi) if oi > 0 else 0.0) - math.lgamma(ti + 1)
        total += -0.5 * math.log(2 * math.pi * s2) - (zi - mu) ** 2 / (2 * s2)
    return total


def cp_log_unnorm(x, lam):
    with mp.workdps(40):
        return float(mp.mpf(x) * mp.log(lam) - lam - mp.loggamma(mp.mpf(x) + 1))


def cp_mass(lam, upper=None):
    """Unnormalised Continuous-Poisson mass on [0, upper] by mpmath quadrature."""
    with mp.workdps(30):
        lam = mp.mpf(lam)
        u = upper if upper is not None else lam + 12 * mp.sqrt(lam + 1) + 30
        f = lambda x: mp.exp(x * mp.log(lam) - lam - mp.loggamma(x + 1))
        pts = [0] + [p for p in (lam - 6 * mp.sqrt(lam), lam, lam + 6 * mp.sqrt(lam)) if 0 < p < u] + [u]
        return mp.quad(f, pts)


def cp_mean(lam):
    with mp.workdps(30):
        lam = mp.mpf(lam)
        u = lam + 12 * mp.sqrt(lam + 1) + 30
        f = lambda x: mp.exp(x * mp.log(lam) - lam - mp.loggamma(x + 1))
        return float(mp.quad(lambda x: x * f(x), [0, lam, u]) / mp.quad(f, [0, lam, u]))


def poisson_pmf(k, lam):
    with mp.workdps(40):
        return float(mp.power(lam, k) * mp.exp(-lam) / mp.factorial(k))


def random_instances(rng, n):
    """(t, o, mu, sigma2) drawn over the ranges the solver is specified for."""
    t = rng.uniform(0, 1e4, n)
    t[: n // 5] = 0.0
    t[n // 5: 2 * n // 5] = rng.integers(0, 20, 2 * n // 5 - n // 5)
    o = np.exp(rng.uniform(np.log(1e-6), np.log(1e4), n))
    mu = rng.uniform(-8, 4, n)
    s2 = rng.uniform(0.01, 9, n)
    return t, o, mu, s2
