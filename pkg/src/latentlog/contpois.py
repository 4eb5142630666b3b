"""Continuous-Poisson distribution on ``[0, inf)``.

The density is ``f(x | lam) = C(lam) * lam**x * exp(-lam) / Gamma(x + 1)``,
i.e. the Poisson pmf formula read as a function of a real argument and
renormalised. ``C(lam)`` has no closed form and is obtained by adaptive
quadrature on ``[0, U]`` with ``U = lam + 12*sqrt(lam + 1) + 30``.

Past ``U`` the integrand ratio ``f(x + 1) / f(x) = lam / (x + 1)`` is below
``r = lam / (U + 1) < 1`` and ``f`` is decreasing, so the neglected tail is at
most ``f(U) / (1 - r)`` (see :func:`tail_bound`); it is below 1e-30 of the
total mass for every ``lam``.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .exceptions import QuadratureError

__all__ = [
    "ContPoisParam",
    "upper_limit",
    "tail_bound",
    "log_unnorm_density",
    "norm_const",
    "log_norm_const",
    "log_density",
    "density",
    "moments",
    "cdf",
    "sample",
]

QUAD_RTOL = 1e-10
GRID_SIZE = 4096
# Above this rate the direct formula loses ~eps * x*log(lam) to cancellation.
STABLE_RATE = 1e4


@dataclass(frozen=True)
class ContPoisParam:
    """Rate of a Continuous-Poisson; in the model ``lam = exp(z) * o``."""

    lam: float

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"Continuous-Poisson rate must be positive and finite, got {self.lam}")


def _rate(p):
    lam = p.lam if isinstance(p, ContPoisParam) else float(p)
    if not (lam > 0 and math.isfinite(lam)):
        raise ValueError(f"Continuous-Poisson rate must be positive and finite, got {lam}")
    return lam


def upper_limit(lam):
    """Truncation point ``U`` of the normalising integral."""
    return lam + 12.0 * math.sqrt(lam + 1.0) + 30.0


def tail_bound(p):
    """Upper bound on the unnormalised mass beyond :func:`upper_limit`."""
    lam = _rate(p)
    u = upper_limit(lam)
    r = lam / (u + 1.0)
    return math.exp(float(_log_unnorm(u, lam))) / (1.0 - r)


def _stirling_tail(x):
    # log Gamma(x + 1) - (x log x - x + log(2 pi x) / 2), valid for x >= 10
    x2 = x * x
    return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * x2)) / x2) / x2) / x


def _log_unnorm(x, lam):
    if lam <= STABLE_RATE:
        return x * math.log(lam) - lam - gammaln(x + 1.0)
    # saddle-point form: -lam*((1+u)log(1+u) - u) - log(2 pi x)/2 - tail
    x = np.asarray(x, dtype=float)
    big = x >= 10.0
    xs = np.where(big, x, 10.0)
    dev = xs * np.log1p((xs - lam) / lam) - (xs - lam)
    stable = -dev - 0.5 * np.log(2.0 * np.pi * xs) - _stirling_tail(xs)
    return np.where(big, stable, x * math.log(lam) - lam - gammaln(x + 1.0))


def _log_unnorm_direct(x, lam):
    logf = gammaln(x + 1.0)
    np.subtract(x * np.log(lam), logf, out=logf)
    logf -= lam
    return logf


def log_unnorm_density(x, p):
    """``x*log(lam) - lam - log Gamma(x + 1)``, the log density without ``C(lam)``.

    Works element-wise on arrays of ``x``; raises ``ValueError`` for ``x < 0``.
    """
    lam = _rate(p)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise ValueError("Continuous-Poisson support is x >= 0")
    out = np.asarray(_log_unnorm(x, lam))
    return out[()] if out.ndim == 0 else out


def _unnorm(x, lam, loglam):
    if lam <= STABLE_RATE:
        return math.exp(x * loglam - lam - math.lgamma(x + 1.0))
    return math.exp(float(_log_unnorm(x, lam)))


def _quad(fn, lam, upper=None):
    u = upper_limit(lam) if upper is None else upper
    sd = math.sqrt(lam + 1.0)
    points = [q for q in (lam - 12 * sd, lam - 6 * sd, lam - 3 * sd, lam, lam + 3 * sd, lam + 6 * sd)
              if 0.0 < q < u]
    return integrate.quad(fn, 0.0, u, epsabs=0.0, epsrel=QUAD_RTOL, limit=500,
                          points=points or None)


@lru_cache(maxsize=4096)
def _mass(lam):
    loglam = math.log(lam)
    value, abserr = _quad(lambda x: _unnorm(x, lam, loglam), lam)
    if not (value > 0 and abserr <= 1e-8 * value):
        raise QuadratureError(
            f"normalising integral for lam={lam} did not converge "
            f"(value={value}, abserr={abserr})",
            best=value, residual=abserr,
        )
    return value


def norm_const(p):
    """Normalisation constant ``C(lam)`` (relative quadrature error <= 1e-8)."""
    return 1.0 / _mass(_rate(p))


def log_norm_const(p):
    return -math.log(_mass(_rate(p)))


def log_density(x, p):
    """Log of the normalised Continuous-Poisson density."""
    return log_unnorm_density(x, p) + log_norm_const(p)


def density(x, p):
    return np.exp(log_density(x, p))


def moments(p):
    """Mean and variance of the normalised density, by quadrature."""
    lam = _rate(p)
    loglam = math.log(lam)
    c = norm_const(lam)
    mean = c * _quad(lambda x: x * _unnorm(x, lam, loglam), lam)[0]
    # central second moment directly; avoids E[x^2] - mean^2 cancellation
    var = c * _quad(lambda x: (x - mean) ** 2 * _unnorm(x, lam, loglam), lam)[0]
    return mean, var


def cdf(x, p):
    """``P(X <= x)`` by quadrature of the normalised density (scalar ``x``)."""
    lam = _rate(p)
    if x <= 0:
        return 0.0
    u = upper_limit(lam)
    if x >= u:
        return 1.0
    loglam = math.log(lam)
    part = _quad(lambda v: _unnorm(v, lam, loglam), lam, upper=x)[0]
    return min(1.0, part * norm_const(lam))


def _grid_bounds(lam):
    """Support window for the sampling grid.

    ``[0, U]`` is narrowed where the density is negligible: below
    ``lam - 12 sd - 30`` for large rates, and for tiny rates (mode at 0,
    log-density slope ~ ``log lam + euler_gamma``) past the point where the
    density has fallen by ``exp(-40)``. Keeps the 4096-point grid resolving
    the bulk of the mass at every scale.
    """
    sd = np.sqrt(lam + 1.0)
    lo = np.maximum(0.0, lam - 12.0 * sd - 30.0)
    hi = lam + 12.0 * sd + 30.0
    slope = -(np.log(lam) + np.euler_gamma)
    steep = slope > 1.0
    hi = np.where(steep, np.minimum(hi, 40.0 / np.where(steep, slope, 1.0)), hi)
    return lo, hi


def _sample_grid(lam, u):
    """Inverse-CDF draws; ``lam`` and ``u`` are 1-D arrays of equal length."""
    out = np.empty_like(lam)
    steps = np.linspace(0.0, 1.0, GRID_SIZE)
    chunk = 128
    for start in range(0, lam.size, chunk):
        lm = lam[start:start + chunk]
        m = lm.size
        lo, hi = _grid_bounds(lm)
        x = np.multiply.outer(hi - lo, steps)
        x += lo[:, None]
        big = lm > STABLE_RATE
        if big.any():
            logf = np.empty_like(x)
            logf[big] = [_log_unnorm(xi, li) for xi, li in zip(x[big], lm[big])]
            logf[~big] = _log_unnorm_direct(x[~big], lm[~big, None])
        else:
            logf = _log_unnorm_direct(x, lm[:, None])
        logf -= logf.max(axis=1, keepdims=True)
        f = np.exp(logf, out=logf)
        # uniform spacing per row, so the trapezoid width cancels on normalising
        c = np.zeros((m, GRID_SIZE))
        np.add(f[:, 1:], f[:, :-1], out=c[:, 1:])
        np.cumsum(c, axis=1, out=c)
        c /= c[:, -1:]
        target = u[start:start + chunk]
        j = np.clip((c < target[:, None]).sum(axis=1), 1, GRID_SIZE - 1)
        rows = np.arange(m)
        c0, c1 = c[rows, j - 1], c[rows, j]
        width = c1 - c0
        frac = np.divide(target - c0, width, out=np.zeros_like(width), where=width > 0)
        out[start:start + chunk] = x[rows, j - 1] + frac * (x[rows, j] - x[rows, j - 1])
    return out


def _sample_shared(rates, inverse, u):
    """Inverse-CDF draws when many draws share a rate: one grid per rate."""
    out = np.empty(u.size)
    for k, lam in enumerate(rates):
        idx = np.flatnonzero(inverse == k)
        lo, hi = _grid_bounds(np.array([lam]))
        x = np.linspace(lo[0], hi[0], GRID_SIZE)
        logf = np.asarray(_log_unnorm(x, lam), dtype=float)
        f = np.exp(logf - logf.max())
        c = np.concatenate([[0.0], np.cumsum(f[1:] + f[:-1])])
        c /= c[-1]
        out[idx] = np.interp(u[idx], c, x)
    return out


def sample(p, rng, size=None, method="grid"):
    """Draw from the Continuous-Poisson.

    ``p`` may be a :class:`ContPoisParam`, a scalar rate or an array of rates;
    rates of exactly zero yield zero (the degenerate point mass at the origin).
    ``method="grid"`` inverts the CDF tabulated on a 4096-point grid;
    ``method="poisson"`` is the faster integer-Poisson approximation.
    """
    lam = np.asarray(p.lam if isinstance(p, ContPoisParam) else p, dtype=float)
    if size is not None:
        lam = np.broadcast_to(lam, size)
    if np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise ValueError("Continuous-Poisson rates must be finite and non-negative")
    shape = lam.shape
    flat = lam.reshape(-1)
    if method == "poisson":
        out = rng.poisson(flat).astype(float)
    elif method == "grid":
        u = rng.random(flat.size)
        out = np.zeros(flat.size)
        pos = flat > 0
        if pos.any():
            rates, inverse = np.unique(flat[pos], return_inverse=True)
            if rates.size < pos.sum():
                out[pos] = _sample_shared(rates, inverse, u[pos])
            else:
                out[pos] = _sample_grid(flat[pos], u[pos])
    else:
        raise ValueError(f"unknown sampling method {method!r}")
    out = out.reshape(shape)
    return out[()] if out.ndim == 0 else out
