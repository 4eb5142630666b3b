"""Per-sample MAP estimate of the log-latent rate.

For one observation ``(t, o)`` and a Normal prior ``N(mu, sigma2)`` on the
log-latent rate ``z`` the log posterior is, up to terms free of ``z``::

    f(z) = t*z - exp(z)*o - (z - mu)**2 / (2*sigma2)

with gradient ``t - exp(z)*o - (z - mu)/sigma2`` and Hessian
``-exp(z)*o - 1/sigma2 < 0``. The normalising constant of the
Continuous-Poisson likelihood depends on ``z`` too but is dropped here, so the
optimum is that of the Poisson-kernel posterior.

The maximiser is found by Newton's method started at ``mu``, with each step
confined to a gradient sign-change bracket and backtracked on ``f``. Because
``f`` is strictly concave this converges from any start.
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConvergenceError, InvalidObservationError

__all__ = [
    "SIGMA2_FLOOR",
    "EXP_CUTOFF",
    "Observation",
    "PriorSpec",
    "SolverOptions",
    "MapSolution",
    "MapBatch",
    "as_arrays",
    "objective",
    "gradient",
    "hessian",
    "solve_map",
    "solve_map_batch",
]

SIGMA2_FLOOR = 1e-12
# exp(z)*o is evaluated as exp(z + log o); past this exponent the term is inf.
EXP_CUTOFF = 700.0
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Observation:
    """A non-negative measurement ``t`` taken at exposure ``o``."""

    t: float
    o: float = 1.0

    def __post_init__(self):
        _check(np.asarray(self.t, dtype=float), np.asarray(self.o, dtype=float))


@dataclass(frozen=True)
class PriorSpec:
    """Normal prior ``N(mu, sigma2)`` over log-latent rates.

    Positive ``sigma2`` below ``SIGMA2_FLOOR`` is raised to the floor.
    """

    mu: float
    sigma2: float

    def __post_init__(self):
        mu, sigma2 = float(self.mu), float(self.sigma2)
        if not math.isfinite(mu):
            raise ValueError(f"prior mean must be finite, got {self.mu}")
        if not (sigma2 > 0 and math.isfinite(sigma2)):
            raise ValueError(f"prior variance must be positive and finite, got {self.sigma2}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma2", max(sigma2, SIGMA2_FLOOR))

    @property
    def sigma(self):
        return math.sqrt(self.sigma2)


@dataclass(frozen=True)
class SolverOptions:
    grad_tol: float = 1e-10
    max_iter: int = 100
    max_halvings: int = 60
    max_bracket_doublings: int = 200


@dataclass(frozen=True)
class MapSolution:
    z: float
    iterations: int
    grad_residual: float
    converged: bool


@dataclass(frozen=True)
class MapBatch:
    """Array-valued :class:`MapSolution` for a batch; indexing yields one row."""

    z: np.ndarray
    iterations: np.ndarray
    grad_residual: np.ndarray
    converged: np.ndarray

    def __len__(self):
        return self.z.size

    def __getitem__(self, i):
        return MapSolution(float(self.z[i]), int(self.iterations[i]),
                           float(self.grad_residual[i]), bool(self.converged[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))


def _check(t, o):
    bad_t = ~(np.isfinite(t) & (t >= 0))
    bad_o = ~(np.isfinite(o) & (o >= 0))
    if bad_t.any() or bad_o.any():
        idx = np.flatnonzero(np.broadcast_to(bad_t | bad_o, np.broadcast(t, o).shape).ravel())
        raise InvalidObservationError(
            f"measurements and exposures must be finite and non-negative (rows {idx[:10].tolist()})",
            indices=idx)
    empty = (t > 0) & (o == 0)
    if empty.any():
        idx = np.flatnonzero(np.broadcast_to(empty, np.broadcast(t, o).shape).ravel())
        raise InvalidObservationError(
            f"t > 0 with zero exposure has zero likelihood (rows {idx[:10].tolist()})",
            indices=idx)


def as_arrays(obs, o=None):
    """Normalise observation input to validated float arrays ``(t, o)``.

    Accepts a sequence of :class:`Observation`, a single one, a ``(t, o)``
    pair of array-likes, or ``t`` with ``o`` passed separately (``o=None``
    then means unit exposure).
    """
    if o is not None:
        t = np.asarray(obs, dtype=float)
        o = np.asarray(o, dtype=float)
    elif isinstance(obs, Observation):
        t, o = np.asarray(obs.t, dtype=float), np.asarray(obs.o, dtype=float)
    elif isinstance(obs, tuple) and len(obs) == 2 and not isinstance(obs[0], Observation):
        t, o = np.asarray(obs[0], dtype=float), np.asarray(obs[1], dtype=float)
    else:
        obs = list(obs)
        if obs and isinstance(obs[0], Observation):
            t = np.array([ob.t for ob in obs], dtype=float)
            o = np.array([ob.o for ob in obs], dtype=float)
        else:
            t = np.asarray(obs, dtype=float)
            o = np.ones_like(t)
    t, o = np.broadcast_arrays(t, o)
    _check(t, o)
    return np.array(t, dtype=float), np.array(o, dtype=float)


def _expo(z, logo):
    """``exp(z)*o`` from ``log o``; inf past the cutoff, 0 when ``o == 0``."""
    a = z + logo
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.exp(np.minimum(a, EXP_CUTOFF))
    return np.where(a > EXP_CUTOFF, np.inf, out)


def _logo(o):
    with np.errstate(divide="ignore"):
        return np.log(o)


def _f(z, t, logo, mu, s2):
    e = _expo(z, logo)
    d = z - mu
    with np.errstate(invalid="ignore"):
        # t*z is 0 for t == 0 even if z is huge
        return np.where(t == 0, 0.0, t * z) - e - d * d / (2.0 * s2)


def _g(z, t, logo, mu, s2):
    return t - _expo(z, logo) - (z - mu) / s2


def _h(z, logo, s2):
    return -_expo(z, logo) - 1.0 / s2


def _unpack(obs, prior):
    t, o = as_arrays(obs)
    return t, _logo(o), prior.mu, prior.sigma2


def _scalar(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def objective(z, obs, prior):
    """``t*z - exp(z)*o - (z - mu)^2 / (2 sigma2)``; ``-inf`` on overflow."""
    t, logo, mu, s2 = _unpack(obs, prior)
    return _scalar(_f(np.asarray(z, dtype=float), t, logo, mu, s2))


def gradient(z, obs, prior):
    t, logo, mu, s2 = _unpack(obs, prior)
    return _scalar(_g(np.asarray(z, dtype=float), t, logo, mu, s2))


def hessian(z, obs, prior):
    _, logo, _, s2 = _unpack(obs, prior)
    return _scalar(_h(np.asarray(z, dtype=float), logo, s2))


def _grow_bracket(t, logo, mu, s2, opts):
    """Double ``[mu - sd, mu + sd]`` outwards until the gradient changes sign."""
    sd = np.sqrt(s2)
    lo, hi = mu - sd, mu + sd
    for _ in range(opts.max_bracket_doublings):
        need_lo = _g(lo, t, logo, mu, s2) < 0
        need_hi = _g(hi, t, logo, mu, s2) > 0
        if not (need_lo.any() or need_hi.any()):
            break
        lo = np.where(need_lo, mu - 2.0 * (mu - lo), lo)
        hi = np.where(need_hi, mu + 2.0 * (hi - mu), hi)
    return lo, hi


def _newton(t, o, mu, s2, opts):
    """Vectorised safeguarded Newton; every element follows its own path."""
    t, o, mu, s2 = (np.array(a, dtype=float).ravel()
                    for a in np.broadcast_arrays(t, o, mu, s2))
    n = t.size
    logo = _logo(o)
    z = mu.copy()
    iterations = np.zeros(n, dtype=np.int64)
    residual = np.zeros(n)
    converged = np.zeros(n, dtype=bool)

    # no data: the likelihood is flat and the prior mode is exact
    converged[o == 0] = True
    act = np.flatnonzero(o != 0)
    if act.size == 0:
        return z, iterations, residual, converged

    ta, la, ma, sa = t[act], logo[act], mu[act], s2[act]
    lo, hi = _grow_bracket(ta, la, ma, sa, opts)
    za = ma.copy()
    its = np.zeros(act.size, dtype=np.int64)
    live = np.arange(act.size)

    for _ in range(opts.max_iter + 1):
        zl, tl, ll, ml, sl = za[live], ta[live], la[live], ma[live], sa[live]
        g = _g(zl, tl, ll, ml, sl)
        e = _expo(zl, ll)
        lo[live] = np.where(g > 0, zl, lo[live])
        hi[live] = np.where(g < 0, zl, hi[live])
        tol = opts.grad_tol * np.maximum(1.0, np.maximum(tl, e))
        collapsed = (hi[live] - lo[live]) <= 4.0 * _EPS * np.maximum(1.0, np.abs(zl))
        done = (np.abs(g) <= tol) | collapsed
        residual[act[live]] = np.abs(g)
        converged[act[live[done]]] = True
        keep = ~done & (its[live] < opts.max_iter)
        live, zl, g, tl, ll, ml, sl = (a[keep] for a in (live, zl, g, tl, ll, ml, sl))
        if live.size == 0:
            break

        lol, hil = lo[live], hi[live]
        mid = 0.5 * (lol + hil)
        step = -g / _h(zl, ll, sl)
        znew = zl + step
        step = np.where((znew > lol) & (znew < hil), step, mid - zl)

        f0 = _f(zl, tl, ll, ml, sl)
        # objective values carry rounding error of order eps * (sum of |terms|)
        noise = 16.0 * _EPS * (np.abs(tl * zl) + _expo(zl, ll)
                               + (zl - ml) ** 2 / (2.0 * sl) + np.abs(f0))
        bad = np.ones(live.size, dtype=bool)
        for _ in range(opts.max_halvings + 1):
            idx = np.flatnonzero(bad)
            fn = _f(zl[idx] + step[idx], tl[idx], ll[idx], ml[idx], sl[idx])
            bad[idx] = ~(fn >= f0[idx] - noise[idx])
            if not bad.any():
                break
            step[bad] *= 0.5
        znext = np.where(bad, mid, zl + step)
        za[live] = znext
        its[live] += 1

    z[act] = za
    iterations[act] = its
    return z, iterations, residual, converged


def solve_map(obs, prior, opts=None):
    """MAP log-latent rate for a single observation.

    ``t == 0, o == 0`` returns ``mu`` exactly with zero iterations. Raises
    :class:`ConvergenceError` (carrying the best iterate) if the gradient
    tolerance is not met within ``opts.max_iter`` Newton steps.
    """
    opts = opts or SolverOptions()
    t, o = as_arrays(obs)
    if t.size != 1:
        raise ValueError("solve_map takes one observation; use solve_map_batch")
    z, its, res, conv = _newton(t, o, prior.mu, prior.sigma2, opts)
    sol = MapSolution(float(z[0]), int(its[0]), float(res[0]), bool(conv[0]))
    if not sol.converged:
        raise ConvergenceError(
            f"Newton did not converge in {opts.max_iter} steps (|grad|={sol.grad_residual:.3g})",
            best=sol, residual=sol.grad_residual)
    return sol


def solve_map_batch(obs, prior, opts=None, o=None, raise_on_failure=True):
    """Element-wise :func:`solve_map` over many observations.

    ``obs`` is anything :func:`as_arrays` accepts. ``prior`` may also be given
    as arrays ``(mu, sigma2)`` broadcastable to the observations. Results are
    bit-identical to solving each row on its own.
    """
    opts = opts or SolverOptions()
    t, o = as_arrays(obs, o)
    if isinstance(prior, PriorSpec):
        mu, s2 = prior.mu, prior.sigma2
    else:
        mu, s2 = (np.asarray(a, dtype=float) for a in prior)
        if np.any(~(s2 > 0)):
            raise ValueError("prior variances must be positive")
        s2 = np.maximum(s2, SIGMA2_FLOOR)
    z, its, res, conv = _newton(t, o, mu, s2, opts)
    shape = t.shape
    batch = MapBatch(z.reshape(shape), its.reshape(shape), res.reshape(shape), conv.reshape(shape))
    if raise_on_failure and not conv.all():
        idx = np.flatnonzero(~conv)
        raise ConvergenceError(
            f"{idx.size} of {conv.size} rows did not converge (first rows {idx[:10].tolist()})",
            best=batch, residual=res[idx], indices=idx)
    return batch
