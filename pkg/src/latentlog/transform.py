"""The latent logarithm.

``nlag = z`` is the MAP log-latent rate and ``lag = z + log(o)`` the log of
the latent abundance ``exp(z) * o``. With a prior supplied (``transform_fixed``)
each row is solved on its own; ``transform_learned`` learns the prior by ICM
first and hands it back so it can be saved and reused on other datasets.

Rows with ``o == 0`` have no defined ``lag``; it is reported as NaN and
``TransformResult.lag_defined`` is False there, while ``nlag`` stays finite.
"""

import datetime as _dt
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import PriorFormatError
from .icm import FitOptions, LatentFit, fit
from .map_solver import PriorSpec, SolverOptions, _logo, as_arrays, solve_map_batch

__all__ = [
    "TransformRow",
    "TransformResult",
    "transform_fixed",
    "transform_learned",
    "transform_with_prior",
    "lag",
    "nlag",
    "format_prior",
    "parse_prior",
    "save_prior",
    "load_prior",
]


class TransformRow(NamedTuple):
    z: float
    lag: float
    nlag: float


@dataclass(frozen=True)
class TransformResult:
    """Per-row output aligned with the input observations."""

    t: np.ndarray
    o: np.ndarray
    z: np.ndarray
    prior: PriorSpec
    fit: LatentFit = None

    @property
    def nlag(self):
        return self.z

    @property
    def lag_defined(self):
        return self.o > 0

    @property
    def lag(self):
        with np.errstate(divide="ignore"):
            return np.where(self.o > 0, self.z + _logo(self.o), np.nan)

    def __len__(self):
        return self.z.size

    def __getitem__(self, i):
        return TransformRow(float(self.z[i]), float(self.lag[i]), float(self.z[i]))

    def __iter__(self):
        lag = self.lag
        return (TransformRow(float(z), float(l), float(z)) for z, l in zip(self.z, lag))


def transform_fixed(obs, prior, o=None, opts=None):
    """Latent logarithm under a given prior (no learning)."""
    t, o = as_arrays(obs, o)
    z = solve_map_batch((t, o), prior, opts or SolverOptions()).z
    return TransformResult(t, o, z, prior)


def transform_learned(obs, o=None, opts=None, init=None):
    """Learn the prior by ICM, then return rows plus the learned prior."""
    t, o = as_arrays(obs, o)
    shape = t.shape
    res = fit((t.ravel(), o.ravel()), opts or FitOptions(), init=init)
    return TransformResult(t, o, res.z.reshape(shape), res.prior, fit=res)


def transform_with_prior(obs, prior_file, o=None, opts=None):
    """:func:`transform_fixed` with the prior read from a prior document."""
    return transform_fixed(obs, load_prior(prior_file), o=o, opts=opts)


def lag(t, o=None, prior=None):
    """``lag`` of ``t`` at exposures ``o`` (default 1).

    The prior is learned from the data unless one is given as a
    :class:`PriorSpec` or ``(mu, sigma2)`` pair.
    """
    return _run(t, o, prior).lag


def nlag(t, o=None, prior=None):
    return _run(t, o, prior).nlag


def _run(t, o, prior):
    if o is None:
        o = np.ones_like(np.asarray(t, dtype=float))
    if prior is None:
        return transform_learned(t, o=o)
    if not isinstance(prior, PriorSpec):
        prior = PriorSpec(*prior)
    return transform_fixed(t, prior, o=o)


# prior documents: one "key = value" per line, '#' comments, unknown keys ignored

_REQUIRED = ("mu", "sigma2")


def format_prior(prior, n_fit=None, tool_version=None, created=None):
    """Render a prior document.

    ``created`` is omitted unless given (``True`` stamps the current UTC time),
    so repeated runs write byte-identical files.
    """
    if tool_version is None:
        from . import __version__ as tool_version
    if created is True:
        created = _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()
    lines = ["# latentlog prior", f"mu = {prior.mu!r}", f"sigma2 = {prior.sigma2!r}"]
    if n_fit is not None:
        lines.append(f"n_fit = {int(n_fit)}")
    if created:
        lines.append(f"created = {created}")
    lines.append(f"tool_version = {tool_version}")
    return "\n".join(lines) + "\n"


def parse_prior(text):
    """Parse a prior document; returns ``(PriorSpec, fields)``."""
    fields = {}
    where = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" in line:
            key, value = line.split("=", 1)
        elif ":" in line:
            key, value = line.split(":", 1)
        else:
            raise PriorFormatError("expected 'key = value'", line=lineno)
        key, value = key.strip(), value.strip()
        if not key:
            raise PriorFormatError("empty key", line=lineno)
        fields[key] = value
        where[key] = lineno
    values = {}
    for key in _REQUIRED:
        if key not in fields:
            raise PriorFormatError("missing required field", field=key)
        try:
            values[key] = float(fields[key])
        except ValueError:
            raise PriorFormatError(f"not a number: {fields[key]!r}",
                                   line=where[key], field=key) from None
        if not math.isfinite(values[key]):
            raise PriorFormatError("must be finite", line=where[key], field=key)
    if not values["sigma2"] > 0:
        raise PriorFormatError("prior variance must be positive",
                               line=where["sigma2"], field="sigma2")
    if "n_fit" in fields:
        try:
            fields["n_fit"] = int(fields["n_fit"])
        except ValueError:
            raise PriorFormatError("not an integer", line=where["n_fit"], field="n_fit") from None
    return PriorSpec(values["mu"], values["sigma2"]), fields


def save_prior(prior, path, n_fit=None, created=None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_prior(prior, n_fit=n_fit, created=created))


def load_prior(path):
    if isinstance(path, PriorSpec):
        return path
    with open(path, encoding="utf-8") as fh:
        return parse_prior(fh.read())[0]
