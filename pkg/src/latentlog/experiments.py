"""Synthetic data from the hierarchy and desk-scale experiment scripts.

* :func:`generate` draws ``z ~ N(mu, sigma2)`` and ``t ~ ContPois(exp(z) o)``.
* :func:`run_depth_sweep` holds the prior at ``N(0.25, 0.05)`` and shrinks the
  depth of a zero-count sample from 10 to 1e-6.
* :func:`run_gene_analogs` simulates a rare and an abundant gene, learns
  their priors and compares ``lag`` with ``log(t + 1)``.
* :func:`run_recovery` measures how well ICM recovers the prior mean.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import contpois
from .exceptions import LatentLogError
from .map_solver import Observation, PriorSpec
from .transform import TransformResult, transform_fixed, transform_learned

__all__ = [
    "OffsetSpec",
    "parse_o_spec",
    "SynthConfig",
    "SynthData",
    "generate",
    "compare_table",
    "DepthSweep",
    "run_depth_sweep",
    "GeneAnalog",
    "RARE_GENE",
    "ABUNDANT_GENE",
    "run_gene_analogs",
    "Recovery",
    "run_recovery",
]


@dataclass(frozen=True)
class OffsetSpec:
    """How exposures are laid out: ``const``, ``loggrid`` or ``lognormal``.

    ``loggrid:lo:hi`` runs geometrically from ``hi`` down to ``lo``;
    ``lognormal:m:s`` draws ``exp(N(m, s^2))`` (``m`` is the log-median).
    """

    kind: str
    a: float
    b: float = None

    def draw(self, n, rng):
        if self.kind == "const":
            return np.full(n, self.a)
        if self.kind == "loggrid":
            return np.geomspace(self.b, self.a, n) if n > 1 else np.array([self.b])
        return np.exp(rng.normal(self.a, self.b, n))

    def __str__(self):
        if self.kind == "const":
            return f"const:{self.a!r}"
        return f"{self.kind}:{self.a!r}:{self.b!r}"


def parse_o_spec(text):
    if isinstance(text, OffsetSpec):
        return text
    parts = str(text).split(":")
    kind = parts[0]
    try:
        nums = [float(p) for p in parts[1:]]
    except ValueError:
        raise ValueError(f"bad offset spec {text!r}") from None
    if kind == "const" and len(nums) == 1 and nums[0] >= 0:
        return OffsetSpec("const", nums[0])
    if kind == "loggrid" and len(nums) == 2 and 0 < nums[0] <= nums[1]:
        return OffsetSpec("loggrid", nums[0], nums[1])
    if kind == "lognormal" and len(nums) == 2 and nums[1] >= 0:
        return OffsetSpec("lognormal", nums[0], nums[1])
    raise ValueError(
        f"bad offset spec {text!r}; expected const:<v>, loggrid:<lo>:<hi> or lognormal:<m>:<s>")


@dataclass(frozen=True)
class SynthConfig:
    n: int
    mu: float
    sigma2: float
    o_spec: object = "const:1"
    seed: int = 0
    zero_counts: bool = False  # force every t to 0
    method: str = "grid"  # "poisson" gives integer counts

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "o_spec", parse_o_spec(self.o_spec))


@dataclass(frozen=True)
class SynthData:
    t: np.ndarray
    o: np.ndarray
    z: np.ndarray  # true log-latent rates
    config: SynthConfig

    def observations(self):
        return [(Observation(t, o), z) for t, o, z in zip(self.t, self.o, self.z)]

    def columns(self):
        return {"t": self.t, "o": self.o, "z_true": self.z}


def generate(cfg):
    """Draw a dataset from the hierarchy; deterministic in ``cfg.seed``."""
    rng = np.random.default_rng(int(cfg.seed))
    o = cfg.o_spec.draw(cfg.n, rng)
    z = rng.normal(cfg.mu, math.sqrt(cfg.sigma2), cfg.n)
    if cfg.zero_counts:
        t = np.zeros(cfg.n)
    else:
        with np.errstate(over="ignore"):
            lam = np.exp(z) * o
        if not np.all(np.isfinite(lam)):
            raise LatentLogError("latent abundance overflowed; reduce mu, sigma2 or o")
        t = contpois.sample(lam, rng, method=cfg.method)
    return SynthData(t, o, z, cfg)


def compare_table(result, pseudocount=1.0):
    """Rows of ``t, o, log(t + pseudocount), lag, nlag``."""
    return {
        "t": result.t,
        "o": result.o,
        "log_pc": np.log(result.t + pseudocount),
        "lag": result.lag,
        "nlag": result.nlag,
    }


@dataclass(frozen=True)
class DepthSweep:
    o: np.ndarray
    nlag: np.ndarray
    prior: PriorSpec

    @property
    def monotone(self):
        """nlag strictly increases as depth decreases."""
        order = np.argsort(-self.o)
        return bool(np.all(np.diff(self.nlag[order]) > 0))

    @property
    def endpoint_gap(self):
        return float(abs(self.nlag[np.argmin(self.o)] - self.prior.mu))

    def columns(self):
        return {"o": self.o, "nlag": self.nlag, "lag": self.nlag + np.log(self.o)}


def run_depth_sweep(n_points=13, lo=1e-6, hi=10.0, prior=PriorSpec(0.25, 0.05)):
    """Zero counts at depths ``hi`` down to ``lo`` under a fixed prior."""
    cfg = SynthConfig(n=n_points, mu=prior.mu, sigma2=prior.sigma2,
                      o_spec=OffsetSpec("loggrid", lo, hi), zero_counts=True)
    data = generate(cfg)
    res = transform_fixed((data.t, data.o), prior)
    sweep = DepthSweep(data.o, res.nlag, prior)
    if not sweep.monotone:
        raise LatentLogError("nlag is not monotone in depth")
    return sweep


RARE_GENE = PriorSpec(-4.63, 2.30)
ABUNDANT_GENE = PriorSpec(0.83, 1.80)


@dataclass
class GeneAnalog:
    name: str
    truth: PriorSpec
    data: SynthData
    result: TransformResult
    pseudocount: float = 1.0
    diagnostics: dict = field(default_factory=dict)

    def compare(self):
        return compare_table(self.result, self.pseudocount)


def run_gene_analogs(seed=0, n=2597, depth_median=5.0, depth_spread=0.5, pseudocount=1.0):
    """Simulate and fit a rare and an abundant gene.

    Depths are log-normal in millions of reads; counts are integer-Poisson so
    that zero measurements actually occur.
    """
    spec = OffsetSpec("lognormal", math.log(depth_median), depth_spread)
    out = {}
    for k, (name, truth) in enumerate((("rare", RARE_GENE), ("abundant", ABUNDANT_GENE))):
        cfg = SynthConfig(n=n, mu=truth.mu, sigma2=truth.sigma2, o_spec=spec,
                          seed=int(seed) + k, method="poisson")
        data = generate(cfg)
        res = transform_learned((data.t, data.o))
        zero = data.t == 0
        deep = data.o > np.median(data.o)
        out[name] = GeneAnalog(name, truth, data, res, pseudocount, {
            "zero_fraction": float(zero.mean()),
            "mu_hat": res.prior.mu,
            "sigma2_hat": res.prior.sigma2,
            "iterations": res.fit.iterations,
            "converged": res.fit.converged,
            "lag_zero_max": float(res.lag[zero].max()) if zero.any() else math.nan,
            "lag_zero_deep_min": float(res.lag[zero & deep].min()) if (zero & deep).any() else math.nan,
        })
    return out


@dataclass(frozen=True)
class Recovery:
    mu: np.ndarray
    sigma2: np.ndarray
    truth: PriorSpec

    @property
    def mean_mu(self):
        return float(self.mu.mean())

    @property
    def mean_sigma2(self):
        return float(self.sigma2.mean())


def run_recovery(seeds=range(20), n=5000, o=1000.0, truth=PriorSpec(-2.0, 1.0)):
    mus, s2s = [], []
    for seed in seeds:
        data = generate(SynthConfig(n=n, mu=truth.mu, sigma2=truth.sigma2,
                                    o_spec=OffsetSpec("const", o), seed=seed))
        res = transform_learned((data.t, data.o))
        mus.append(res.prior.mu)
        s2s.append(res.prior.sigma2)
    return Recovery(np.array(mus), np.array(s2s), truth)
