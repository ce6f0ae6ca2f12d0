"""Interarrival, service and patience time distributions.

Five parametric families are supported, identified by the lowercase names
used in configs: ``deterministic``, ``exponential``, ``erlang2``,
``lognormal`` and ``hyperexp2``.  Each family exposes sampling, cdf/pdf/
hazard evaluation, quantiles, and its stationary-excess (equilibrium)
distribution, which is the law of the age/residual in a stationary renewal
process and therefore the right law for the first event of a renewal
stream started in equilibrium.

Conventions
-----------
* ``erlang2`` with mean m is the sum of two exponential stages, each with
  rate 2/m, so its squared coefficient of variation is exactly 1/2.
* ``lognormal`` is parameterized by (mean, scv); the underlying normal
  parameters are ``sigma_log**2 = log(1 + scv)`` and
  ``mu_log = log(mean) - sigma_log**2 / 2``.
* ``hyperexp2`` mixes two exponential branches.  Built from (mean, scv)
  alone it uses the balanced-means convention (each branch contributes
  half the mean), which requires scv > 1.
"""

from __future__ import annotations

import abc
import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincinv, ndtr, ndtri

from .errors import (
    DomainError,
    HazardUnavailable,
    InvalidParams,
    TabulationFailure,
    UnsupportedFamily,
)

FAMILIES = ("deterministic", "exponential", "erlang2", "lognormal", "hyperexp2")

# Codes used to hand a distribution to the compiled simulation kernel.
FAMILY_CODES = {name: i for i, name in enumerate(FAMILIES)}

_PPF_MAX_Q = 1.0 - 1e-15


def _as_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise InvalidParams(f"{name} must be positive and finite, got {value}")
    return value


class Dist(abc.ABC):
    """A nonnegative continuous distribution with renewal-theory helpers."""

    family: str = ""

    # -- moments -----------------------------------------------------------
    @property
    @abc.abstractmethod
    def mean(self) -> float: ...

    @property
    @abc.abstractmethod
    def scv(self) -> float:
        """Squared coefficient of variation, Var/mean**2."""

    @property
    @abc.abstractmethod
    def third_moment(self) -> float: ...

    @property
    def rate(self) -> float:
        return 1.0 / self.mean

    @property
    def var(self) -> float:
        return self.scv * self.mean**2

    # -- pointwise evaluation ----------------------------------------------
    @abc.abstractmethod
    def cdf(self, t): ...

    @abc.abstractmethod
    def pdf(self, t): ...

    @abc.abstractmethod
    def ppf(self, q: float) -> float: ...

    def sf(self, t):
        return 1.0 - self.cdf(t)

    def hazard(self, t):
        """Failure rate pdf/sf; DomainError where the survivor is zero."""
        t = np.asarray(t, dtype=float)
        s = np.asarray(self.sf(t))
        if np.any(s <= 0.0):
            raise DomainError("hazard undefined where the survivor function vanishes")
        out = np.asarray(self.pdf(t)) / s
        return float(out) if out.ndim == 0 else out

    # -- sampling ------------------------------------------------------------
    @abc.abstractmethod
    def sample(self, rng: np.random.Generator, size=None): ...

    # -- equilibrium (stationary-excess) law ---------------------------------
    @property
    def equilibrium_mean(self) -> float:
        return self.mean * (1.0 + self.scv) / 2.0

    @property
    def equilibrium_var(self) -> float:
        return self.third_moment / (3.0 * self.mean) - self.equilibrium_mean**2

    @abc.abstractmethod
    def equilibrium(self) -> "Dist": ...

    def equilibrium_cdf(self, t):
        """CDF of the stationary excess, (1/mean) * integral of sf on [0, t]."""
        return self.equilibrium().cdf(t)

    # -- serialization / kernel packing ---------------------------------------
    @abc.abstractmethod
    def to_params(self) -> dict: ...

    def _pack(self) -> tuple[int, float, float, float]:
        """(family code, three slots) consumed by the compiled kernel."""
        raise UnsupportedFamily(f"{self.family or type(self).__name__} cannot run in the simulator")

    def _ppf_check(self, q: float) -> float:
        q = float(q)
        if not 0.0 <= q < 1.0:
            raise DomainError(f"quantile level must lie in [0, 1), got {q}")
        return q

    def __repr__(self) -> str:
        items = ", ".join(f"{k}={v!r}" for k, v in self.to_params().items() if k != "family")
        return f"{type(self).__name__}({items})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Dist) and self.to_params() == other.to_params()

    def __hash__(self):
        return hash(repr(self))


class Deterministic(Dist):
    """Point mass at ``value``."""

    family = "deterministic"

    def __init__(self, value: float):
        self.value = _as_positive("value", value)

    @property
    def mean(self) -> float:
        return self.value

    @property
    def scv(self) -> float:
        return 0.0

    @property
    def third_moment(self) -> float:
        return self.value**3

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(t >= self.value, 1.0, 0.0)
        return float(out) if out.ndim == 0 else out

    def pdf(self, t):
        raise HazardUnavailable("a point mass has no density")

    def hazard(self, t):
        raise HazardUnavailable("a point mass has no hazard rate")

    def ppf(self, q: float) -> float:
        self._ppf_check(q)
        return self.value

    def sample(self, rng, size=None):
        if size is None:
            return self.value
        return np.full(size, self.value)

    def equilibrium(self) -> "Uniform":
        return Uniform(0.0, self.value)

    def to_params(self) -> dict:
        return {"family": self.family, "mean": self.value, "scv": 0.0}

    def _pack(self):
        return FAMILY_CODES[self.family], self.value, 0.0, 0.0


class Exponential(Dist):
    family = "exponential"

    def __init__(self, mean: float):
        self._mean = _as_positive("mean", mean)

    @property
    def mean(self) -> float:
        return self._mean

    @property
    def scv(self) -> float:
        return 1.0

    @property
    def third_moment(self) -> float:
        return 6.0 * self._mean**3

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(t > 0.0, -np.expm1(-np.maximum(t, 0.0) / self._mean), 0.0)
        return float(out) if out.ndim == 0 else out

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(t >= 0.0, np.exp(-np.maximum(t, 0.0) / self._mean) / self._mean, 0.0)
        return float(out) if out.ndim == 0 else out

    def hazard(self, t):
        # Memorylessness makes the hazard exactly constant.
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, 1.0 / self._mean)
        return float(out) if out.ndim == 0 else out

    def ppf(self, q: float) -> float:
        q = self._ppf_check(q)
        return -self._mean * math.log1p(-q)

    def sample(self, rng, size=None):
        return rng.exponential(self._mean, size)

    def equilibrium(self) -> "Exponential":
        return Exponential(self._mean)

    def to_params(self) -> dict:
        return {"family": self.family, "mean": self._mean, "scv": 1.0}

    def _pack(self):
        return FAMILY_CODES[self.family], self._mean, 0.0, 0.0


class Erlang2(Dist):
    """Sum of two exponential stages, each with rate 2/mean (scv = 1/2)."""

    family = "erlang2"

    def __init__(self, mean: float):
        self._mean = _as_positive("mean", mean)
        self._stage_rate = 2.0 / self._mean

    @property
    def mean(self) -> float:
        return self._mean

    @property
    def scv(self) -> float:
        return 0.5

    @property
    def third_moment(self) -> float:
        return 24.0 / self._stage_rate**3

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        bt = self._stage_rate * np.maximum(t, 0.0)
        out = np.where(t > 0.0, 1.0 - (1.0 + bt) * np.exp(-bt), 0.0)
        return float(out) if out.ndim == 0 else out

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        bt = self._stage_rate * np.maximum(t, 0.0)
        out = np.where(t >= 0.0, self._stage_rate * bt * np.exp(-bt), 0.0)
        return float(out) if out.ndim == 0 else out

    def ppf(self, q: float) -> float:
        q = self._ppf_check(q)
        return float(gammaincinv(2.0, q)) / self._stage_rate

    def sample(self, rng, size=None):
        scale = 1.0 / self._stage_rate
        return rng.exponential(scale, size) + rng.exponential(scale, size)

    def equilibrium(self) -> "Mixture":
        # Stationary excess of a two-stage Erlang: equal mixture of one
        # remaining stage and both stages.
        return Mixture(
            (Exponential(self._mean / 2.0), Erlang2(self._mean)),
            (0.5, 0.5),
        )

    def to_params(self) -> dict:
        return {"family": self.family, "mean": self._mean, "scv": 0.5}

    def _pack(self):
        half = self._mean / 2.0
        return FAMILY_CODES[self.family], half, half, 0.0


class Lognormal(Dist):
    family = "lognormal"

    def __init__(self, mean: float, scv: float):
        self._mean = _as_positive("mean", mean)
        self._scv = _as_positive("scv", scv)
        self.sigma_log = math.sqrt(math.log1p(self._scv))
        self.mu_log = math.log(self._mean) - self.sigma_log**2 / 2.0

    @classmethod
    def from_log_params(cls, mu_log: float, sigma_log: float) -> "Lognormal":
        sigma_log = float(sigma_log)
        if sigma_log <= 0.0:
            raise InvalidParams("sigma_log must be positive")
        mean = math.exp(mu_log + sigma_log**2 / 2.0)
        scv = math.expm1(sigma_log**2)
        return cls(mean, scv)

    @property
    def mean(self) -> float:
        return self._mean

    @property
    def scv(self) -> float:
        return self._scv

    @property
    def third_moment(self) -> float:
        return math.exp(3.0 * self.mu_log + 4.5 * self.sigma_log**2)

    def _z(self, t):
        t = np.maximum(np.asarray(t, dtype=float), 1e-320)
        return (np.log(t) - self.mu_log) / self.sigma_log

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(t > 0.0, ndtr(self._z(t)), 0.0)
        return float(out) if out.ndim == 0 else out

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        z = self._z(t)
        safe_t = np.maximum(t, 1e-320)
        out = np.where(
            t > 0.0,
            np.exp(-0.5 * z * z) / (safe_t * self.sigma_log * math.sqrt(2.0 * math.pi)),
            0.0,
        )
        return float(out) if out.ndim == 0 else out

    def ppf(self, q: float) -> float:
        q = self._ppf_check(q)
        if q == 0.0:
            return 0.0
        return math.exp(self.mu_log + self.sigma_log * ndtri(q))

    def sample(self, rng, size=None):
        return rng.lognormal(self.mu_log, self.sigma_log, size)

    def equilibrium(self) -> "TabulatedDist":
        return _lognormal_equilibrium(self.mu_log, self.sigma_log)

    def equilibrium_cdf(self, t):
        return _lognormal_equilibrium_cdf(self.mu_log, self.sigma_log, t)

    def to_params(self) -> dict:
        return {"family": self.family, "mean": self._mean, "scv": self._scv}

    def _pack(self):
        return FAMILY_CODES[self.family], self.mu_log, self.sigma_log, 0.0


class Hyperexp2(Dist):
    """Mixture of two exponential branches with probabilities (p, 1-p)."""

    family = "hyperexp2"

    def __init__(self, p: float, means: tuple[float, float]):
        p = float(p)
        if not 0.0 < p < 1.0:
            raise InvalidParams(f"branch probability must lie in (0, 1), got {p}")
        self.p = p
        self.means = (_as_positive("means[0]", means[0]), _as_positive("means[1]", means[1]))

    @classmethod
    def from_mean_scv(cls, mean: float, scv: float) -> "Hyperexp2":
        """Balanced-means fit: each branch carries half of the mean."""
        mean = _as_positive("mean", mean)
        scv = float(scv)
        if scv <= 1.0:
            raise InvalidParams("a two-branch hyperexponential needs scv > 1")
        p = 0.5 * (1.0 + math.sqrt((scv - 1.0) / (scv + 1.0)))
        return cls(p, (mean / (2.0 * p), mean / (2.0 * (1.0 - p))))

    @property
    def _weights(self):
        return (self.p, 1.0 - self.p)

    @property
    def mean(self) -> float:
        return self.p * self.means[0] + (1.0 - self.p) * self.means[1]

    @property
    def second_moment(self) -> float:
        return 2.0 * (self.p * self.means[0] ** 2 + (1.0 - self.p) * self.means[1] ** 2)

    @property
    def scv(self) -> float:
        return self.second_moment / self.mean**2 - 1.0

    @property
    def third_moment(self) -> float:
        return 6.0 * (self.p * self.means[0] ** 3 + (1.0 - self.p) * self.means[1] ** 3)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        tt = np.maximum(t, 0.0)
        out = np.where(
            t > 0.0,
            1.0 - self.p * np.exp(-tt / self.means[0]) - (1.0 - self.p) * np.exp(-tt / self.means[1]),
            0.0,
        )
        return float(out) if out.ndim == 0 else out

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        tt = np.maximum(t, 0.0)
        out = np.where(
            t >= 0.0,
            self.p / self.means[0] * np.exp(-tt / self.means[0])
            + (1.0 - self.p) / self.means[1] * np.exp(-tt / self.means[1]),
            0.0,
        )
        return float(out) if out.ndim == 0 else out

    def ppf(self, q: float) -> float:
        q = self._ppf_check(q)
        if q == 0.0:
            return 0.0
        # No closed form; bisection on a bracket built from the slower branch.
        hi = max(self.means) * max(1.0, -math.log1p(-q)) + 1.0
        while self.cdf(hi) < q:
            hi *= 2.0
        lo = 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.cdf(mid) < q:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def sample(self, rng, size=None):
        if size is None:
            branch_mean = self.means[0] if rng.random() < self.p else self.means[1]
            return rng.exponential(branch_mean)
        pick = rng.random(size) < self.p
        draws = np.where(pick, self.means[0], self.means[1])
        return rng.exponential(draws)

    def equilibrium(self) -> "Hyperexp2":
        # Stationary excess of a hyperexponential keeps the branch means but
        # reweights each branch by its share of the overall mean.
        q0 = self.p * self.means[0] / self.mean
        return Hyperexp2(q0, self.means)

    def to_params(self) -> dict:
        return {
            "family": self.family,
            "p": (self.p, 1.0 - self.p),
            "means": self.means,
            "mean": self.mean,
            "scv": self.scv,
        }

    def _pack(self):
        return FAMILY_CODES[self.family], self.p, self.means[0], self.means[1]


class Uniform(Dist):
    """Uniform on [a, b]; arises as the equilibrium law of a point mass."""

    family = "uniform"

    def __init__(self, a: float, b: float):
        a, b = float(a), float(b)
        if not (0.0 <= a < b):
            raise InvalidParams(f"need 0 <= a < b, got ({a}, {b})")
        self.a, self.b = a, b

    @property
    def mean(self) -> float:
        return 0.5 * (self.a + self.b)

    @property
    def scv(self) -> float:
        return (self.b - self.a) ** 2 / 12.0 / self.mean**2

    @property
    def third_moment(self) -> float:
        return (self.b**4 - self.a**4) / (4.0 * (self.b - self.a))

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        out = np.clip((t - self.a) / (self.b - self.a), 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where((t >= self.a) & (t <= self.b), 1.0 / (self.b - self.a), 0.0)
        return float(out) if out.ndim == 0 else out

    def ppf(self, q: float) -> float:
        q = self._ppf_check(q)
        return self.a + q * (self.b - self.a)

    def sample(self, rng, size=None):
        return rng.uniform(self.a, self.b, size)

    def equilibrium(self) -> "Dist":
        raise UnsupportedFamily("equilibrium of a uniform is not needed and not provided")

    def to_params(self) -> dict:
        return {"family": self.family, "a": self.a, "b": self.b}


class Mixture(Dist):
    """Finite mixture of component distributions."""

    family = "mixture"

    def __init__(self, components: tuple[Dist, ...], weights: tuple[float, ...]):
        if len(components) != len(weights) or not components:
            raise InvalidParams("components and weights must be nonempty and aligned")
        w = np.asarray(weights, dtype=float)
        if np.any(w <= 0.0) or abs(w.sum() - 1.0) > 1e-12:
            raise InvalidParams("weights must be positive and sum to one")
        self.components = tuple(components)
        self.weights = tuple(float(x) for x in w)

    def _mix(self, attr: str):
        return sum(w * getattr(c, attr) for c, w in zip(self.components, self.weights))

    @property
    def mean(self) -> float:
        return self._mix("mean")

    @property
    def second_moment(self) -> float:
        return sum(
            w * (c.scv + 1.0) * c.mean**2 for c, w in zip(self.components, self.weights)
        )

    @property
    def scv(self) -> float:
        return self.second_moment / self.mean**2 - 1.0

    @property
    def third_moment(self) -> float:
        return self._mix("third_moment")

    def cdf(self, t):
        out = sum(w * np.asarray(c.cdf(t)) for c, w in zip(self.components, self.weights))
        out = np.asarray(out)
        return float(out) if out.ndim == 0 else out

    def pdf(self, t):
        out = sum(w * np.asarray(c.pdf(t)) for c, w in zip(self.components, self.weights))
        out = np.asarray(out)
        return float(out) if out.ndim == 0 else out

    def ppf(self, q: float) -> float:
        q = self._ppf_check(q)
        if q == 0.0:
            return 0.0
        hi = max(c.ppf(min(q, _PPF_MAX_Q)) for c in self.components) + 1.0
        while self.cdf(hi) < q:
            hi *= 2.0
        lo = 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.cdf(mid) < q:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def sample(self, rng, size=None):
        if size is None:
            u = rng.random()
            acc = 0.0
            for c, w in zip(self.components, self.weights):
                acc += w
                if u < acc:
                    return c.sample(rng)
            return self.components[-1].sample(rng)
        picks = rng.choice(len(self.components), size=size, p=self.weights)
        draws = np.empty(np.prod(size) if not np.isscalar(size) else size)
        flat = picks.ravel()
        for i, c in enumerate(self.components):
            mask = flat == i
            if mask.any():
                draws[mask] = c.sample(rng, int(mask.sum()))
        return draws.reshape(picks.shape)

    def equilibrium(self) -> "Dist":
        raise UnsupportedFamily("equilibrium of a mixture is not needed and not provided")

    def to_params(self) -> dict:
        return {
            "family": self.family,
            "weights": self.weights,
            "components": tuple(c.to_params() for c in self.components),
        }


@dataclass(frozen=True, eq=False)
class TabulatedDist:
    """Distribution given by a monotone (t, cdf) table with linear
    interpolation; sampling inverts the table.

    The table covers all but at most ``tail_mass`` of the probability; draws
    landing beyond it are clamped to the last knot.
    """

    ts: np.ndarray
    cdf_values: np.ndarray
    mean: float
    tail_mass: float

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        out = np.interp(t, self.ts, self.cdf_values, left=0.0, right=self.cdf_values[-1])
        return float(out) if out.ndim == 0 else np.asarray(out)

    def ppf(self, q):
        q = np.asarray(q, dtype=float)
        if np.any((q < 0.0) | (q >= 1.0)):
            raise DomainError("quantile level must lie in [0, 1)")
        out = np.interp(np.minimum(q, self.cdf_values[-1]), self.cdf_values, self.ts)
        return float(out) if out.ndim == 0 else out

    def sample(self, rng, size=None):
        u = rng.random(size)
        out = np.interp(np.minimum(u, self.cdf_values[-1]), self.cdf_values, self.ts)
        return float(out) if np.ndim(out) == 0 else out

    @property
    def knots(self) -> int:
        return len(self.ts)


def _lognormal_equilibrium_cdf(mu_log: float, sigma_log: float, t):
    """Stationary-excess CDF of a lognormal, in closed form.

    With S the lognormal survivor function and m its mean, the partial
    expectation identity gives
    (1/m) * integral_0^t S(u) du = Phi(z - sigma) + (t/m) * (1 - Phi(z)),
    where z = (log t - mu_log) / sigma_log.
    """
    t = np.asarray(t, dtype=float)
    mean = math.exp(mu_log + sigma_log**2 / 2.0)
    safe = np.maximum(t, 1e-320)
    z = (np.log(safe) - mu_log) / sigma_log
    out = np.where(t > 0.0, ndtr(z - sigma_log) + t / mean * ndtr(-z), 0.0)
    out = np.minimum(out, 1.0)
    return float(out) if out.ndim == 0 else out


@functools.lru_cache(maxsize=16)
def _lognormal_equilibrium(mu_log: float, sigma_log: float) -> TabulatedDist:
    """Tabulate the inverse CDF of the lognormal stationary excess.

    The knot set starts log-spaced, is extended until the table covers all
    but 1e-9 of the mass, and is bisected until the linear interpolant of
    the CDF is accurate to 1e-10 at every midpoint.  At least 4096 knots
    are used.
    """
    target_tail = 1e-9
    tol = 1e-10
    ln = Lognormal.from_log_params(mu_log, sigma_log)

    def fe(ts):
        return np.asarray(_lognormal_equilibrium_cdf(mu_log, sigma_log, ts))

    t_hi = ln.mean
    while 1.0 - float(fe(t_hi)) > target_tail:
        t_hi *= 2.0
        if t_hi > 1e12 * ln.mean:
            raise TabulationFailure("equilibrium tail does not reach the coverage target")

    t_lo = min(ln.ppf(1e-8), ln.mean * 1e-8)
    ts = np.concatenate(([0.0], np.geomspace(t_lo, t_hi, 4095)))
    fs = fe(ts)

    for _ in range(64):
        mids = 0.5 * (ts[:-1] + ts[1:])
        f_mid = fe(mids)
        err = np.abs(f_mid - 0.5 * (fs[:-1] + fs[1:]))
        bad = err > tol
        if not bad.any():
            break
        ts = np.sort(np.concatenate([ts, mids[bad]]))
        fs = fe(ts)
        if len(ts) > (1 << 22):
            raise TabulationFailure("refinement exceeded the knot budget")
    else:
        raise TabulationFailure("refinement did not converge to the error target")

    # Drop duplicate cdf values so interpolation stays strictly monotone.
    keep = np.concatenate(([True], np.diff(fs) > 0.0))
    ts, fs = ts[keep], fs[keep]
    return TabulatedDist(ts=ts, cdf_values=fs, mean=ln.equilibrium_mean, tail_mass=1.0 - fs[-1])


def make_dist(family: str, **params) -> Dist:
    """Build a distribution from a family name and parameters.

    Accepts either the canonical (mean, scv) pair or family-native
    parameters: ``value`` (deterministic), ``rate`` (exponential),
    ``mu_log``/``sigma_log`` (lognormal), ``p``/``means`` (hyperexp2).
    """
    family = str(family).strip().lower()
    if family not in FAMILIES:
        raise UnsupportedFamily(f"unknown family {family!r}; expected one of {FAMILIES}")

    def need_mean() -> float:
        if "mean" not in params:
            raise InvalidParams(f"{family} requires a mean")
        return float(params["mean"])

    def check_scv(expected: float):
        if "scv" in params and abs(float(params["scv"]) - expected) > 1e-9:
            raise InvalidParams(f"{family} has scv {expected}, got {params['scv']}")

    if family == "deterministic":
        check_scv(0.0)
        return Deterministic(params.get("value", params.get("mean")))
    if family == "exponential":
        check_scv(1.0)
        if "rate" in params:
            return Exponential(1.0 / _as_positive("rate", params["rate"]))
        return Exponential(need_mean())
    if family == "erlang2":
        check_scv(0.5)
        return Erlang2(need_mean())
    if family == "lognormal":
        if "mu_log" in params or "sigma_log" in params:
            return Lognormal.from_log_params(params["mu_log"], params["sigma_log"])
        if "scv" not in params:
            raise InvalidParams("lognormal requires (mean, scv) or (mu_log, sigma_log)")
        return Lognormal(need_mean(), float(params["scv"]))
    # hyperexp2
    if "p" in params or "means" in params:
        if "p" not in params or "means" not in params:
            raise InvalidParams("hyperexp2 native form requires both p and means")
        p = params["p"]
        p0 = float(p[0]) if np.ndim(p) else float(p)
        means = params["means"]
        h2 = Hyperexp2(p0, (float(means[0]), float(means[1])))
        if "mean" in params and abs(h2.mean - float(params["mean"])) > 1e-6 * h2.mean:
            raise InvalidParams("hyperexp2 mean inconsistent with (p, means)")
        return h2
    if "scv" not in params:
        raise InvalidParams("hyperexp2 requires (mean, scv) or (p, means)")
    return Hyperexp2.from_mean_scv(need_mean(), float(params["scv"]))


def from_params(params: dict) -> Dist:
    """Inverse of ``Dist.to_params``."""
    params = dict(params)
    family = params.pop("family")
    return make_dist(family, **params)
