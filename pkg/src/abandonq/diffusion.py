"""Closed-form Gaussian performance approximations for overloaded
many-server queues with customer abandonment.

For a queue with n servers, service rate mu, traffic intensity rho > 1,
mean patience gamma and interarrival/service variability ca2/cs2, the
steady-state customer count fluctuates around the fluid point
n + n*mu*(rho-1)*gamma like an Ornstein-Uhlenbeck process.  That yields
Gaussian laws for the queue length and the virtual waiting time whose
means and variances are available in closed form, together with tail
probabilities for the diffusion-scaled versions of both quantities.

Exponential patience is the base case; ``general_patience`` extends the
same formulas to arbitrary patience distributions by linearizing the
patience hazard at the fluid waiting time, and reduces exactly to the
base case when the patience is exponential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import ndtr

from .distributions import Dist
from .errors import InvalidParams, NoRoot, NotOverloaded

_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianApprox:
    """Gaussian steady-state approximation of one overloaded queue.

    Attributes
    ----------
    alpha : fraction of customers that abandon, (rho - 1) / rho.
    q : mean queue (buffer) length, n * mu * (rho - 1) * gamma.
    sigma2_queue : variance of the customer count (and of the queue length).
    w : mean virtual waiting time, gamma * log(rho) for exponential patience.
    sigma2_wait : variance of the virtual waiting time.
    ou_var : stationary variance of the diffusion-scaled customer count,
        equal to sigma2_queue / (n * gamma).
    """

    n: int
    mu: float
    rho: float
    gamma: float
    ca2: float
    cs2: float
    alpha: float
    q: float
    sigma2_queue: float
    w: float
    sigma2_wait: float
    ou_var: float

    @property
    def lam(self) -> float:
        return self.n * self.mu * self.rho

    @property
    def queue_scale(self) -> float:
        """Diffusion scale of the customer count, sqrt(n * gamma)."""
        return math.sqrt(self.n * self.gamma)

    @property
    def wait_scale(self) -> float:
        """Diffusion scale of the virtual wait, sqrt(gamma / n)."""
        return math.sqrt(self.gamma / self.n)

    def queue_tail(self, a):
        """P[scaled customer count > a], where the scaled count is
        (X - n - q) / sqrt(n * gamma)."""
        a = np.asarray(a, dtype=float)
        out = 1.0 - ndtr(a / math.sqrt(self.ou_var))
        return float(out) if out.ndim == 0 else out

    def wait_tail(self, a):
        """P[scaled virtual wait > a], where the scaled wait is
        sqrt(n / gamma) * (W - w)."""
        a = np.asarray(a, dtype=float)
        scale = math.sqrt(self.n / self.gamma * self.sigma2_wait)
        out = 1.0 - ndtr(a / scale)
        return float(out) if out.ndim == 0 else out

    def state_pmf(self, i):
        """Gaussian probability that the customer count equals integer i."""
        i = np.asarray(i, dtype=float)
        sd = math.sqrt(self.sigma2_queue)
        z = (i - self.n - self.q) / sd
        out = np.exp(-0.5 * z * z) / (sd * _SQRT2PI)
        return float(out) if out.ndim == 0 else out

    def queue_threshold(self, a: float) -> float:
        """Customer-count level corresponding to scaled exceedance a."""
        return self.n + self.q + a * self.queue_scale

    def wait_threshold(self, a: float) -> float:
        """Virtual-wait level corresponding to scaled exceedance a."""
        return self.w + a * self.wait_scale


def _check_inputs(n: int, mu: float, rho: float, ca2: float, cs2: float) -> None:
    if n < 1 or int(n) != n:
        raise InvalidParams(f"n must be a positive integer, got {n}")
    if mu <= 0.0 or not math.isfinite(mu):
        raise InvalidParams(f"mu must be positive, got {mu}")
    if ca2 < 0.0 or cs2 < 0.0:
        raise InvalidParams("variability coefficients must be nonnegative")
    if not math.isfinite(rho):
        raise InvalidParams(f"rho must be finite, got {rho}")
    if rho <= 1.0:
        raise NotOverloaded(f"these formulas require rho > 1, got rho = {rho}")


def approximate(n: int, mu: float, rho: float, gamma: float, ca2: float, cs2: float) -> GaussianApprox:
    """Gaussian approximation for exponential patience with mean gamma."""
    _check_inputs(n, mu, rho, ca2, cs2)
    if gamma <= 0.0:
        raise InvalidParams(f"gamma must be positive, got {gamma}")
    alpha = (rho - 1.0) / rho
    q = n * mu * (rho - 1.0) * gamma
    ou_var = mu * (rho * ca2 + cs2 + rho - 1.0) / 2.0
    sigma2_queue = n * gamma * ou_var
    w = gamma * math.log(rho)
    sigma2_wait = gamma * (ca2 + rho * cs2 + rho - 1.0) / (2.0 * n * mu * rho)
    return GaussianApprox(
        n=int(n), mu=mu, rho=rho, gamma=gamma, ca2=ca2, cs2=cs2,
        alpha=alpha, q=q, sigma2_queue=sigma2_queue, w=w,
        sigma2_wait=sigma2_wait, ou_var=ou_var,
    )


def general_patience(
    n: int,
    mu: float,
    rho: float,
    lam: float | None,
    patience: Dist,
    ca2: float = 1.0,
    cs2: float = 1.0,
) -> GaussianApprox:
    """Gaussian approximation for a general patience distribution.

    The fluid waiting time w solves H(w) = (rho - 1) / rho, where H is the
    patience CDF; the effective mean patience is 1 / h(w) with h the
    patience hazard rate; and the mean queue length is the integral of
    lam * (1 - H) over [0, w].  With exponential patience all three reduce
    to the closed forms of ``approximate``.
    """
    _check_inputs(n, mu, rho, ca2, cs2)
    if lam is None:
        lam = n * mu * rho
    elif abs(lam - n * mu * rho) > 1e-9 * max(1.0, lam):
        raise InvalidParams("lam, n, mu and rho are inconsistent: rho must equal lam / (n * mu)")

    target = (rho - 1.0) / rho
    hi = patience.ppf(1.0 - 1e-9)
    if patience.cdf(hi) < target:
        raise NoRoot("patience distribution never reaches the abandonment fraction")
    if patience.cdf(0.0) >= target:
        w = 0.0
    else:
        w = float(brentq(lambda t: patience.cdf(t) - target, 0.0, hi, xtol=1e-14, rtol=8.9e-16))

    h = float(patience.hazard(w))
    if h <= 0.0:
        raise NoRoot("patience hazard vanishes at the fluid waiting time")
    gamma_eff = 1.0 / h

    q, _ = quad(lambda s: lam * patience.sf(s), 0.0, w, epsrel=1e-12, epsabs=0.0, limit=400)

    alpha = target
    ou_var = mu * (rho * ca2 + cs2 + rho - 1.0) / 2.0
    sigma2_queue = n * gamma_eff * ou_var
    sigma2_wait = gamma_eff * (ca2 + rho * cs2 + rho - 1.0) / (2.0 * n * mu * rho)
    return GaussianApprox(
        n=int(n), mu=mu, rho=rho, gamma=gamma_eff, ca2=ca2, cs2=cs2,
        alpha=alpha, q=q, sigma2_queue=sigma2_queue, w=w,
        sigma2_wait=sigma2_wait, ou_var=ou_var,
    )
