"""Monte-Carlo laboratory for superpositions of stationary renewal
processes.

A bank of independent renewal streams with event-time law F (rate mu) is
started in equilibrium: the first event of each stream is drawn from the
stationary-excess law of F, later gaps from F itself.  The superposed
count B(t) is observed on the accelerated clock t -> gamma*t and
centered and scaled diffusively,

    scaled(t) = (B(gamma * t) - n * mu * gamma * t) / sqrt(n * gamma).

As n * gamma grows this converges to a driftless Brownian motion with
variance slope mu * cs2, where cs2 is the scv of F.  The laboratory
generates replications of the scaled process on a grid and runs the
statistical checks behind that claim: marginal normality, variance
linearity in t, and independence of increments.  Without the clock
acceleration (gamma = 1) the limit is Gaussian but not Brownian, and the
increment correlation stays visibly negative for regular streams; that
negative control is part of the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .distributions import Dist
from .errors import InsufficientReplications, InvalidParams, MemoryBudgetExceeded
from .streams import substream

# per-replication expected event guard; generation is streamed in blocks
# so memory stays bounded well below this
DEFAULT_EVENT_CAP = 100_000_000

_BLOCK_VALUES = 2_000_000  # floats held at once while generating streams


@dataclass(frozen=True)
class SuperpositionConfig:
    """Experiment layout for one (n_streams, gamma) cell."""

    n_streams: int
    gamma: float
    event_law: Dist
    t_grid: tuple[float, ...] = (0.5, 1.0, 1.5, 2.0)
    replications: int = 2000
    seed: int = 0
    equilibrium_start: bool = True
    event_cap: int = DEFAULT_EVENT_CAP

    def __post_init__(self):
        if self.n_streams < 1:
            raise InvalidParams("need at least one stream")
        if self.gamma <= 0.0:
            raise InvalidParams("gamma must be positive")
        if len(self.t_grid) == 0 or any(t <= 0.0 for t in self.t_grid):
            raise InvalidParams("t_grid must contain positive times")
        if list(self.t_grid) != sorted(self.t_grid):
            raise InvalidParams("t_grid must be increasing")
        if self.replications < 2:
            raise InsufficientReplications("need at least two replications")
        if self.expected_events > self.event_cap:
            raise MemoryBudgetExceeded(
                f"expected {self.expected_events:.3g} events per replication "
                f"exceeds the cap {self.event_cap:.3g}"
            )

    @property
    def expected_events(self) -> float:
        """Mean event count of one replication."""
        return self.n_streams * self.gamma * max(self.t_grid) * self.event_law.rate

    @property
    def scale(self) -> float:
        return math.sqrt(self.n_streams * self.gamma)


@dataclass(frozen=True, eq=False)
class SuperpositionSample:
    """Scaled superposition values, one row per replication."""

    config: SuperpositionConfig
    scaled: np.ndarray  # shape (replications, len(t_grid))
    raw_counts: np.ndarray  # same shape, unscaled event counts

    @property
    def t_grid(self) -> np.ndarray:
        return np.asarray(self.config.t_grid)

    @property
    def means(self) -> np.ndarray:
        return self.scaled.mean(axis=0)

    @property
    def mean_se(self) -> np.ndarray:
        return self.scaled.std(axis=0, ddof=1) / math.sqrt(self.scaled.shape[0])

    @property
    def variances(self) -> np.ndarray:
        return self.scaled.var(axis=0, ddof=1)

    @property
    def covariance(self) -> np.ndarray:
        """Covariance matrix of the scaled values across the grid."""
        return np.cov(self.scaled, rowvar=False)


def _stream_counts(cfg: SuperpositionConfig, rng: np.random.Generator, thresholds: np.ndarray) -> np.ndarray:
    """Per-stream event counts at each threshold for one replication.

    Returns an (n_streams, len(thresholds)) integer matrix.  Streams are
    generated in blocks and epochs are dropped once counted, so peak
    memory is bounded by the block size, not by the event total.
    """
    law = cfg.event_law
    first_law = law.equilibrium() if cfg.equilibrium_start else law
    horizon = float(thresholds[-1])
    expected = horizon * law.rate
    # enough columns that running past the horizon is overwhelmingly likely
    cols = int(expected + 10.0 * math.sqrt(max(expected, 1.0) * (law.scv + 1.0)) + 16)
    counts = np.zeros((cfg.n_streams, len(thresholds)), dtype=np.int64)

    block = max(1, min(cfg.n_streams, _BLOCK_VALUES // cols))
    done = 0
    while done < cfg.n_streams:
        b = min(block, cfg.n_streams - done)
        gaps = np.empty((b, cols))
        gaps[:, 0] = first_law.sample(rng, b)
        gaps[:, 1:] = law.sample(rng, (b, cols - 1))
        epochs = np.cumsum(gaps, axis=1)
        # extend the rare streams that have not yet crossed the horizon
        short = epochs[:, -1] < horizon
        while short.any():
            extra_cols = max(8, cols // 4)
            last = epochs[short, -1:]
            extra = np.cumsum(law.sample(rng, (int(short.sum()), extra_cols)), axis=1)
            epochs = np.concatenate(
                [epochs, np.full((b, extra_cols), np.inf)], axis=1
            )
            epochs[short, -extra_cols:] = last + extra
            short = epochs[:, -1] < horizon
        for j, thr in enumerate(thresholds):
            counts[done : done + b, j] = (epochs <= thr).sum(axis=1)
        done += b
    return counts


def per_stream_counts(cfg: SuperpositionConfig, replication: int = 0) -> np.ndarray:
    """Unscaled per-stream counts of one replication, (n_streams, grid).

    Uses the same generator path as simulate_superposition, so summing
    over streams reproduces that replication's raw counts exactly.
    """
    rng = substream(cfg.seed, replication, "renewal")
    return _stream_counts(cfg, rng, cfg.gamma * np.asarray(cfg.t_grid))


def simulate_superposition(cfg: SuperpositionConfig) -> SuperpositionSample:
    """Generate all replications of the scaled superposition on the grid."""
    thresholds = cfg.gamma * np.asarray(cfg.t_grid)
    mu = cfg.event_law.rate
    raw = np.empty((cfg.replications, len(cfg.t_grid)), dtype=np.int64)
    for r in range(cfg.replications):
        rng = substream(cfg.seed, r, "renewal")
        raw[r] = _stream_counts(cfg, rng, thresholds).sum(axis=0)
    centered = raw - cfg.n_streams * mu * thresholds[None, :]
    return SuperpositionSample(config=cfg, scaled=centered / cfg.scale, raw_counts=raw)


def fslln_deviation(sample: SuperpositionSample) -> np.ndarray:
    """Per-replication sup deviation of fluid-scaled counts from mu * t."""
    cfg = sample.config
    mu = cfg.event_law.rate
    fluid = sample.raw_counts / (cfg.n_streams * cfg.gamma)
    return np.max(np.abs(fluid - mu * sample.t_grid[None, :]), axis=1)


def fslln_check(cfg: SuperpositionConfig) -> float:
    """Median over replications of the fluid-limit sup deviation."""
    return float(np.median(fslln_deviation(simulate_superposition(cfg))))


def anderson_darling_pvalue(x: np.ndarray) -> float:
    """Anderson-Darling normality p-value (mean and variance estimated).

    Applies the finite-sample correction A* = A2 * (1 + 0.75/m + 2.25/m^2)
    and the standard piecewise-exponential tail approximation for the
    case of fully estimated parameters.
    """
    x = np.asarray(x, dtype=float)
    m = len(x)
    if m < 8:
        raise InsufficientReplications("Anderson-Darling needs at least 8 points")
    a2 = stats.anderson(x, dist="norm").statistic
    a2 *= 1.0 + 0.75 / m + 2.25 / m**2
    if a2 >= 0.6:
        p = math.exp(1.2937 - 5.709 * a2 + 0.0186 * a2 * a2)
    elif a2 >= 0.34:
        p = math.exp(0.9177 - 4.279 * a2 - 1.38 * a2 * a2)
    elif a2 >= 0.2:
        p = 1.0 - math.exp(-8.318 + 42.796 * a2 - 59.938 * a2 * a2)
    else:
        p = 1.0 - math.exp(-13.436 + 101.14 * a2 - 223.73 * a2 * a2)
    return min(max(p, 0.0), 1.0)


@dataclass(frozen=True)
class BrownianReport:
    """Outcome of the Brownian-limit diagnostics on one sample."""

    t_grid: np.ndarray
    means: np.ndarray
    mean_se: np.ndarray
    variances: np.ndarray
    variance_se: np.ndarray
    var_slope: float
    target_slope: float
    ad_pvalues: np.ndarray
    increment_corr: float
    increment_corr_pvalue: float


def brownian_tests(sample: SuperpositionSample, permutations: int = 2000) -> BrownianReport:
    """Marginal normality, variance linearity and increment independence.

    The increment check correlates the value at the first grid point
    with the increment to the second and attaches a permutation p-value
    (increments shuffled across replications).
    """
    cfg = sample.config
    x = sample.scaled
    reps = x.shape[0]
    if reps < 500:
        raise InsufficientReplications("brownian_tests needs at least 500 replications")
    if x.shape[1] < 2:
        raise InvalidParams("increment checks need at least two grid points")
    t = sample.t_grid

    variances = x.var(axis=0, ddof=1)
    # SE of the sample variance of an approximately Gaussian variable
    variance_se = variances * math.sqrt(2.0 / (reps - 1))
    slope = float(np.sum(variances * t) / np.sum(t * t))
    target = cfg.event_law.rate * cfg.event_law.scv

    ad = np.array([anderson_darling_pvalue(x[:, j]) for j in range(x.shape[1])])

    first = x[:, 0]
    incr = x[:, 1] - x[:, 0]
    corr = float(np.corrcoef(first, incr)[0, 1])
    rng = substream(cfg.seed, 0, "generic", index=1)
    exceed = 0
    for _ in range(permutations):
        perm = rng.permutation(reps)
        if abs(np.corrcoef(first, incr[perm])[0, 1]) >= abs(corr):
            exceed += 1
    pvalue = (exceed + 1) / (permutations + 1)

    return BrownianReport(
        t_grid=t,
        means=sample.means,
        mean_se=sample.mean_se,
        variances=variances,
        variance_se=variance_se,
        var_slope=slope,
        target_slope=target,
        ad_pvalues=ad,
        increment_corr=corr,
        increment_corr_pvalue=pvalue,
    )
