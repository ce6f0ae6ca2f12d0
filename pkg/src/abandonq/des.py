"""Discrete-event simulator of the many-server queue with abandonment.

A QueueModel holds the three ingredient laws (interarrival, service,
patience) and the server count; a SimConfig holds the run layout.  Each
replication starts with all servers busy (residual services drawn from
the stationary-excess law) and the fluid queue content preloaded, then
processes arrivals, completions, and abandonments in event order.  The
perturbed mode keeps every server permanently busy, working on phantom
customers whenever the line is empty, so that service completions form
a superposition of renewal processes.

Virtual waits are sampled by stopped-arrival probes at deterministic
epochs: the live state is replayed forward with arrivals turned off
until some server would come free, using a dedicated probe generator so
the main run is undisturbed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _stats
from scipy.special import ndtr

from . import _engine
from .diffusion import GaussianApprox, approximate, general_patience
from .distributions import Dist
from .errors import (
    EventOrderViolation,
    HazardUnavailable,
    InsufficientReplications,
    InvalidParams,
    NoRoot,
    NotOverloaded,
)
from .streams import substream

MODES = ("standard", "perturbed")


@dataclass(frozen=True)
class QueueModel:
    """n servers, renewal arrivals, iid services, per-customer patience."""

    n: int
    arrival: Dist
    service: Dist
    patience: Dist

    def __post_init__(self):
        if self.n < 1 or int(self.n) != self.n:
            raise InvalidParams(f"n must be a positive integer, got {self.n}")
        if self.rho <= 1.0:
            warnings.warn(
                f"utilization rho = {self.rho:.4g} is not above 1; "
                "overload approximations do not apply",
                stacklevel=2,
            )

    @property
    def lam(self) -> float:
        return 1.0 / self.arrival.mean

    @property
    def mu(self) -> float:
        return 1.0 / self.service.mean

    @property
    def rho(self) -> float:
        return self.lam / (self.n * self.mu)

    @property
    def gamma(self) -> float:
        return self.patience.mean

    def approx(self) -> GaussianApprox | None:
        """Gaussian steady-state approximation, or None when unavailable
        (not overloaded, or patience law without a usable hazard)."""
        if self.rho <= 1.0:
            return None
        ca2 = self.arrival.scv
        cs2 = self.service.scv
        if self.patience.family == "exponential":
            return approximate(self.n, self.mu, self.rho, self.gamma, ca2, cs2)
        try:
            return general_patience(
                self.n, self.mu, self.rho, self.lam, self.patience, ca2=ca2, cs2=cs2
            )
        except (HazardUnavailable, NoRoot):
            return None


@dataclass(frozen=True)
class SimConfig:
    """Run layout: horizon and warmup in model time units."""

    horizon: float
    warmup: float | None = None
    replications: int = 10
    probe_interval: float | None = None
    seed: int = 0
    mode: str = "standard"
    hist_len: int | None = None
    grid_dt: float = 0.0
    tail_levels: tuple[float, ...] = (0.5, 1.0, 1.5)

    def __post_init__(self):
        if self.horizon <= 0.0:
            raise InvalidParams("horizon must be positive")
        if self.warmup is not None and not 0.0 <= self.warmup < self.horizon:
            raise InvalidParams("warmup must lie in [0, horizon)")
        if self.replications < 1:
            raise InvalidParams("need at least one replication")
        if self.probe_interval is not None and self.probe_interval <= 0.0:
            raise InvalidParams("probe_interval must be positive")
        if self.mode not in MODES:
            raise InvalidParams(f"mode must be one of {MODES}")
        if self.grid_dt < 0.0:
            raise InvalidParams("grid_dt must be nonnegative")

    def resolved_warmup(self) -> float:
        return 0.1 * self.horizon if self.warmup is None else self.warmup

    def resolved_probe_interval(self, model: QueueModel) -> float:
        return model.gamma / 10.0 if self.probe_interval is None else self.probe_interval


@dataclass(frozen=True, eq=False)
class InitState:
    """Warm start: busy servers with residual services, preloaded line."""

    residuals: np.ndarray
    deadlines: np.ndarray
    first_arrival: float

    @property
    def x0(self) -> int:
        return len(self.residuals) + len(self.deadlines)


def _fluid_queue_content(model: QueueModel) -> int:
    if model.rho <= 1.0:
        return 0
    approx = model.approx()
    if approx is not None:
        return int(round(approx.q))
    return int(round(model.n * model.mu * (model.rho - 1.0) * model.gamma))


def init_state(model: QueueModel, rng: np.random.Generator) -> InitState:
    """All n servers busy with stationary-excess residuals; the line
    preloaded to the fluid queue content with fresh patience draws."""
    residuals = np.atleast_1d(
        np.asarray(model.service.equilibrium().sample(rng, model.n), dtype=float)
    )
    k0 = _fluid_queue_content(model)
    deadlines = np.atleast_1d(np.asarray(model.patience.sample(rng, k0), dtype=float)) if k0 else np.empty(0)
    first = float(model.arrival.equilibrium().sample(rng))
    return InitState(residuals=residuals, deadlines=deadlines, first_arrival=first)


def _default_hist_len(model: QueueModel) -> int:
    approx = model.approx()
    if approx is not None:
        spread = approx.q + 14.0 * math.sqrt(approx.sigma2_queue)
    else:
        spread = 40.0 + 12.0 * math.sqrt(max(model.n, model.lam * model.gamma, 1.0))
    return model.n + int(math.ceil(spread)) + 64


@dataclass(frozen=True, eq=False)
class RawStats:
    """Everything one replication produced."""

    model: QueueModel
    x0: int
    horizon: float
    warmup: float
    mode: str
    arrivals: int
    completions: int
    abandons: int
    arrivals_pw: int
    completions_pw: int
    abandons_pw: int
    phantoms: int
    x_end: int
    area_q: float
    area_q2: float
    below_n_time: float
    tau_n: float
    hist: np.ndarray
    probe_values: np.ndarray
    x_grid: np.ndarray | None
    grid_dt: float

    @property
    def t_pw(self) -> float:
        return self.horizon - self.warmup

    @property
    def queue_mean(self) -> float:
        return self.area_q / self.t_pw

    @property
    def queue_var(self) -> float:
        m = self.queue_mean
        return max(self.area_q2 / self.t_pw - m * m, 0.0)

    @property
    def abd_fraction(self) -> float:
        return self.abandons_pw / self.arrivals_pw if self.arrivals_pw else 0.0

    @property
    def wait_mean(self) -> float:
        return float(self.probe_values.mean())

    @property
    def wait_var(self) -> float:
        return float(self.probe_values.var(ddof=1))

    @property
    def below_n_fraction(self) -> float:
        return self.below_n_time / self.t_pw

    @property
    def flow_residual(self) -> int:
        return self.arrivals + self.x0 - self.completions - self.abandons - self.x_end

    def queue_exceed_fraction(self, threshold: float) -> float:
        states = np.arange(len(self.hist))
        total = self.hist.sum()
        return float(self.hist[states > threshold].sum() / total)

    def wait_exceed_fraction(self, threshold: float) -> float:
        return float((self.probe_values > threshold).mean())


def run_replication(model: QueueModel, config: SimConfig, replication: int = 0) -> RawStats:
    """Simulate one replication and return its raw statistics."""
    warmup = config.resolved_warmup()
    probe_interval = config.resolved_probe_interval(model)
    hist_len = config.hist_len if config.hist_len is not None else _default_hist_len(model)

    init = init_state(model, substream(config.seed, replication, "init"))
    k0 = len(init.deadlines)

    probe_cap = int((config.horizon - warmup) / probe_interval) + 2
    probe_values = np.empty(probe_cap)
    if config.grid_dt > 0.0:
        x_grid = np.zeros(int(config.horizon / config.grid_dt) + 1, np.int64)
    else:
        x_grid = np.zeros(0, np.int64)
    hist = np.zeros(hist_len)

    arr = model.arrival._pack()
    svc = model.service._pack()
    pat = model.patience._pack()
    ring_cap0 = max(128, 2 * (hist_len - model.n))
    heap_cap0 = 2 * (model.n + k0) + 128

    status, out_i, out_f = _engine.run_queue(
        model.n,
        _engine.PERTURBED if config.mode == "perturbed" else _engine.STANDARD,
        arr[0], arr[1], arr[2], arr[3],
        svc[0], svc[1], svc[2], svc[3],
        pat[0], pat[1], pat[2], pat[3],
        float(config.horizon), float(warmup), float(probe_interval),
        init.residuals, init.deadlines, init.first_arrival,
        hist, probe_values, x_grid, float(config.grid_dt),
        ring_cap0, heap_cap0,
        substream(config.seed, replication, "arrivals"),
        substream(config.seed, replication, "services"),
        substream(config.seed, replication, "patiences"),
        substream(config.seed, replication, "probes"),
    )
    if status != _engine.OK:
        raise EventOrderViolation("event clock moved backwards")

    tau = out_f[_engine.F_TAU]
    raw = RawStats(
        model=model,
        x0=init.x0,
        horizon=config.horizon,
        warmup=warmup,
        mode=config.mode,
        arrivals=int(out_i[_engine.I_ARRIVALS]),
        completions=int(out_i[_engine.I_COMPLETIONS]),
        abandons=int(out_i[_engine.I_ABANDONS]),
        arrivals_pw=int(out_i[_engine.I_ARRIVALS_PW]),
        completions_pw=int(out_i[_engine.I_COMPLETIONS_PW]),
        abandons_pw=int(out_i[_engine.I_ABANDONS_PW]),
        phantoms=int(out_i[_engine.I_PHANTOMS]),
        x_end=int(out_i[_engine.I_X_END]),
        area_q=float(out_f[_engine.F_AREA_Q]),
        area_q2=float(out_f[_engine.F_AREA_Q2]),
        below_n_time=float(out_f[_engine.F_BELOW_N]),
        tau_n=float(tau) if tau >= 0.0 else math.inf,
        hist=hist,
        probe_values=probe_values[: int(out_i[_engine.I_PROBES])],
        x_grid=x_grid if config.grid_dt > 0.0 else None,
        grid_dt=config.grid_dt,
    )
    if raw.flow_residual != 0:
        raise AssertionError(f"flow conservation violated by {raw.flow_residual}")
    return raw


@dataclass(frozen=True)
class SimEstimate:
    measure: str
    value: float
    half_width_95: float
    replications: int


@dataclass(frozen=True, eq=False)
class SimResult:
    model: QueueModel
    config: SimConfig
    estimates: list[SimEstimate]
    per_rep: dict[str, np.ndarray]
    histogram: np.ndarray
    approx: GaussianApprox | None
    raw: list[RawStats]

    def estimate(self, measure: str) -> SimEstimate:
        for e in self.estimates:
            if e.measure == measure:
                return e
        raise KeyError(measure)

    def scaled_queue_ks(self) -> float:
        """KS distance between the occupancy law of the customer count
        and its Gaussian approximation."""
        if self.approx is None:
            raise NotOverloaded("Gaussian comparison needs an overloaded model")
        return gaussian_ks(self.histogram, self.approx)


def gaussian_ks(histogram: np.ndarray, approx: GaussianApprox) -> float:
    """Sup gap between the histogram CDF and the Gaussian CDF, the
    latter taken at state + 1/2 (mass of a unit cell around each state)."""
    states = np.arange(len(histogram), dtype=float)
    emp = np.cumsum(histogram)
    emp /= emp[-1]
    sigma = math.sqrt(approx.sigma2_queue)
    gauss = ndtr((states + 0.5 - approx.n - approx.q) / sigma)
    return float(np.max(np.abs(emp - gauss)))


def _t_half_width(values: np.ndarray) -> float:
    r = len(values)
    if r < 2:
        return 0.0
    crit = _stats.t.ppf(0.975, r - 1)
    return float(crit * values.std(ddof=1) / math.sqrt(r))


def aggregate(raws: list[RawStats], model: QueueModel, config: SimConfig) -> tuple[list[SimEstimate], dict[str, np.ndarray]]:
    """Across-replication means with Student-t 95% half-widths."""
    r = len(raws)
    if r < 2:
        raise InsufficientReplications("aggregation needs at least two replications")

    per_rep: dict[str, np.ndarray] = {
        "abd_fraction": np.array([x.abd_fraction for x in raws]),
        "queue_mean": np.array([x.queue_mean for x in raws]),
        "queue_var": np.array([x.queue_var for x in raws]),
        "below_n_fraction": np.array([x.below_n_fraction for x in raws]),
    }
    have_waits = all(len(x.probe_values) >= 2 for x in raws)
    if have_waits:
        per_rep["wait_mean"] = np.array([x.wait_mean for x in raws])
        per_rep["wait_var"] = np.array([x.wait_var for x in raws])

    approx = model.approx()
    if approx is not None:
        for a in config.tail_levels:
            thr = approx.queue_threshold(a)
            per_rep[f"queue_tail_{a:g}"] = np.array(
                [x.queue_exceed_fraction(thr) for x in raws]
            )
        if have_waits:
            for a in config.tail_levels:
                thr = approx.wait_threshold(a)
                per_rep[f"wait_tail_{a:g}"] = np.array(
                    [x.wait_exceed_fraction(thr) for x in raws]
                )

    skip = {"below_n_fraction"}
    estimates = [
        SimEstimate(
            measure=name,
            value=float(vals.mean()),
            half_width_95=_t_half_width(vals),
            replications=r,
        )
        for name, vals in per_rep.items()
        if name not in skip
    ]
    return estimates, per_rep


def simulate(model: QueueModel, config: SimConfig) -> SimResult:
    """Run all replications and aggregate."""
    raws = [run_replication(model, config, rep) for rep in range(config.replications)]
    estimates, per_rep = aggregate(raws, model, config)
    pooled = np.sum([x.hist for x in raws], axis=0)
    histogram = pooled / pooled.sum()
    return SimResult(
        model=model,
        config=config,
        estimates=estimates,
        per_rep=per_rep,
        histogram=histogram,
        approx=model.approx(),
        raw=raws,
    )
