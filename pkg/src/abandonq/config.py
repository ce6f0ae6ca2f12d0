"""INI-style config files for models, simulation runs, and experiment plans.

One file can hold several sections; each command reads the sections it
needs and ignores the rest.

Model schema::

    [model]
    n = 100

    [model.arrival]
    family = exponential
    mean = 0.008333333333333333

    [model.service]
    family = lognormal
    mean = 1.0
    scv = 1.52

    [model.patience]
    family = exponential
    mean = 10.0

Distribution sections take ``family`` plus either the canonical
``mean``/``scv`` pair or the family-native parameters (``value``,
``rate``, ``mu_log``/``sigma_log``, ``p``/``means``).

Run schema (all fields optional except ``horizon``)::

    [sim]
    horizon = 1e5
    replications = 10
    seed = 0
    mode = standard
    # warmup, probe_interval, grid_dt, hist_len, tail_levels

Plan schema for the ``reproduce`` command::

    [plan]
    kind = TableMeasures
    n = 100
    gammas = 1.0, 5.0, 10
    services = deterministic, erlang2, lognormal:1.52
    # rho, mu, seed, budget, small_n, s_values, t_grid, out

Smaller sections ([ou], [fclt], [ys]) configure the matching commands.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass

from .des import MODES, QueueModel, SimConfig
from .distributions import FAMILIES, Dist, make_dist
from .errors import InvalidParams
from .experiments import BUDGET_NAMES, PLAN_KINDS, ExperimentPlan, default_services
from .fclt import SuperpositionConfig

_DIST_SCALAR_KEYS = ("mean", "scv", "value", "rate", "mu_log", "sigma_log", "p")


def read_config(source: str) -> configparser.ConfigParser:
    """Parse a config file path, or literal config text if it contains
    a newline."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        if "\n" in source:
            cp.read_string(source)
        else:
            with open(source, "r", encoding="utf-8") as fh:
                cp.read_file(fh)
    except OSError as exc:
        raise InvalidParams(f"cannot read config {source!r}: {exc}") from exc
    except configparser.Error as exc:
        raise InvalidParams(f"malformed config: {exc}") from exc
    return cp


def _floats(text: str) -> tuple[float, ...]:
    items = [p.strip() for p in text.replace(";", ",").split(",")]
    try:
        return tuple(float(p) for p in items if p)
    except ValueError as exc:
        raise InvalidParams(f"expected a comma-separated list of numbers, got {text!r}") from exc


def _ints(text: str) -> tuple[int, ...]:
    vals = _floats(text)
    out = tuple(int(v) for v in vals)
    if any(o != v for o, v in zip(out, vals)):
        raise InvalidParams(f"expected integers, got {text!r}")
    return out


def dist_from_section(cp: configparser.ConfigParser, section: str) -> Dist:
    if not cp.has_section(section):
        raise InvalidParams(f"missing [{section}] section")
    raw = dict(cp.items(section))
    family = raw.pop("family", None)
    if family is None:
        raise InvalidParams(f"[{section}] needs a family")
    params: dict = {}
    for key, text in raw.items():
        if key == "means":
            params["means"] = _floats(text)
        elif key in _DIST_SCALAR_KEYS:
            try:
                params[key] = float(text)
            except ValueError as exc:
                raise InvalidParams(f"[{section}] {key} = {text!r} is not a number") from exc
        else:
            raise InvalidParams(f"[{section}] has unknown key {key!r}")
    return make_dist(family, **params)


def model_from_config(cp: configparser.ConfigParser) -> QueueModel:
    if not cp.has_section("model"):
        raise InvalidParams("missing [model] section")
    try:
        n = cp.getint("model", "n")
    except (configparser.NoOptionError, ValueError) as exc:
        raise InvalidParams("[model] needs an integer n") from exc
    return QueueModel(
        n=n,
        arrival=dist_from_section(cp, "model.arrival"),
        service=dist_from_section(cp, "model.service"),
        patience=dist_from_section(cp, "model.patience"),
    )


def sim_from_config(
    cp: configparser.ConfigParser,
    seed: int | None = None,
    budget: tuple[int, float] | None = None,
) -> SimConfig:
    """Build a SimConfig from [sim]; ``seed`` overrides the file, and
    ``budget`` (replications, horizon) overrides both fields at once."""
    if not cp.has_section("sim"):
        raise InvalidParams("missing [sim] section")
    sec = cp["sim"]
    try:
        horizon = sec.getfloat("horizon")
    except (ValueError, TypeError) as exc:
        raise InvalidParams("[sim] horizon must be a number") from exc
    if horizon is None:
        raise InvalidParams("[sim] needs a horizon")
    replications = sec.getint("replications", fallback=10)
    if budget is not None:
        replications, horizon = budget
    mode = sec.get("mode", fallback="standard").strip()
    if mode not in MODES:
        raise InvalidParams(f"[sim] mode must be one of {MODES}")
    kwargs: dict = {}
    if sec.get("warmup", fallback=None) is not None:
        kwargs["warmup"] = sec.getfloat("warmup")
    if sec.get("probe_interval", fallback=None) is not None:
        kwargs["probe_interval"] = sec.getfloat("probe_interval")
    if sec.get("grid_dt", fallback=None) is not None:
        kwargs["grid_dt"] = sec.getfloat("grid_dt")
    if sec.get("hist_len", fallback=None) is not None:
        kwargs["hist_len"] = sec.getint("hist_len")
    if sec.get("tail_levels", fallback=None) is not None:
        kwargs["tail_levels"] = _floats(sec.get("tail_levels"))
    return SimConfig(
        horizon=horizon,
        replications=replications,
        seed=sec.getint("seed", fallback=0) if seed is None else seed,
        mode=mode,
        **kwargs,
    )


def service_entry(text: str, mean: float = 1.0) -> Dist:
    """Parse one grid entry, ``family`` or ``family:scv``."""
    name, _, scv = text.strip().partition(":")
    name = name.strip().lower()
    if name not in FAMILIES:
        raise InvalidParams(f"unknown service family {name!r}; expected one of {FAMILIES}")
    if scv:
        try:
            return make_dist(name, mean=mean, scv=float(scv))
        except ValueError as exc:
            raise InvalidParams(f"bad scv in service entry {text!r}") from exc
    if name in ("lognormal", "hyperexp2"):
        raise InvalidParams(f"{name} needs an scv, like {name}:1.52")
    return make_dist(name, mean=mean)


def plan_from_config(
    cp: configparser.ConfigParser,
    seed: int | None = None,
    budget: str | None = None,
) -> ExperimentPlan:
    if not cp.has_section("plan"):
        raise InvalidParams("missing [plan] section")
    sec = cp["plan"]
    kind = sec.get("kind", fallback=None)
    if kind is None:
        raise InvalidParams("[plan] needs a kind")
    kind = kind.strip()
    if kind not in PLAN_KINDS:
        raise InvalidParams(f"[plan] kind must be one of {PLAN_KINDS}, got {kind!r}")
    kwargs: dict = {"kind": kind}
    mu = sec.getfloat("mu", fallback=1.0)
    if sec.get("n", fallback=None) is not None:
        kwargs["n"] = _ints(sec.get("n"))
    if sec.get("gammas", fallback=None) is not None:
        kwargs["gammas"] = _floats(sec.get("gammas"))
    if sec.get("services", fallback=None) is not None:
        entries = [p for p in (q.strip() for q in sec.get("services").split(",")) if p]
        kwargs["services"] = tuple(service_entry(e, mean=1.0 / mu) for e in entries)
    else:
        kwargs["services"] = default_services(mu)
    if cp.has_section("plan.service"):
        kwargs["figure_service"] = dist_from_section(cp, "plan.service")
    kwargs["rho"] = sec.getfloat("rho", fallback=1.2)
    kwargs["mu"] = mu
    kwargs["seed"] = sec.getint("seed", fallback=0) if seed is None else seed
    bud = sec.get("budget", fallback="desk").strip() if budget is None else budget
    if bud not in BUDGET_NAMES:
        raise InvalidParams(f"budget must be one of {BUDGET_NAMES}, got {bud!r}")
    kwargs["budget"] = bud
    if sec.get("small_n", fallback=None) is not None:
        kwargs["small_n"] = sec.getint("small_n")
    if sec.get("s_values", fallback=None) is not None:
        kwargs["s_values"] = _floats(sec.get("s_values"))
    if sec.get("t_grid", fallback=None) is not None:
        kwargs["t_grid"] = _floats(sec.get("t_grid"))
    if sec.get("out", fallback=None) is not None:
        kwargs["out"] = sec.get("out").strip()
    return ExperimentPlan(**kwargs)


@dataclass(frozen=True)
class OuSpec:
    """Path-sampling layout for the diffusion subcommand."""

    t_max: float = 10.0
    dt: float = 0.01
    paths: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.t_max <= 0.0 or self.dt <= 0.0 or self.dt > self.t_max:
            raise InvalidParams("need 0 < dt <= t_max")
        if self.paths < 1:
            raise InvalidParams("need at least one path")


def ou_from_config(cp: configparser.ConfigParser, seed: int | None = None) -> OuSpec:
    kwargs: dict = {}
    if cp.has_section("ou"):
        sec = cp["ou"]
        if sec.get("t_max", fallback=None) is not None:
            kwargs["t_max"] = sec.getfloat("t_max")
        if sec.get("dt", fallback=None) is not None:
            kwargs["dt"] = sec.getfloat("dt")
        if sec.get("paths", fallback=None) is not None:
            kwargs["paths"] = sec.getint("paths")
        kwargs["seed"] = sec.getint("seed", fallback=0)
    if seed is not None:
        kwargs["seed"] = seed
    return OuSpec(**kwargs)


def fclt_from_config(cp: configparser.ConfigParser | None, seed: int | None = None) -> SuperpositionConfig:
    """[fclt] section, with the two-hundred-stream Erlang cell as default."""
    kwargs: dict = {
        "n_streams": 200,
        "gamma": 50.0,
        "event_law": make_dist("erlang2", mean=1.0),
        "replications": 2000,
        "seed": 0,
    }
    if cp is not None and cp.has_section("fclt"):
        sec = cp["fclt"]
        if sec.get("n_streams", fallback=None) is not None:
            kwargs["n_streams"] = sec.getint("n_streams")
        if sec.get("gamma", fallback=None) is not None:
            kwargs["gamma"] = sec.getfloat("gamma")
        if sec.get("law", fallback=None) is not None:
            kwargs["event_law"] = service_entry(sec.get("law"), mean=sec.getfloat("mean", fallback=1.0))
        if sec.get("replications", fallback=None) is not None:
            kwargs["replications"] = sec.getint("replications")
        if sec.get("t_grid", fallback=None) is not None:
            kwargs["t_grid"] = _floats(sec.get("t_grid"))
        if sec.get("equilibrium", fallback=None) is not None:
            kwargs["equilibrium_start"] = sec.getboolean("equilibrium")
        kwargs["seed"] = sec.getint("seed", fallback=0)
    if seed is not None:
        kwargs["seed"] = seed
    return SuperpositionConfig(**kwargs)


@dataclass(frozen=True)
class YsSpec:
    """Grid for the drain-time variance report."""

    s_values: tuple[float, ...] = (1.0, 2.0, 5.0, 10.0, 20.0)
    ca2_values: tuple[float, ...] = (0.5, 1.0, 2.0)
    cs2_values: tuple[float, ...] = (0.5, 1.0, 2.0)
    mu: float = 1.0
    rho: float = 1.2
    var_x0: float = 0.0
    s_check: float = 20.0
    tol: float = 1e-6

    def __post_init__(self):
        if not self.s_values or min(self.s_values) < 0.0:
            raise InvalidParams("s_values must be nonnegative")
        if self.rho <= 1.0:
            raise InvalidParams("rho must exceed 1")


def ys_from_config(cp: configparser.ConfigParser | None) -> YsSpec:
    kwargs: dict = {}
    if cp is not None and cp.has_section("ys"):
        sec = cp["ys"]
        for key in ("s_values", "ca2_values", "cs2_values"):
            if sec.get(key, fallback=None) is not None:
                kwargs[key] = _floats(sec.get(key))
        for key in ("mu", "rho", "var_x0", "s_check", "tol"):
            if sec.get(key, fallback=None) is not None:
                kwargs[key] = sec.getfloat(key)
    return YsSpec(**kwargs)


def model_to_text(model: QueueModel, sim: SimConfig | None = None) -> str:
    """Render a model (and optionally a run layout) back to config text."""
    lines = ["[model]", f"n = {model.n}"]
    for name, dist in (
        ("arrival", model.arrival),
        ("service", model.service),
        ("patience", model.patience),
    ):
        lines.append("")
        lines.append(f"[model.{name}]")
        for key, val in dist.to_params().items():
            if key == "p" and isinstance(val, tuple):
                val = val[0]
            if isinstance(val, tuple):
                val = ", ".join(f"{v:.17g}" for v in val)
            elif isinstance(val, float):
                val = f"{val:.17g}"
            lines.append(f"{key} = {val}")
    if sim is not None:
        lines.extend([
            "",
            "[sim]",
            f"horizon = {sim.horizon:.17g}",
            f"replications = {sim.replications}",
            f"seed = {sim.seed}",
            f"mode = {sim.mode}",
        ])
        if sim.warmup is not None:
            lines.append(f"warmup = {sim.warmup:.17g}")
        if sim.probe_interval is not None:
            lines.append(f"probe_interval = {sim.probe_interval:.17g}")
    return "\n".join(lines) + "\n"
