"""Command line front end.

Every subcommand reads an INI config (see ``config``), writes CSV
artifacts either to stdout or, with ``--out DIR``, to files, and exits 0
only when its validations pass: 1 flags a failed check, 2 a bad config
or an internal error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import config as cfgmod
from .ctmc import compare_to_gaussian, stationary_distribution
from .experiments import (
    MEASURES,
    SIM_BUDGETS,
    TAIL_MEASURES,
    _csv_text,
    approx_value,
    run_plan,
    system_label,
)
from .fclt import brownian_tests, simulate_superposition
from .ou import OUParams, simulate_ou, ys_law
from .des import simulate
from .streams import substream


def _write_artifacts(artifacts: dict[str, str], out: str) -> None:
    from pathlib import Path

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in sorted(artifacts):
        (out_dir / name).write_text(artifacts[name], encoding="utf-8")
        print(out_dir / name)


def _cmd_approx(args) -> int:
    cp = cfgmod.read_config(args.config)
    model = cfgmod.model_from_config(cp)
    approx = model.approx()
    if approx is None:
        print("error: closed forms need an overloaded system (rho > 1)", file=sys.stderr)
        return 2
    measures = MEASURES + TAIL_MEASURES
    header = ["system", "n", "rho", "gamma"] + list(measures)
    row = [system_label(model.service, model.n), model.n, model.rho, model.gamma]
    row += [approx_value(approx, m) for m in measures]
    text = _csv_text(header, [row])
    if args.out:
        _write_artifacts({"approx.csv": text}, args.out)
    else:
        print(text, end="")
    return 0


def _cmd_sim(args) -> int:
    cp = cfgmod.read_config(args.config)
    model = cfgmod.model_from_config(cp)
    budget = None
    if args.budget:
        b = SIM_BUDGETS[args.budget]
        budget = (b.replications, b.horizon)
    sim = cfgmod.sim_from_config(cp, seed=args.seed, budget=budget)
    result = simulate(model, sim)
    results = _csv_text(
        ["measure", "value", "half_width_95", "replications"],
        [[e.measure, e.value, e.half_width_95, e.replications] for e in result.estimates],
    )
    if args.out:
        artifacts = {"results.csv": results}
        artifacts["histogram.csv"] = _csv_text(
            ["state", "probability"],
            [[i, p] for i, p in enumerate(result.histogram)],
        )
        _write_artifacts(artifacts, args.out)
    else:
        print(results, end="")
    return 0


def _cmd_exact(args) -> int:
    cp = cfgmod.read_config(args.config)
    model = cfgmod.model_from_config(cp)
    dist = stationary_distribution(model.n, model.lam, model.service, model.gamma)
    pmf = _csv_text(
        ["state", "probability"],
        [[i, p] for i, p in enumerate(dist.level_pmf)],
    )
    lines = [
        f"states: {len(dist.level_pmf)}  top level mass: {dist.top_level_mass:.3e}",
        f"mean {dist.mean:.6g}  var {dist.var:.6g}  "
        f"queue mean {dist.queue_mean:.6g}  queue var {dist.queue_var:.6g}  "
        f"abandon fraction {dist.abandon_fraction:.6g}",
    ]
    approx = model.approx()
    if approx is not None:
        comp = compare_to_gaussian(dist, approx)
        lines.append(
            f"gaussian comparison: tv {comp.tv_distance:.4f}  "
            f"mean gap {comp.mean_gap:+.4g}  var gap {comp.var_gap:+.4g}"
        )
    report = "\n".join(lines) + "\n"
    if args.out:
        _write_artifacts({"exact_pmf.csv": pmf, "exact_report.txt": report}, args.out)
    else:
        print(pmf, end="")
        print(report, end="", file=sys.stderr)
    if dist.top_level_mass >= 1e-8:
        print("error: truncation level too small for this system", file=sys.stderr)
        return 1
    return 0


def _cmd_ou(args) -> int:
    cp = cfgmod.read_config(args.config) if args.config else None
    if cp is not None and cp.has_section("model"):
        model = cfgmod.model_from_config(cp)
        params = OUParams.from_queue(
            model.mu, model.rho, model.arrival.scv, model.service.scv
        )
    else:
        params = OUParams.from_queue(1.0, 1.2, 1.0, 1.0)
    spec = cfgmod.ou_from_config(cp, seed=args.seed) if cp is not None else cfgmod.OuSpec(
        seed=args.seed if args.seed is not None else 0
    )
    times = np.arange(0.0, spec.t_max + spec.dt / 2.0, spec.dt)
    paths = simulate_ou(params, times, substream(spec.seed, 0, "ou"), spec.paths)
    header = ["t", "x"] if spec.paths == 1 else ["t"] + [f"x{k + 1}" for k in range(spec.paths)]
    rows = [[times[i]] + [paths[k, i] for k in range(spec.paths)] for i in range(len(times))]
    text = _csv_text(header, rows)
    if args.out:
        _write_artifacts({"ou_path.csv": text}, args.out)
    else:
        print(text, end="")
    return 0


def _cmd_ys(args) -> int:
    cp = cfgmod.read_config(args.config) if args.config else None
    spec = cfgmod.ys_from_config(cp)
    rows = []
    for s in spec.s_values:
        for ca2 in spec.ca2_values:
            for cs2 in spec.cs2_values:
                law = ys_law(s, spec.mu, spec.rho, ca2, cs2, spec.var_x0)
                rows.append([
                    s, ca2, cs2, law.variance,
                    law.initial, law.arrival, law.service, law.abandonment,
                ])
    text = _csv_text(
        ["s", "ca2", "cs2", "variance", "initial", "arrival", "service", "abandonment"],
        rows,
    )
    worst = 0.0
    for ca2 in spec.ca2_values:
        for cs2 in spec.cs2_values:
            law = ys_law(spec.s_check, spec.mu, spec.rho, ca2, cs2, spec.var_x0)
            worst = max(worst, abs(law.variance - law.limit_variance) / law.limit_variance)
    verdict = (
        f"max relative gap to limit at s={spec.s_check:g}: {worst:.3e} "
        f"(tolerance {spec.tol:g})"
    )
    if args.out:
        _write_artifacts({"ys_law.csv": text, "ys_law_report.txt": verdict + "\n"}, args.out)
    else:
        print(text, end="")
        print(verdict, file=sys.stderr)
    return 0 if worst <= spec.tol else 1


def _cmd_fclt(args) -> int:
    cp = cfgmod.read_config(args.config) if args.config else None
    cfg = cfgmod.fclt_from_config(cp, seed=args.seed)
    sample = simulate_superposition(cfg)
    report = brownian_tests(sample)
    csv_text = _csv_text(
        ["t", "mean", "var", "se"],
        [
            [report.t_grid[i], report.means[i], report.variances[i], report.variance_se[i]]
            for i in range(len(report.t_grid))
        ],
    )
    slope_ok = abs(report.var_slope - report.target_slope) <= 0.05 * report.target_slope
    corr_ok = abs(report.increment_corr) < 0.05
    ad_ok = float(min(report.ad_pvalues)) > 0.005
    lines = [
        f"streams {cfg.n_streams}  gamma {cfg.gamma:g}  law {cfg.event_law.family}  "
        f"replications {cfg.replications}",
        f"variance slope {report.var_slope:.4f} vs target {report.target_slope:.4f} "
        f"({'ok' if slope_ok else 'off'})",
        f"increment correlation {report.increment_corr:+.4f} "
        f"(perm p={report.increment_corr_pvalue:.3f}, {'ok' if corr_ok else 'off'})",
        f"marginal normality min AD p {float(min(report.ad_pvalues)):.3f} "
        f"({'ok' if ad_ok else 'off'})",
    ]
    text_report = "\n".join(lines) + "\n"
    if args.out:
        _write_artifacts({"fclt_report.csv": csv_text, "fclt_report.txt": text_report}, args.out)
    else:
        print(csv_text, end="")
        print(text_report, end="", file=sys.stderr)
    return 0 if (slope_ok and corr_ok and ad_ok) else 1


def _cmd_reproduce(args) -> int:
    cp = cfgmod.read_config(args.config)
    plan = cfgmod.plan_from_config(cp, seed=args.seed, budget=args.budget)
    out = args.out or plan.out or "abandonq-out"
    result = run_plan(plan, out_dir=out, workers=args.workers)
    if result.validation is not None:
        print(result.validation.summary())
    print(f"wrote {len(result.artifacts)} artifacts to {out} in {result.elapsed:.1f}s")
    return 0 if result.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="abandonq",
        description="Diffusion formulas, simulation and exact analysis "
        "for overloaded many-server queues with abandonment.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text, config_required=True, seed=False, budget=False, workers=False):
        p = sub.add_parser(name, help=help_text)
        if config_required:
            p.add_argument("config", help="path to an INI config file")
        else:
            p.add_argument("config", nargs="?", default=None,
                           help="optional path to an INI config file")
        if seed:
            p.add_argument("--seed", type=int, default=None, help="override the config seed")
        if budget:
            p.add_argument("--budget", choices=list(SIM_BUDGETS),
                           help="named replication budget")
        if workers:
            p.add_argument("--workers", type=int, default=None,
                           help="grid points simulated in parallel")
        p.add_argument("--out", default=None, help="directory for artifacts (default: stdout)")
        p.set_defaults(func=fn)
        return p

    add("approx", _cmd_approx, "closed-form performance measures for one model")
    add("sim", _cmd_sim, "discrete-event simulation of one model",
        seed=True, budget=True)
    add("exact", _cmd_exact, "exact stationary distribution for Markov or "
        "two-phase hyperexponential service")
    add("ou", _cmd_ou, "sample paths of the limiting diffusion",
        config_required=False, seed=True)
    add("ys-law", _cmd_ys, "drain-time variance decomposition against its limit",
        config_required=False)
    add("fclt", _cmd_fclt, "scaling checks for superposed stationary renewal streams",
        config_required=False, seed=True)
    add("reproduce", _cmd_reproduce, "run an experiment plan and validate its artifacts",
        seed=True, budget=True, workers=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, AssertionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
