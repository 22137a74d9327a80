"""Command-line entry point: ``pyroscale <subcommand> [--config file.json] [flags]``."""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path

import numpy as np

from . import cluster_stats as cs
from .config import ESTIMATORS, ConfigError, ExperimentConfig, load_config
from .discrete_ff import FFSimulator, percolation_mode
from .limit_lff import query, simulate_lff_0, simulate_lff_beta, simulate_lff_bs, simulate_lff_inf
from .render import render_barrier, render_discrete
from .renewal import RegimeError
from .rng import STATS, substream
from .scaling import classify_regime, compute_scales

SUBCOMMANDS = {
    "simulate-discrete": "discrete",
    "simulate-limit": None,
    "percolation": "percolation",
    "stats": "stats",
    "scales": "scales",
    "classify": "classify",
    "render": "render",
}


def _floats(s: str) -> list[float]:
    return [float(v) for v in s.split(",") if v]


def _query(s: str) -> tuple[float, float]:
    x, t = s.split(",")
    return float(x), float(t)


def _law_param(s: str) -> tuple[str, float]:
    k, _, v = s.partition("=")
    if not _:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {s!r}")
    return k, float(v)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pyroscale", description="Forest-fire scaling limits: "
                                "discrete simulation, limit processes and statistics.")
    sub = p.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON experiment file; flags override it")
        sp.add_argument("--seed", type=int, default=S)
        sp.add_argument("--jobs", type=int, default=S, help="worker processes for replica fan-out")
        sp.add_argument("--out", default=S, help="output file (default: stdout)")
        sp.add_argument("--law", default=S, help="dirac | exponential | weibull | pareto | logtail")
        sp.add_argument("--law-param", type=_law_param, action="append", default=S,
                        metavar="KEY=VALUE", help="law parameter such as T=1, alpha=2, beta=2")
        sp.add_argument("--lambda", dest="lam", type=float, default=S)
        sp.add_argument("--lambdas", type=_floats, default=S, help="comma separated lambda grid")
        sp.add_argument("--A", type=float, default=S, help="box half-width (rescaled)")
        sp.add_argument("--T", type=float, default=S, help="time horizon (rescaled)")
        sp.add_argument("--t", type=float, default=S, help="query / statistic time (rescaled)")
        sp.add_argument("--replicas", type=int, default=S)
        if name == "simulate-discrete":
            sp.add_argument("--match-law", default=S)
            sp.add_argument("--poisson-matches", action="store_true", default=S,
                            help="use exponential (Poisson) match streams")
            sp.add_argument("--no-fires", dest="fires", action="store_false", default=S)
            sp.add_argument("--snapshot", default=S, help="write the final RLE occupancy line here")
            sp.add_argument("--svg", default=S)
        if name == "simulate-limit":
            sp.add_argument("--variant", choices=["inf", "bs", "beta", "zero"], required=True)
            sp.add_argument("--beta", type=float, default=S)
            sp.add_argument("--delta", type=float, default=S)
            sp.add_argument("--query", dest="queries", type=_query, action="append", default=S,
                            metavar="X,T")
            sp.add_argument("--vacancy-out", default=S)
            sp.add_argument("--svg", default=S)
        if name == "percolation":
            sp.add_argument("--n", type=int, default=S, help="sites per unit length")
            sp.add_argument("--m-max", dest="m_max", type=int, default=S)
        if name == "stats":
            sp.add_argument("--estimator", choices=ESTIMATORS, default=S)
            sp.add_argument("--kmax", dest="k_max", type=int, default=S)
            sp.add_argument("--m-max", dest="m_max", type=int, default=S)
            sp.add_argument("--u", type=_floats, default=S)
            sp.add_argument("--l", type=float, default=S)
            sp.add_argument("--t0", type=float, default=S)
            sp.add_argument("--t1", type=float, default=S)
            sp.add_argument("--B", type=_floats, default=S)
            sp.add_argument("--times", type=_floats, default=S)
            sp.add_argument("--beta", type=float, default=S)
            sp.add_argument("--n-sites", dest="n_sites", type=int, default=S)
            sp.add_argument("--n", type=int, default=S)
            sp.add_argument("--match-law", default=S)
            sp.add_argument("--poisson-matches", action="store_true", default=S)
            sp.add_argument("--no-fires", dest="fires", action="store_false", default=S)
        if name == "render":
            sp.add_argument("--trace", default=S)
            sp.add_argument("--kind", dest="trace_kind", choices=["discrete", "barrier"], default=S)
            sp.add_argument("--svg", default=S)
            sp.add_argument("--max-width", type=int, default=S)
            sp.add_argument("--rows", type=int, default=S)
    return p


def _overrides(ns: argparse.Namespace) -> dict:
    d = {k: v for k, v in vars(ns).items() if k not in ("command", "config", "variant")}
    render = {}
    for k in ("svg", "max_width", "rows"):
        if k in d:
            render[k] = d.pop(k)
    if render:
        d["render"] = render
    params = d.pop("law_param", None)
    if params:
        base = {"law": d.pop("law")} if "law" in d else None
        d["_law_params"] = (base, dict(params))
    elif "law" in d:
        d["law"] = {"law": d["law"]}
    if "match_law" in d:
        d["match_law"] = {"law": d["match_law"]}
    if "queries" in d:
        d["queries"] = [list(q) for q in d["queries"]]
    return d


def _resolve(ns: argparse.Namespace, env=None) -> ExperimentConfig:
    mode = SUBCOMMANDS[ns.command] or f"limit-{ns.variant}"
    ov = _overrides(ns)
    law_params = ov.pop("_law_params", None)
    cfg = load_config(ns.config, mode, ov, env)
    if mode != cfg.mode and ns.command != "simulate-limit":
        raise ConfigError(f"config mode {cfg.mode!r} does not match subcommand {ns.command!r}")
    if ns.command == "simulate-limit" and cfg.mode != mode:
        cfg = cfg.model_copy(update={"mode": mode})
    if law_params is not None:
        base, params = law_params
        law = dict(base if base is not None else cfg.law)
        law.update(params)
        cfg = ExperimentConfig.model_validate({**cfg.model_dump(), "law": law})
    return cfg


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# subcommands


def cmd_discrete(cfg: ExperimentConfig) -> int:
    law = cfg.seed_law()
    scales = compute_scales(law, cfg.lam)
    sim = FFSimulator(cfg.A, cfg.lam, law, cfg.match_law_obj(), substream(cfg.seed, 0),
                      fires=cfg.fires, scales=scales, record_trace=True)
    horizon = scales.a_lambda * cfg.T
    sim.run_until(horizon)
    trace = sim.trace_csv()
    _write(cfg.out, trace)
    if cfg.snapshot:
        Path(cfg.snapshot).write_text(sim.snapshot_rle() + "\n")
    if cfg.render.svg:
        Path(cfg.render.svg).write_text(render_discrete(trace, horizon, sim.half, cfg.render.max_width,
                                                        cfg.render.rows, cfg.render.height))
    return 0


def cmd_limit(cfg: ExperimentConfig) -> int:
    rng = substream(cfg.seed, 0)
    variant = cfg.mode.removeprefix("limit-")
    if variant == "inf":
        traj = simulate_lff_inf(cfg.A, cfg.T, rng)
    elif variant == "bs":
        traj = simulate_lff_bs(cfg.A, cfg.T, cfg.seed_law(), rng)
    elif variant == "beta":
        traj = simulate_lff_beta(cfg.A, cfg.T, cfg.beta, cfg.delta, rng)
    else:
        traj = simulate_lff_0(cfg.A, rng, cfg.T)
    _write(cfg.out, traj.to_csv())
    if cfg.queries:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "t", "Z", "D_left", "D_right", "H", "approximate"])
        for x, t in cfg.queries:
            q = query(traj, x, t)
            w.writerow([x, t, "" if q.Z is None else repr(float(q.Z)), repr(float(q.D[0])), repr(float(q.D[1])),
                        "" if q.H is None else repr(float(q.H)), int(q.approximate)])
        sys.stderr.write(buf.getvalue()) if cfg.out is None else sys.stdout.write(buf.getvalue())
    if cfg.vacancy_out and variant == "beta":
        Path(cfg.vacancy_out).write_text(traj.vacancy_csv(cfg.t if cfg.t is not None else cfg.T))
    if cfg.render.svg and variant in ("inf", "bs"):
        Path(cfg.render.svg).write_text(render_barrier(traj.to_csv(), cfg.A, cfg.T,
                                                       min(800, cfg.render.max_width),
                                                       cfg.render.rows, cfg.render.height))
    return 0


def kingman_box(n: int, t: float) -> float:
    """Half-width holding the particle of edge (0, 1) outside a 1e-12 tail."""
    p = t / (2.0 + t)
    half = int(math.ceil(math.log(1e-12) / math.log(p))) + 10 if p > 0 else 10
    return half / n


def run_stats(cfg: ExperimentConfig) -> list[cs.StatsReport]:
    """Reports of the selected estimator."""
    est = cfg.estimator
    if est is None:
        raise ConfigError("stats needs an estimator")
    rng = substream(cfg.seed, STATS)
    law = cfg.seed_law
    N = cfg.replicas
    if est == "qk-bar":
        return [cs.qk_bar_report(law(), cfg.k_max)]
    if est == "cluster-size":
        t = cfg.t if cfg.t is not None else 3.0
        k_max = min(cfg.k_max, 10)
        sizes = cs.discrete_cluster_sizes(law(), cfg.lam, cfg.A, t, N, cfg.seed, cfg.jobs,
                                          cfg.fires, cfg.x, cfg.match_law_obj())
        z = None
        if cfg.fires:
            z = cs.lff_bs_z_samples(law(), cfg.A, t, 10 * N, cfg.seed + 1, cfg.jobs, cfg.x)
        return [cs.cluster_size_histogram(sizes, law(), k_max, z, t,
                                          params={"lambda": cfg.lam, "t": t, "A": cfg.A, "N": N})]
    if est in ("macro-tail", "lff-zero"):
        t = cfg.t if cfg.t is not None else (0.5 if est == "lff-zero" else 2.0)
        if est == "lff-zero" or law().regime.kind == "zero":
            lengths = cs.lff_zero_cells(N, rng, t, cfg.A)
            return [cs.macro_tail(lengths, sorted(set(cfg.B) | {1.0}), exact_zero=True)]
        lengths = np.empty(N)
        kind = law().regime.kind
        for i in range(N):
            if kind == "BS":
                traj = simulate_lff_bs(cfg.A, t, law(), rng, record=False)
            elif kind == "infinity":
                traj = simulate_lff_inf(cfg.A, t, rng, record=False)
            else:
                traj = simulate_lff_beta(cfg.A, t, law().regime.beta, cfg.delta, rng)
            d = query(traj, 0.0, t).D
            lengths[i] = d[1] - d[0]
        return [cs.macro_tail(lengths, cfg.B)]
    if est == "kingman":
        t = cfg.t if cfg.t is not None else 1.0
        sim = percolation_mode(kingman_box(cfg.n, t), cfg.n, rng=rng, replicas=N)
        return [cs.kingman_check(sim, t, cfg.m_max)]
    if est == "gap-count":
        t = cfg.t if cfg.t is not None else 1.0
        return [cs.gap_count_statistic(law(), lam, t, cfg.l, cfg.n_sites, rng)
                for lam in (cfg.lambdas or [cfg.lam])]
    if est == "theta":
        return [cs.theta_check(law(), u, N, rng) for u in cfg.u]
    if est == "theta-lambda":
        return [cs.theta_lambda_convergence(law(), cfg.lambdas or [cfg.lam], cfg.t0, cfg.t1, N, rng)]
    if est == "poisson-matches":
        return [cs.match_poissonization(cfg.lam, cfg.A, cfg.T, N, cfg.seed, cfg.match_law_obj(),
                                        law(), cfg.jobs)]
    if est == "lff-beta-vacancy":
        t = cfg.t if cfg.t is not None else 1.0
        return [cs.lff_beta_vacancy(cfg.beta, t, N, rng)]
    if est == "stationarity":
        return [cs.stationarity(law(), cfg.times, N, rng)]
    raise ConfigError(f"unknown estimator {est!r}")


def _report(cfg: ExperimentConfig, reports: list[cs.StatsReport]) -> int:
    _write(cfg.out, cs.reports_csv(reports))
    failures = [f for r in reports for f in r.failures()]
    for f in failures:
        sys.stderr.write(f"FAIL {f}\n")
    return 1 if failures else 0


def cmd_stats(cfg: ExperimentConfig) -> int:
    return _report(cfg, run_stats(cfg))


def cmd_percolation(cfg: ExperimentConfig) -> int:
    t = cfg.t if cfg.t is not None else 1.0
    sim = percolation_mode(kingman_box(cfg.n, t), cfg.n, rng=substream(cfg.seed, STATS),
                           replicas=cfg.replicas)
    return _report(cfg, [cs.kingman_check(sim, t, cfg.m_max)])


def cmd_scales(cfg: ExperimentConfig) -> int:
    law = cfg.seed_law()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda", "a_lambda", "n_lambda", "m_lambda", "regime"])
    for lam in cfg.lambdas or [cfg.lam]:
        s = compute_scales(law, lam)
        w.writerow([repr(float(lam)), repr(float(s.a_lambda)), s.n_lambda, "" if s.m_lambda is None else s.m_lambda,
                    str(s.regime)])
    _write(cfg.out, buf.getvalue())
    return 0


def cmd_classify(cfg: ExperimentConfig) -> int:
    law = cfg.seed_law()
    regime, diag = classify_regime(law)
    lines = [f"law,{law.name}", f"declared,{law.regime}", f"regime,{regime}"]
    if diag.get("beta_hat") is not None:
        lines.append(f"beta_hat,{diag['beta_hat']!r}")
    _write(cfg.out, "\n".join(lines) + "\n")
    return 0


def cmd_render(cfg: ExperimentConfig) -> int:
    if cfg.trace is None:
        raise ConfigError("render needs --trace")
    text = Path(cfg.trace).read_text()
    if cfg.trace_kind == "discrete":
        svg = render_discrete(text, None, None, cfg.render.max_width, cfg.render.rows, cfg.render.height)
    else:
        svg = render_barrier(text, cfg.A, cfg.T, min(800, cfg.render.max_width), cfg.render.rows,
                             cfg.render.height)
    _write(cfg.render.svg or cfg.out, svg)
    return 0


HANDLERS = {
    "discrete": cmd_discrete, "percolation": cmd_percolation, "stats": cmd_stats,
    "scales": cmd_scales, "classify": cmd_classify, "render": cmd_render,
}


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = _resolve(ns)
        handler = cmd_limit if cfg.mode.startswith("limit-") else HANDLERS[cfg.mode]
        return handler(cfg)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except (RegimeError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
