"""Verification stages and the end-to-end pipeline.

Every CLI command runs one of these stages; ``pipeline_run`` runs a list of them
and writes one report per stage plus a manifest.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import gibbs
from .graph import BudgetExceeded as PathBudgetExceeded
from .graph import Graph, path_census, t_x_sum, theta_sum
from .potentials import (ModelParams, admissibility, capacity_C, check_coercivity,
                         check_envelope, gamma_const, young_constant)
from .quadrature import QuadratureError
from .repulsive import (HubPlan, PlanError, RepulsionProfile, certify, corrupt_positions,
                        growth_constant_a, place_hubs, realize, verify_growth, verify_klm)
from .reports import RunManifest, write_json

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CERTIFICATION = 3
EXIT_INEQUALITY = 4
EXIT_BUDGET = 5


class ConfigError(ValueError):
    """Missing file, unknown stage or malformed option."""


@dataclass
class Context:
    graph: Graph
    model: ModelParams | None = None
    profile: RepulsionProfile | None = None
    theta: float = 1.0
    tolerance: float = 1e-6
    budget: int = 10**7


@dataclass
class StageResult:
    name: str
    report: dict
    code: int = EXIT_OK
    tables: dict = field(default_factory=dict)    # file suffix -> CSV text


def _need(ctx, attr, stage):
    value = getattr(ctx, attr)
    if value is None:
        raise ConfigError(f"stage {stage!r} needs a {attr}")
    return value


def parse_volume(spec, g: Graph) -> np.ndarray:
    """'0..9' (inclusive), '1,4,7', 'bfs:25' (first 25 vertices by distance), or a list."""
    if isinstance(spec, (list, tuple)):
        out = [int(v) for v in spec]
    elif isinstance(spec, str) and spec.startswith("bfs:"):
        return gibbs.bfs_prefix(g, int(spec[4:]))
    else:
        out = []
        for part in str(spec).split(","):
            part = part.strip()
            if ".." in part:
                a, b = part.split("..")
                out.extend(range(int(a), int(b) + 1))
            elif part:
                out.append(int(part))
    if not out or min(out) < 0 or max(out) >= g.num_vertices:
        raise ConfigError(f"bad volume {spec!r} for a graph on {g.num_vertices} vertices")
    return np.unique(np.asarray(out, dtype=np.int64))


def make_boundary(g: Graph, opts: dict | None, seed: int) -> np.ndarray:
    opts = dict(opts or {"kind": "decay"})
    return gibbs.tempered_boundary(g, opts.get("kind", "decay"), float(opts.get("scale", 1.0)),
                                   float(opts.get("tau", 0.5)), int(opts.get("seed", seed)))


# -- stages ---------------------------------------------------------------------

def stage_certify(ctx: Context, opts: dict, seed: int) -> StageResult:
    rep = certify(ctx.graph, _need(ctx, "profile", "certify"))
    return StageResult("certify", rep.to_dict(), EXIT_OK if rep.passed else EXIT_CERTIFICATION)


def stage_summability(ctx: Context, opts: dict, seed: int) -> StageResult:
    g = ctx.graph
    rows, tables = [], {}
    for alpha in opts.get("alpha", [1.0]):
        for th in opts.get("theta", [ctx.theta]):
            ledger = theta_sum(g, float(alpha), float(th))
            rows.append({"alpha": float(alpha), "theta": float(th), "Theta": ledger.total,
                         "T_root": t_x_sum(g, float(alpha), float(th), g.root),
                         "increments": ledger.increments, "tail_rate": ledger.tail_rate()})
    report = {"root": g.root, "sums": rows}
    code = EXIT_OK
    n = opts.get("census_length")
    if n is not None:
        try:
            c = path_census(g, g.root, int(n), ctx.budget)
            report["census"] = {"counts": c.counts, "max_degree_product": c.max_degree_product,
                                "expansions": c.expansions}
        except PathBudgetExceeded as exc:
            report["census"] = {"error": str(exc), "expansions": exc.expansions}
            code = EXIT_BUDGET
    return StageResult("summability", report, code, tables)


def stage_constants(ctx: Context, opts: dict, seed: int) -> StageResult:
    model = _need(ctx, "model", "constants")
    beta, lam, p = model.beta, model.lam, model.p_eff
    env = check_envelope(model.W)
    coer = check_coercivity(model.V)
    adm = admissibility(model, ctx.graph)
    report = {"model": model.to_dict(), "p0": model.p0,
              "envelope_check": env.to_dict(), "coercivity_check": coer.to_dict(),
              "admissibility": adm.to_dict()}
    if p > model.W.r and beta > 0:
        report["young_constant"] = young_constant(model.W, beta, p)
        report["gamma"] = gamma_const(beta, p, model.W)
    if p < model.V.q:
        cap = capacity_C(beta, lam, p, model.V)
        report["C"] = {"value": cap.value, "rel_error": cap.rel_error}
    if ctx.profile is not None:
        a = growth_constant_a(ctx.profile, ctx.theta)
        report["growth_constant"] = {"a": a.a, "sigma": a.sigma, "k_star": a.k_star,
                                     "tail": a.tail, "tail_error": a.tail_error}
    code = EXIT_OK
    if not (env.passed and coer.passed):
        code = EXIT_INEQUALITY
    elif not adm.passed:
        code = EXIT_CONFIG
    return StageResult("constants", report, code)


def stage_growth(ctx: Context, opts: dict, seed: int) -> StageResult:
    profile = _need(ctx, "profile", "growth")
    rep = verify_growth(ctx.graph, profile, float(opts.get("theta", ctx.theta)))
    klm = [verify_klm(ctx.graph, profile, float(a), float(t))
           for a in opts.get("klm_alpha", [0.5, 1.0, 2.0])
           for t in opts.get("klm_theta", [0.5, 1.0])]
    ok = rep.passed and all(k.passed for k in klm)
    report = {"growth": rep.to_dict(), "klm": [k.to_dict() for k in klm], "passed": ok}
    return StageResult("growth", report, EXIT_OK if ok else EXIT_INEQUALITY)


def stage_lemma1(ctx: Context, opts: dict, seed: int) -> StageResult:
    g = ctx.graph
    model = _need(ctx, "model", "lemma1")
    rng = np.random.default_rng(seed)
    n = int(opts.get("tuples", 20))
    checks = []
    for i in range(n):
        x = int(rng.integers(g.num_vertices))
        kind = ("decay", "noise")[i % 2]
        xi = gibbs.tempered_boundary(g, kind, float(rng.uniform(0.1, 2.0)),
                                     float(rng.uniform(0.1, 1.0)), int(rng.integers(2**31)))
        beta, lam, p = gibbs.random_admissible(model, rng)
        checks.append(gibbs.verify_lemma1(beta, lam, p, g, model, x, xi,
                                          tolerance=ctx.tolerance))
    ok = all(c.passed for c in checks)
    report = {"tuples": [c.to_dict() for c in checks], "violations": sum(not c.passed for c in checks),
              "min_log_slack": min((c.log_slack for c in checks), default=None), "passed": ok}
    return StageResult("lemma1", report, EXIT_OK if ok else EXIT_INEQUALITY)


def default_test_functions(vol, outside):
    """Bounded continuous library: tanh of linear forms and Gaussian bumps."""
    vol = [int(v) for v in vol]
    out = [gibbs.TanhLinear(tuple((v, 1.0) for v in vol)),
           gibbs.TanhLinear(((vol[0], 0.7),) + tuple((int(v), -0.4) for v in outside[:1]), 0.2),
           gibbs.GaussianBump(tuple((v, 0.8, 0.3) for v in vol))]
    return out


def stage_dlr(ctx: Context, opts: dict, seed: int) -> StageResult:
    g = ctx.graph
    model = _need(ctx, "model", "dlr")
    cases = opts.get("cases") or [{"volume": [g.root, int(g.neighbors(g.root)[0])],
                                    "delta": [g.root]}]
    reports, ok = [], True
    for k, case in enumerate(cases):
        vol = parse_volume(case["volume"], g)
        delta = parse_volume(case["delta"], g)
        xi = make_boundary(g, case.get("boundary"), seed + k)
        outside = [int(v) for v in np.setdiff1d(np.arange(g.num_vertices), vol)]
        rep = gibbs.dlr_consistency_check(g, model, vol, delta, xi,
                                          default_test_functions(vol, outside),
                                          tolerance=ctx.tolerance)
        ok &= rep.passed
        reports.append(rep.to_dict())
    return StageResult("dlr", {"cases": reports, "passed": ok},
                       EXIT_OK if ok else EXIT_INEQUALITY)


def stage_sample(ctx: Context, opts: dict, seed: int) -> StageResult:
    g = ctx.graph
    model = _need(ctx, "model", "sample")
    vol = parse_volume(opts.get("volume", "bfs:2"), g)
    xi = make_boundary(g, opts.get("boundary"), seed)
    state = gibbs.SamplerState(seed, opts.get("scan", "systematic"),
                               float(opts.get("burn_in", 0.1)), int(opts.get("batches", 50)))
    stats = gibbs.mcmc_run(g, model, vol, xi, int(opts.get("sweeps", 2000)), state)
    return StageResult("sample", stats.to_dict())


def stage_monitor(ctx: Context, opts: dict, seed: int) -> StageResult:
    g = ctx.graph
    model = _need(ctx, "model", "monitor")
    sizes = [int(s) for s in opts.get("sizes", [2, 4, 8])]
    vols = [gibbs.bfs_prefix(g, s) for s in sizes]
    xi = make_boundary(g, opts.get("boundary"), seed)
    state = gibbs.SamplerState(seed, opts.get("scan", "systematic"),
                               float(opts.get("burn_in", 0.1)), int(opts.get("batches", 50)))
    ncut = opts.get("ncut")
    curve = gibbs.exp_norm_monitor(g, model, vols, xi, int(opts.get("sweeps", 1000)), state,
                                   ncut=None if ncut is None else float(ncut))
    max_ratio = float(opts.get("max_ratio", 1.5))
    max_z = float(opts.get("max_trend_z", 3.0))
    report = curve.to_dict()
    report["passed"] = curve.ratio < max_ratio and curve.trend_z() < max_z
    rows = ["volume_size,estimate,stderr"] + [
        f"{s},{e!r},{se!r}" for s, e, se in zip(curve.sizes, curve.estimates, curve.stderrs)]
    return StageResult("monitor", report, EXIT_OK if report["passed"] else EXIT_INEQUALITY,
                       {"csv": "\n".join(rows) + "\n"})


STAGES = {
    "certify": stage_certify,
    "summability": stage_summability,
    "constants": stage_constants,
    "growth": stage_growth,
    "lemma1": stage_lemma1,
    "dlr": stage_dlr,
    "sample": stage_sample,
    "monitor": stage_monitor,
}


def run_stage(name: str, ctx: Context, opts: dict, seed: int) -> StageResult:
    try:
        fn = STAGES[name]
    except KeyError:
        raise ConfigError(f"unknown stage {name!r}; known: {sorted(STAGES)}") from None
    try:
        return fn(ctx, opts, seed)
    except (PathBudgetExceeded, gibbs.BudgetExceeded) as exc:
        return StageResult(name, {"error": str(exc)}, EXIT_BUDGET)
    except QuadratureError as exc:
        return StageResult(name, {"error": str(exc)}, EXIT_INEQUALITY)
    except (ValueError, KeyError, TypeError) as exc:
        return StageResult(name, {"error": f"{type(exc).__name__}: {exc}"}, EXIT_CONFIG)


# -- configuration ----------------------------------------------------------------

def _load_json(path: Path):
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"missing file {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def build_graph(spec, base: Path, seed: int, inputs: list) -> Graph:
    if isinstance(spec, str):
        path = base / spec
        inputs.append(path)
        try:
            return Graph.from_dict(_load_json(path))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if isinstance(spec, dict) and "generate" in spec:
        gen = spec["generate"]
        try:
            profile = RepulsionProfile.from_dict(gen["profile"])
            plan = HubPlan(tuple(gen["degrees"]), gen.get("backbone", "ray"), int(gen["radius"]))
            pos = place_hubs(profile, plan, int(gen.get("seed", seed)))
            if gen.get("corrupt"):
                pos, _ = corrupt_positions(profile, plan, pos, int(gen.get("seed", seed)))
            return realize(plan, pos)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"graph generation: {exc}") from None
    if isinstance(spec, dict) and "edges" in spec:
        return Graph.from_dict(spec)
    raise ConfigError("graph must be a file name, an edge list or a {'generate': ...} block")


def load_config(path, seed=None, tolerance=None, budget=None):
    path = Path(path)
    cfg = _load_json(path)
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    base = path.parent
    inputs = [path]
    seed = int(cfg.get("seed", 0) if seed is None else seed)
    if "graph" not in cfg:
        raise ConfigError("config has no 'graph'")
    g = build_graph(cfg["graph"], base, seed, inputs)
    model = cfg.get("model")
    try:
        if isinstance(model, str):
            inputs.append(base / model)
            model = ModelParams.from_dict(_load_json(base / model))
        elif model is not None:
            model = ModelParams.from_dict(model)
        profile = cfg.get("profile")
        if isinstance(profile, str):
            inputs.append(base / profile)
            profile = _load_json(base / profile)
        profile = None if profile is None else RepulsionProfile.from_dict(profile)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    ctx = Context(g, model, profile, float(cfg.get("theta", 1.0)),
                  float(cfg.get("tolerance", 1e-6) if tolerance is None else tolerance),
                  int(cfg.get("budget", 10**7) if budget is None else budget))
    stages = cfg.get("stages", [])
    if not isinstance(stages, list):
        raise ConfigError("'stages' must be a list")
    for st in stages:
        if not isinstance(st, dict) or st.get("name") not in STAGES:
            raise ConfigError(f"bad stage entry {st!r}")
    return ctx, stages, seed, inputs


def stage_seeds(seed: int, n: int) -> list:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def pipeline_run(config, out_dir, *, seed=None, threads: int = 1, tolerance=None,
                 budget=None, command=None) -> int:
    """Run every stage of ``config``; write the bundle to ``out_dir``; return the exit code.

    Stages run concurrently on ``threads`` workers; each gets its own seed derived
    from the run seed and its index, so results do not depend on scheduling.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(__version__, list(command or ["pipeline", str(config)]), seed)
    try:
        ctx, stages, seed, inputs = load_config(config, seed, tolerance, budget)
    except ConfigError as exc:
        write_json(out / "error.json", {"error": str(exc), "exit_code": EXIT_CONFIG})
        manifest.add_output(out / "error.json", "error.json")
        manifest.write(out / "manifest.json")
        return EXIT_CONFIG
    manifest.seed = seed
    for p in inputs:
        manifest.add_input(p)
    seeds = stage_seeds(seed, len(stages))
    jobs = [(st["name"], {k: v for k, v in st.items() if k != "name"}, s)
            for st, s in zip(stages, seeds)]
    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        results = list(pool.map(lambda j: run_stage(j[0], ctx, j[1], j[2]), jobs))
    code = EXIT_OK
    summary = []
    for i, res in enumerate(results):
        stem = f"{i:02d}_{res.name}"
        write_json(out / f"{stem}.json", res.report)
        manifest.add_output(out / f"{stem}.json", f"{stem}.json")
        for suffix, text in sorted(res.tables.items()):
            (out / f"{stem}.{suffix}").write_text(text)
            manifest.add_output(out / f"{stem}.{suffix}", f"{stem}.{suffix}")
        summary.append({"stage": res.name, "index": i, "exit_code": res.code})
        if code == EXIT_OK and res.code != EXIT_OK:
            code = res.code
    write_json(out / "summary.json", {"stages": summary, "exit_code": code})
    manifest.add_output(out / "summary.json", "summary.json")
    manifest.write(out / "manifest.json")
    return code
