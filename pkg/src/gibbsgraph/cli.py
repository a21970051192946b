"""Command-line interface: ``gibbsgraph <command> [options]``.

Exit codes: 0 ok, 2 configuration error, 3 certification failure,
4 inequality violation, 5 budget exceeded.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .graph import Graph, theta_sum
from .pipeline import (EXIT_CONFIG, EXIT_OK, ConfigError, Context, pipeline_run, run_stage)
from .potentials import ModelParams
from .reports import RunManifest, dumps
from .repulsive import (HubPlan, PlanError, RepulsionProfile, corrupt_positions, hub_spacing,
                        place_hubs, realize)


def _floats(text):
    return [float(t) for t in str(text).split(",") if t.strip()]


def _ints(text):
    return [int(t) for t in str(text).split(",") if t.strip()]


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="master RNG seed")
    p.add_argument("--threads", type=int, default=1, help="worker threads for independent stages")
    p.add_argument("--budget", type=int, default=10**7, help="simple-path expansion budget")
    p.add_argument("--tolerance", type=float, default=1e-6, help="verification tolerance")
    return p


def _profile_flags(p):
    p.add_argument("--profile", help="profile JSON (n_star, upsilon, epsilon)")
    p.add_argument("--n-star", type=int)
    p.add_argument("--upsilon", type=float)
    p.add_argument("--epsilon", type=float)


def _boundary_flags(p):
    p.add_argument("--boundary", default="decay", choices=["decay", "noise", "zero"])
    p.add_argument("--boundary-scale", type=float, default=1.0)
    p.add_argument("--boundary-tau", type=float, default=0.5)


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="gibbsgraph", description=__doc__,
                                  formatter_class=argparse.RawDescriptionHelpFormatter)
    top.add_argument("--version", action="version", version=f"gibbsgraph {__version__}")
    sub = top.add_subparsers(dest="command", required=True)
    common = _global_flags()

    def add(name, help_):
        p = sub.add_parser(name, help=help_, parents=[common])
        p.add_argument("-o", "--output", help="report path (default: stdout)")
        return p

    p = add("generate", "build a repulsive graph (backbone plus leaf-padded hubs)")
    _profile_flags(p)
    p.add_argument("--degrees", required=True, help="hub degrees, e.g. 5,40")
    p.add_argument("--backbone", choices=["ray", "tree"], default="ray")
    p.add_argument("--radius", type=int, help="backbone radius (default: smallest that fits)")
    p.add_argument("--corrupt", action="store_true",
                   help="move one hub inside the forbidden distance")

    p = add("certify", "check hub separation against phi")
    p.add_argument("--graph", required=True)
    _profile_flags(p)

    p = add("summability", "Theta(alpha, theta) ledger, T_root and an optional path census")
    p.add_argument("--graph", required=True)
    p.add_argument("--alpha", default="1.0", help="comma-separated alphas")
    p.add_argument("--theta", default="1.0", help="comma-separated thetas")
    p.add_argument("--census-length", type=int, help="enumerate simple paths up to this length")
    p.add_argument("--ledger", help="write the per-radius ledger of the first (alpha, theta) as CSV")

    p = add("constants", "model constants, sampled envelope checks and admissibility")
    p.add_argument("--model", required=True)
    p.add_argument("--graph")
    _profile_flags(p)
    p.add_argument("--theta", type=float, default=1.0, help="theta for the growth constant")

    p = add("verify-growth", "ball degree bound, sphere growth and the Theta/T_root bound")
    p.add_argument("--graph", required=True)
    _profile_flags(p)
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--klm-alpha", default="0.5,1,2")
    p.add_argument("--klm-theta", default="0.5,1")

    p = add("verify-lemma1", "single-site exp-moment bound on random admissible tuples")
    p.add_argument("--graph", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--tuples", type=int, default=20)

    p = add("verify-dlr", "nested-quadrature consistency check (|volume| <= 3)")
    p.add_argument("--graph", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--volume", required=True, help="e.g. 0,1 or 0..2")
    p.add_argument("--delta", required=True)
    _boundary_flags(p)

    p = add("sample", "heat-bath run; per-site moments with batch-means errors")
    p.add_argument("--graph", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--volume", required=True, help="e.g. 0..99, 3,5,8 or bfs:25")
    p.add_argument("--sweeps", type=int, default=10000)
    p.add_argument("--scan", choices=["systematic", "random"], default="systematic")
    p.add_argument("--burn-in", type=float, default=0.1)
    _boundary_flags(p)

    p = add("monitor-norm", "cut-off exp-norm estimates on nested volumes (CSV)")
    p.add_argument("--graph", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--sizes", required=True, help="nested volume sizes, e.g. 10,20,50")
    p.add_argument("--sweeps", type=int, default=2000)
    p.add_argument("--ncut", type=float, help="norm cutoff (default: 10 x pilot median)")
    _boundary_flags(p)

    p = sub.add_parser("pipeline", help="run a staged verification config", parents=[common])
    p.add_argument("config")
    p.add_argument("--out", required=True, help="bundle directory")
    return top


def _profile(args):
    if args.profile:
        return RepulsionProfile.from_dict(json.loads(Path(args.profile).read_text()))
    if None in (args.n_star, args.upsilon, args.epsilon):
        raise ConfigError("give --profile or all of --n-star, --upsilon, --epsilon")
    return RepulsionProfile(args.n_star, args.upsilon, args.epsilon)


def _boundary(args):
    return {"kind": args.boundary, "scale": args.boundary_scale, "tau": args.boundary_tau}


def _emit(args, obj, inputs=(), csv_text=None) -> None:
    text = dumps(obj)
    if not args.output:
        sys.stdout.write(csv_text if csv_text is not None else text)
        return
    out = Path(args.output)
    out.write_text(csv_text if csv_text is not None else text)
    manifest = RunManifest(__version__, sys.argv[1:] if args.argv is None else args.argv,
                           args.seed)
    for path in inputs:
        manifest.add_input(path)
    manifest.add_output(out, out.name)
    manifest.write(out.with_name(out.name + ".manifest.json"))


def _generate(args) -> int:
    profile = _profile(args)
    degrees = tuple(sorted(_ints(args.degrees)))
    radius = args.radius
    if radius is None:
        gaps = sum(hub_spacing(profile, a, b) for a, b in zip(degrees, degrees[1:]))
        reach = math.ceil(profile.phi(degrees[-1])) if degrees else 1
        radius = max(gaps, reach) if args.backbone == "ray" else 2
    plan = HubPlan(degrees, args.backbone, radius)
    while True:
        try:
            pos = place_hubs(profile, plan, args.seed)
            break
        except PlanError:
            if args.radius is not None or plan.backbone == "ray":
                raise
            plan = HubPlan(degrees, "tree", plan.radius + 1)
    if args.corrupt:
        pos, _ = corrupt_positions(profile, plan, pos, args.seed)
    g = realize(plan, pos)
    _emit(args, g.to_dict())
    return EXIT_OK


def _run(args) -> int:
    if args.command == "generate":
        return _generate(args)
    if args.command == "pipeline":
        return pipeline_run(args.config, args.out, seed=args.seed, threads=args.threads,
                            tolerance=args.tolerance, budget=args.budget)
    inputs = [Path(args.graph)] if getattr(args, "graph", None) else []
    graph = Graph.load(args.graph) if inputs else None
    model = None
    if getattr(args, "model", None):
        inputs.append(Path(args.model))
        model = ModelParams.load(args.model)
    profile = None
    if hasattr(args, "n_star") and (args.profile or args.n_star is not None):
        profile = _profile(args)
        if args.profile:
            inputs.append(Path(args.profile))
    theta = getattr(args, "theta", 1.0)
    ctx = Context(graph, model, profile, theta if isinstance(theta, float) else 1.0,
                  args.tolerance, args.budget)
    cmd = args.command
    if cmd == "certify":
        name, opts = "certify", {}
    elif cmd == "summability":
        name = "summability"
        opts = {"alpha": _floats(args.alpha), "theta": _floats(args.theta),
                "census_length": args.census_length}
    elif cmd == "constants":
        name, opts = "constants", {}
    elif cmd == "verify-growth":
        name = "growth"
        opts = {"klm_alpha": _floats(args.klm_alpha), "klm_theta": _floats(args.klm_theta)}
    elif cmd == "verify-lemma1":
        name, opts = "lemma1", {"tuples": args.tuples}
    elif cmd == "verify-dlr":
        name = "dlr"
        opts = {"cases": [{"volume": args.volume, "delta": args.delta,
                           "boundary": _boundary(args)}]}
    elif cmd == "sample":
        name = "sample"
        opts = {"volume": args.volume, "sweeps": args.sweeps, "scan": args.scan,
                "burn_in": args.burn_in, "boundary": _boundary(args)}
    elif cmd == "monitor-norm":
        name = "monitor"
        opts = {"sizes": _ints(args.sizes), "sweeps": args.sweeps, "ncut": args.ncut,
                "boundary": _boundary(args)}
    else:  # pragma: no cover - argparse rejects unknown commands
        raise ConfigError(cmd)
    if graph is None and name != "constants":
        raise ConfigError(f"{cmd} needs --graph")
    if graph is None:
        ctx.graph = None
    res = run_stage(name, ctx, opts, args.seed)
    if name == "summability" and args.ledger and "sums" in res.report:
        first = res.report["sums"][0]
        theta_sum(graph, first["alpha"], first["theta"]).to_csv(args.ledger)
    _emit(args, res.report, inputs, res.tables.get("csv") if name == "monitor" else None)
    if res.code != EXIT_OK and "error" in res.report:
        print(f"gibbsgraph {cmd}: {res.report['error']}", file=sys.stderr)
    return res.code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = list(sys.argv[1:] if argv is None else argv)
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"gibbsgraph: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError, KeyError) as exc:
        print(f"gibbsgraph: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
