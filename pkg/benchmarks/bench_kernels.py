"""Time the numba kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

Both backends run the same inputs; the compiled one is warmed up first so the
timings exclude JIT compilation.
"""
import argparse
import json
import time

import numpy as np

from gibbsgraph import kernels
from gibbsgraph.graph import weights
from gibbsgraph.potentials import ModelParams
from gibbsgraph.repulsive import HubPlan, RepulsionProfile, _cap_table, generate


def workloads():
    profile = RepulsionProfile(3, 10.0, 1.0)
    g = generate(profile, HubPlan((5, 6, 5, 7), "ray", 600), 0)
    tree = generate(profile, HubPlan((5, 5, 6), "tree", 9), 0)
    m = ModelParams.from_dict({"pair": {"kind": "bilinear", "J": 0.3},
                               "site": {"name": "double_well"}, "theta": 2})
    rng = np.random.default_rng(0)
    src = np.arange(0, g.num_vertices, 5, dtype=np.int64)
    cap = _cap_table(profile, g.num_vertices)
    vol = np.arange(50, dtype=np.int64)
    sweeps = 40
    sites = np.ascontiguousarray(np.broadcast_to(vol, (sweeps, vol.size)))
    u = rng.random((sweeps, vol.size))
    w = weights(g, 1.0)
    nb = rng.normal(size=4)

    def hb(impl):
        omega = np.zeros(g.num_vertices)
        impl.heat_bath(g.indptr, g.indices, m.W.code, float(m.W.J), m.V.coeff_array, m.env,
                       omega, sites, u, vol, w, 3.0, np.empty((sweeps, vol.size)), np.empty(sweeps))

    return {
        "bfs (ray, 1 source)": lambda k: k.bfs(g.indptr, g.indices, 0),
        "path_census (tree, len 12)": lambda k: k.path_census(
            tree.indptr, tree.indices, tree.degrees, 0, 12, 10**7),
        "growth_scan (ray, 1/5 of sources)": lambda k: k.growth_scan(
            g.indptr, g.indices, g.degrees, src, cap, 1.0, 8.0),
        "sample_site (x1000)": lambda k: [k.sample_site(m.W.code, float(m.W.J), m.V.coeff_array,
                                                        m.env, nb, t) for t in u.ravel()[:1000]],
        "heat_bath (50 sites x 40 sweeps)": hb,
    }


def best_time(fn, repeat):
    out = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return min(out)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args(argv)

    nb_impl, np_impl = kernels.get("numba"), kernels.get("numpy")
    if nb_impl is np_impl:
        raise SystemExit("numba is not installed; nothing to compare")
    rows = []
    for name, fn in workloads().items():
        fn(nb_impl)  # compile
        t_nb = best_time(lambda: fn(nb_impl), args.repeat)
        t_np = best_time(lambda: fn(np_impl), args.repeat)
        rows.append({"kernel": name, "numba_s": t_nb, "numpy_s": t_np, "speedup": t_np / t_nb})
        print(f"{name:36s} numba {t_nb * 1e3:9.2f} ms   numpy {t_np * 1e3:9.2f} ms   x{t_np / t_nb:7.1f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
