"""Finite-volume Gibbs specification: local Hamiltonians, quadrature, heat-bath sampling."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .graph import Graph, weights as graph_weights
from .potentials import ModelParams, Gamma_table, abs_pow, capacity_C
from .quadrature import (Envelope, QuadratureError, QuadratureSpec, TensorSpec,
                         integrate_line, tensor_grid)

MAX_BRUTE_FORCE_VOLUME = 3


def _volume(g: Graph, volume) -> np.ndarray:
    vol = np.unique(np.asarray(list(volume), dtype=np.int64))
    if vol.size == 0:
        raise ValueError("volume must be nonempty")
    if vol[0] < 0 or vol[-1] >= g.num_vertices:
        raise ValueError("volume is not a subset of the vertex set")
    return vol


def _full_config(g: Graph, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (g.num_vertices,):
        raise ValueError("boundary condition must assign a value to every vertex")
    if not np.all(np.isfinite(xi)):
        raise ValueError("boundary condition has non-finite entries")
    return xi


# -- boundary conditions ----------------------------------------------------------

def tempered_boundary(g: Graph, kind: str = "decay", scale: float = 1.0, tau: float = 0.5,
                      seed: int = 0) -> np.ndarray:
    """``decay``: scale * exp(-tau * rho(root, x)); ``noise``: iid uniform on [-scale, scale]."""
    if kind == "decay":
        return scale * np.exp(-tau * g.distances(g.root))
    if kind == "noise":
        return np.random.default_rng(seed).uniform(-scale, scale, g.num_vertices)
    if kind == "zero":
        return np.zeros(g.num_vertices)
    raise ValueError(f"unknown boundary kind {kind!r}")


# -- Hamiltonians ------------------------------------------------------------------

class _Boundary:
    """Values seen outside an integration volume: xi, optionally overridden per outer point."""

    def __init__(self, xi, overrides=None):
        self.xi = xi
        self.overrides = overrides or {}

    def __getitem__(self, v):
        return self.overrides.get(int(v), self.xi[v])


def _neg_hamiltonian(g: Graph, model: ModelParams, vol, pts, boundary) -> np.ndarray:
    """-H_vol evaluated at each row of ``pts`` (columns follow ``vol``).

    Returns shape (1, npts), or (n_outer, npts) when the boundary holds per-point
    overrides of shape (n_outer, 1).
    """
    pos = {int(v): i for i, v in enumerate(vol)}
    out = -model.V(pts).sum(axis=1)[None, :]
    for i, x in enumerate(vol):
        ux = pts[:, i][None, :]
        for y in g.neighbors(int(x)):
            j = pos.get(int(y))
            if j is None:
                out = out - model.W(ux, boundary[y])
            elif j > i:
                out = out - model.W(ux, pts[:, j][None, :])
    return out


def local_hamiltonian(g: Graph, model: ModelParams, volume, omega_volume, xi) -> float:
    """H_vol(omega_vol | xi): interior edges once, boundary edges, site terms."""
    vol = _volume(g, volume)
    xi = _full_config(g, xi)
    pts = np.asarray(omega_volume, dtype=float).reshape(1, -1)
    if pts.shape[1] != vol.size:
        raise ValueError("omega_volume must give one value per volume vertex")
    return float(-_neg_hamiltonian(g, model, vol, pts, _Boundary(xi))[0, 0])


def site_envelope(g: Graph, model: ModelParams, x: int, xi, extra=()) -> Envelope:
    """Upper envelope of -H_x(u | xi) (plus ``extra`` (coef, exponent) terms) in |u|."""
    W, V = model.W, model.V
    nb = g.neighbors(x)
    const = V.c_V + nb.size * 0.5 * W.I_W + 0.5 * W.J_W * float(np.sum(abs_pow(xi[nb], W.r)))
    terms = [(0.5 * W.J_W * nb.size, W.r), *extra]
    return Envelope(const, tuple(terms), V.a_V, V.q)


def _site_log_density(g, model, x, xi):
    nb = xi[g.neighbors(x)]

    def log_f(u):
        u = np.asarray(u, dtype=float)
        return -model.V(u) - model.W(u[..., None], nb).sum(axis=-1)

    return log_f


def single_site_log_partition(g: Graph, model: ModelParams, x: int, xi,
                              quad: QuadratureSpec = QuadratureSpec()):
    g._check(x)
    xi = _full_config(g, xi)
    return integrate_line(_site_log_density(g, model, x, xi), site_envelope(g, model, x, xi), quad)


def single_site_partition(g: Graph, model: ModelParams, x: int, xi,
                          quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Z_x(xi) = integral of exp(-H_x(u | xi)) du."""
    return math.exp(single_site_log_partition(g, model, x, xi, quad).log_value)


def single_site_exp_moment(lam: float, p: float, g: Graph, model: ModelParams, x: int, xi,
                           quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Expectation of exp(lam |u|^p) under the single-site conditional law at x."""
    return math.exp(single_site_log_exp_moment(lam, p, g, model, x, xi, quad))


def lemma1_log_rhs(beta: float, lam: float, p: float, g: Graph, model: ModelParams, x: int, xi,
                   quad: QuadratureSpec = QuadratureSpec()) -> float:
    """log of exp(C + sum_y 2 beta |xi(y)|^p / (n(x) n(y)) + sum_y Gamma_xy)."""
    xi = _full_config(g, xi)
    nb = g.neighbors(x)
    nx = g.degree(x)
    ny = g.degrees[nb].astype(float)
    boundary = float(np.sum(2.0 * beta * abs_pow(xi[nb], p) / (nx * ny)))
    gam = Gamma_table(beta, p, model.W, g)
    e = g.edges
    at_x = (e[:, 0] == x) | (e[:, 1] == x)
    cap = capacity_C(beta, lam, p, model.V, quad).value
    return cap + boundary + float(gam[at_x].sum())


def lemma1_rhs(beta, lam, p, g, model, x, xi, quad: QuadratureSpec = QuadratureSpec()) -> float:
    log_rhs = lemma1_log_rhs(beta, lam, p, g, model, x, xi, quad)
    return math.exp(log_rhs) if log_rhs < 709.0 else math.inf


@dataclass(frozen=True)
class Lemma1Check:
    """Both sides kept as logs: the right side can exceed the float range."""

    x: int
    beta: float
    lam: float
    p: float
    log_lhs: float
    log_rhs: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.log_lhs <= self.log_rhs + math.log1p(self.tolerance)

    @property
    def log_slack(self) -> float:
        return self.log_rhs - self.log_lhs

    @property
    def lhs(self) -> float:
        return math.exp(self.log_lhs)

    @property
    def rhs(self) -> float:
        return math.exp(self.log_rhs) if self.log_rhs < 709.0 else math.inf

    def to_dict(self):
        return {"x": self.x, "beta": self.beta, "lambda": self.lam, "p": self.p,
                "log_lhs": self.log_lhs, "log_rhs": self.log_rhs, "log_slack": self.log_slack,
                "passed": self.passed}


def single_site_log_exp_moment(lam, p, g, model, x, xi, quad: QuadratureSpec = QuadratureSpec()):
    xi = _full_config(g, xi)
    base = _site_log_density(g, model, x, xi)
    num = integrate_line(lambda u: lam * abs_pow(u, p) + base(u),
                         site_envelope(g, model, x, xi, extra=((lam, p),)), quad)
    return num.log_value - single_site_log_partition(g, model, x, xi, quad).log_value


def verify_lemma1(beta, lam, p, g, model, x, xi, quad: QuadratureSpec = QuadratureSpec(),
                  tolerance: float = 1e-6) -> Lemma1Check:
    log_lhs = single_site_log_exp_moment(lam, p, g, model, x, xi, quad)
    log_rhs = lemma1_log_rhs(beta, lam, p, g, model, x, xi, quad)
    return Lemma1Check(int(x), beta, lam, p, log_lhs, log_rhs, tolerance)


# -- exact single-site draws -------------------------------------------------------

def sample_site(g: Graph, model: ModelParams, x: int, xi, rng: np.random.Generator) -> float:
    """One draw from the single-site conditional law at x given xi (inverse CDF)."""
    xi = _full_config(g, xi)
    return float(kernels.sample_site(model.W.code, float(model.W.J), model.V.coeff_array,
                                     model.env, xi[g.neighbors(x)].copy(), rng.random()))


# -- heat-bath MCMC ----------------------------------------------------------------

@dataclass(frozen=True)
class SamplerState:
    seed: int = 0
    scan: str = "systematic"      # or "random"
    burn_in: float = 0.1
    batches: int = 50

    def __post_init__(self):
        if self.scan not in ("systematic", "random"):
            raise ValueError("scan must be 'systematic' or 'random'")
        if not 0 <= self.burn_in < 1:
            raise ValueError("burn_in is a fraction in [0, 1)")


@dataclass
class Estimate:
    mean: float
    stderr: float

    def to_dict(self):
        return {"mean": self.mean, "stderr": self.stderr}


def _batch_estimate(batch_means) -> Estimate:
    b = np.asarray(batch_means, dtype=float)
    return Estimate(float(b.mean(axis=0)), float(b.std(axis=0, ddof=1) / math.sqrt(len(b))))


@dataclass
class SampleStats:
    volume: np.ndarray
    sweeps: int
    burn_in: int
    batch_size: int
    lam: float
    p: float
    alpha: float
    ncut: float
    mean: np.ndarray
    mean_se: np.ndarray
    second: np.ndarray
    second_se: np.ndarray
    exp_moment: np.ndarray
    exp_moment_se: np.ndarray
    norm_exp: Estimate
    norm_mean: Estimate
    pair_moments: dict = field(default_factory=dict)
    trace: np.ndarray | None = None
    norms: np.ndarray | None = None
    final: np.ndarray | None = None

    def to_dict(self):
        return {
            "volume": [int(v) for v in self.volume],
            "sweeps": self.sweeps, "burn_in": self.burn_in, "batch_size": self.batch_size,
            "lambda": self.lam, "p": self.p, "alpha": self.alpha,
            "norm_cutoff": None if math.isinf(self.ncut) else self.ncut,
            "sites": [
                {"vertex": int(v), "mean": float(m), "mean_se": float(ms),
                 "second_moment": float(s), "second_moment_se": float(ss),
                 "exp_moment": float(e), "exp_moment_se": float(es)}
                for v, m, ms, s, ss, e, es in zip(self.volume, self.mean, self.mean_se,
                                                  self.second, self.second_se,
                                                  self.exp_moment, self.exp_moment_se)
            ],
            "exp_norm": self.norm_exp.to_dict(),
            "norm_p": self.norm_mean.to_dict(),
            "pair_moments": {f"{a}-{b}": e.to_dict() for (a, b), e in self.pair_moments.items()},
        }


def mcmc_run(g: Graph, model: ModelParams, volume, xi, sweeps: int,
             state: SamplerState = SamplerState(), *, lam: float | None = None,
             p: float | None = None, alpha: float | None = None, ncut: float = math.inf,
             pairs=(), keep_trace: bool = False, init=None) -> SampleStats:
    """Heat-bath sweeps over ``volume`` with the boundary held at ``xi``.

    Statistics use batch means over ``state.batches`` batches after burn-in.
    The cut-off exp-norm is exp(lam * min(||omega||_{p,alpha}^p, ncut)).
    """
    vol = _volume(g, volume)
    xi = _full_config(g, xi)
    lam = model.lam if lam is None else lam
    p = model.p_eff if p is None else p
    alpha = model.alpha_eff if alpha is None else alpha
    nb = state.batches
    bsize = (sweeps - int(round(state.burn_in * sweeps))) // nb
    if bsize < 1:
        raise ValueError(f"need at least {nb} post-burn-in sweeps")
    burn = sweeps - nb * bsize
    omega = xi.copy()
    omega[vol] = 0.0 if init is None else np.asarray(init, dtype=float)
    w = graph_weights(g, alpha)
    rng = np.random.default_rng(state.seed)
    args = (g.indptr, g.indices, model.W.code, float(model.W.J), model.V.coeff_array, model.env)

    def run(n):
        u = rng.random((n, vol.size))
        if state.scan == "random":
            sites = rng.permuted(np.broadcast_to(vol, (n, vol.size)), axis=1)
        else:
            sites = np.broadcast_to(vol, (n, vol.size))
        sites = np.ascontiguousarray(sites)
        trace = np.empty((n, vol.size))
        norms = np.empty(n)
        kernels.heat_bath(*args, omega, sites, u, vol, w, float(p), trace, norms)
        return trace, norms

    done = 0
    while done < burn:
        step = min(burn - done, max(bsize, 1))
        run(step)
        done += step

    pos = {int(v): i for i, v in enumerate(vol)}
    bm = {k: [] for k in ("u", "u2", "exp", "fn", "norm")}
    bpairs = {pr: [] for pr in pairs}
    traces, all_norms = [], []
    for _ in range(nb):
        trace, norms = run(bsize)
        bm["u"].append(trace.mean(axis=0))
        bm["u2"].append((trace * trace).mean(axis=0))
        bm["exp"].append(np.exp(lam * abs_pow(trace, p)).mean(axis=0))
        bm["fn"].append(np.exp(lam * np.minimum(norms, ncut)).mean())
        bm["norm"].append(norms.mean())
        for a, b in pairs:
            bpairs[(a, b)].append(float((trace[:, pos[a]] * trace[:, pos[b]]).mean()))
        if keep_trace:
            traces.append(trace)
            all_norms.append(norms)

    def site_stats(key):
        arr = np.asarray(bm[key])
        return arr.mean(axis=0), arr.std(axis=0, ddof=1) / math.sqrt(nb)

    mean, mean_se = site_stats("u")
    second, second_se = site_stats("u2")
    expm, expm_se = site_stats("exp")
    return SampleStats(
        vol, sweeps, burn, bsize, lam, p, alpha, ncut, mean, mean_se, second, second_se,
        expm, expm_se, _batch_estimate(bm["fn"]), _batch_estimate(bm["norm"]),
        {k: _batch_estimate(v) for k, v in bpairs.items()},
        np.concatenate(traces) if keep_trace else None,
        np.concatenate(all_norms) if keep_trace else None,
        omega.copy(),
    )


# -- brute-force tensor quadrature -------------------------------------------------

class BudgetExceeded(QuadratureError):
    """The tensor grid for this volume would be too large."""


def _box_bounds(g, model, vol, absval, ref, cutoff):
    """Half-widths U_x so that the box holds all but a negligible share of the mass.

    Uses per-site envelopes g_x(t) in |u_x| whose sum dominates -H on the volume;
    ``ref`` is a lower bound for max(-H) and ``absval`` bounds |value| off the volume.
    """
    W, V = model.W, model.V
    pos = set(int(v) for v in vol)
    envs = []
    for x in vol:
        nb = g.neighbors(int(x))
        outside = [int(y) for y in nb if int(y) not in pos]
        const = V.c_V + nb.size * 0.5 * W.I_W + 0.5 * W.J_W * float(np.sum(abs_pow(absval[outside], W.r)))
        envs.append(Envelope(const, ((0.5 * W.J_W * nb.size, W.r),), V.a_V, V.q))
    peaks = []
    for env in envs:
        t = np.linspace(0.0, env.tail_start(), 2001)
        peaks.append(float(np.max(env(t))))
    loose = max(sum(peaks) - ref, 0.0)
    bounds = []
    for env, peak in zip(envs, peaks):
        t = env.tail_start()
        while env(t) > peak - cutoff - loose:
            t *= 1.02
        bounds.append(t)
    return bounds


class TestFunction:
    """Bounded continuous function of a configuration, evaluated on grids."""

    def __call__(self, vol, pts, boundary):
        raise NotImplementedError


@dataclass(frozen=True)
class TanhLinear(TestFunction):
    """tanh(shift + sum_v coef_v omega(v))."""

    coef: tuple          # ((vertex, weight), ...)
    shift: float = 0.0

    def __call__(self, vol, pts, boundary):
        pos = {int(v): i for i, v in enumerate(vol)}
        arg = self.shift
        for v, c in self.coef:
            arg = arg + c * (pts[:, pos[v]][None, :] if v in pos else boundary[v])
        return np.tanh(arg)


@dataclass(frozen=True)
class GaussianBump(TestFunction):
    """exp(-sum_v width_v (omega(v) - center_v)^2)."""

    terms: tuple         # ((vertex, width, center), ...)

    def __call__(self, vol, pts, boundary):
        pos = {int(v): i for i, v in enumerate(vol)}
        arg = 0.0
        for v, wd, c in self.terms:
            val = pts[:, pos[v]][None, :] if v in pos else boundary[v]
            arg = arg + wd * (val - c) ** 2
        return np.exp(-arg)


@dataclass(frozen=True)
class MonomialProduct(TestFunction):
    """prod_v omega(v)^k_v (unbounded; used for moments, not for DLR checks)."""

    powers: tuple        # ((vertex, power), ...)

    def __call__(self, vol, pts, boundary):
        pos = {int(v): i for i, v in enumerate(vol)}
        out = 1.0
        for v, k in self.powers:
            out = out * (pts[:, pos[v]][None, :] if v in pos else boundary[v]) ** k
        return out


def _as_callable(f):
    if isinstance(f, TestFunction):
        return f
    if callable(f):
        return lambda vol, pts, boundary: np.asarray(f(pts), dtype=float)[None, :]
    raise TypeError("f must be a TestFunction or a callable on (npts, |volume|) arrays")


def brute_force_expectation(g: Graph, model: ModelParams, volume, xi, f,
                            spec: TensorSpec = TensorSpec()) -> float:
    """pi_vol(f | xi) by tensor-product Gauss-Legendre quadrature (|volume| <= 3)."""
    vol = _volume(g, volume)
    if vol.size > MAX_BRUTE_FORCE_VOLUME:
        raise BudgetExceeded(f"|volume| = {vol.size} exceeds {MAX_BRUTE_FORCE_VOLUME}")
    xi = _full_config(g, xi)
    f = _as_callable(f)
    bnd = _Boundary(xi)
    ref = float(_neg_hamiltonian(g, model, vol, np.zeros((1, vol.size)), bnd)[0, 0])
    bounds = _box_bounds(g, model, vol, np.abs(xi), ref, spec.log_cutoff)
    nodes, wts = tensor_grid(bounds, spec)
    logw = _neg_hamiltonian(g, model, vol, nodes, bnd)[0]
    dens = wts * np.exp(logw - logw.max())
    return float(np.sum(dens * f(vol, nodes, bnd)[0]) / np.sum(dens))


@dataclass
class DLRReport:
    volume: list
    delta: list
    discrepancies: list
    values: list
    tolerance: float

    @property
    def max_discrepancy(self) -> float:
        return max(self.discrepancies) if self.discrepancies else 0.0

    @property
    def passed(self) -> bool:
        return self.max_discrepancy <= self.tolerance

    def to_dict(self):
        return {"volume": self.volume, "delta": self.delta,
                "discrepancies": self.discrepancies, "values": self.values,
                "max_discrepancy": self.max_discrepancy, "passed": self.passed}


def dlr_consistency_check(g: Graph, model: ModelParams, volume, delta, xi, fs,
                          outer: TensorSpec = TensorSpec(),
                          inner: TensorSpec = TensorSpec(panels=10, order=10),
                          tolerance: float = 1e-6) -> DLRReport:
    """Compare integral of pi_delta(f | omega) pi_vol(d omega | xi) with pi_vol(f | xi).

    The inner conditional expectations use their own grid, independent of the outer one.
    """
    vol = _volume(g, volume)
    dlt = _volume(g, delta)
    if not set(dlt.tolist()) <= set(vol.tolist()):
        raise ValueError("delta must be a subset of the volume")
    if vol.size > MAX_BRUTE_FORCE_VOLUME:
        raise BudgetExceeded(f"|volume| = {vol.size} exceeds {MAX_BRUTE_FORCE_VOLUME}")
    xi = _full_config(g, xi)
    fs = [_as_callable(f) for f in fs]
    bnd = _Boundary(xi)
    ref = float(_neg_hamiltonian(g, model, vol, np.zeros((1, vol.size)), bnd)[0, 0])
    bounds = _box_bounds(g, model, vol, np.abs(xi), ref, outer.log_cutoff)
    nodes, wts = tensor_grid(bounds, outer)
    logw = _neg_hamiltonian(g, model, vol, nodes, bnd)[0]
    dens = wts * np.exp(logw - logw.max())
    dens /= dens.sum()

    rest = np.array([v for v in vol if v not in set(dlt.tolist())], dtype=np.int64)
    rest_cols = [int(np.searchsorted(vol, v)) for v in rest]
    combos, inverse = np.unique(nodes[:, rest_cols], axis=0, return_inverse=True)
    inverse = inverse.ravel()
    overrides = {int(v): combos[:, k][:, None] for k, v in enumerate(rest)}
    ibnd = _Boundary(xi, overrides)
    absval = np.abs(xi).copy()
    for k, v in enumerate(rest):
        absval[v] = bounds[rest_cols[k]]
    iref = float(np.min(_neg_hamiltonian(g, model, dlt, np.zeros((1, dlt.size)), ibnd)))
    ibounds = _box_bounds(g, model, dlt, absval, iref, inner.log_cutoff)
    inodes, iwts = tensor_grid(ibounds, inner)
    ilogw = _neg_hamiltonian(g, model, dlt, inodes, ibnd)
    idens = iwts[None, :] * np.exp(ilogw - ilogw.max(axis=1, keepdims=True))
    idens /= idens.sum(axis=1, keepdims=True)

    discrepancies, values = [], []
    for f in fs:
        rhs = float(np.sum(dens * f(vol, nodes, bnd)[0]))
        # either factor may be a single row when it does not depend on vol \ delta
        cond = np.sum(idens * f(dlt, inodes, ibnd), axis=1)    # pi_delta(f | omega) per combo
        cond = np.broadcast_to(cond, (len(combos),))
        lhs = float(np.sum(dens * cond[inverse]))
        discrepancies.append(abs(lhs - rhs))
        values.append({"lhs": lhs, "rhs": rhs})
    return DLRReport(vol.tolist(), dlt.tolist(), discrepancies, values, tolerance)


# -- temperedness monitor ---------------------------------------------------------

@dataclass
class NormCurve:
    sizes: list
    estimates: list
    stderrs: list
    ncut: float

    @property
    def ratio(self) -> float:
        return max(self.estimates) / min(self.estimates)

    def trend_z(self) -> float:
        """Weighted least-squares slope of estimate on log(size), in standard errors."""
        x = np.log(np.asarray(self.sizes, dtype=float))
        y = np.asarray(self.estimates)
        w = 1.0 / np.maximum(np.asarray(self.stderrs), 1e-300) ** 2
        xm = np.sum(w * x) / np.sum(w)
        sxx = np.sum(w * (x - xm) ** 2)
        if sxx == 0:
            return 0.0
        slope = np.sum(w * (x - xm) * y) / sxx
        return float(slope * math.sqrt(sxx))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["volume_size", "estimate", "stderr"])
            for s, e, se in zip(self.sizes, self.estimates, self.stderrs):
                out.writerow([s, repr(e), repr(se)])

    def to_dict(self):
        return {"sizes": self.sizes, "estimates": self.estimates, "stderrs": self.stderrs,
                "ncut": self.ncut, "ratio": self.ratio, "trend_z": self.trend_z()}


def exp_norm_monitor(g: Graph, model: ModelParams, volumes, xi, sweeps: int,
                     state: SamplerState = SamplerState(), *, lam: float | None = None,
                     p: float | None = None, alpha: float | None = None,
                     ncut: float | None = None) -> NormCurve:
    """Cut-off exp-norm expectation on each of a nested family of volumes.

    Without ``ncut``, a pilot run on the largest volume sets it to ten times the
    median observed ||omega||^p.
    """
    vols = [_volume(g, v) for v in volumes]
    for a, b in zip(vols, vols[1:]):
        if not set(a.tolist()) <= set(b.tolist()):
            raise ValueError("volumes must be nested")
    seeds = np.random.SeedSequence(state.seed).spawn(len(vols) + 1)
    if ncut is None:
        pilot_state = SamplerState(int(seeds[0].generate_state(1)[0]), state.scan, 0.5, 2)
        pilot = mcmc_run(g, model, vols[-1], xi, max(sweeps // 5, 40), pilot_state,
                         lam=lam, p=p, alpha=alpha, keep_trace=True)
        ncut = 10.0 * float(np.median(pilot.norms))
    sizes, ests, ses = [], [], []
    for v, ss in zip(vols, seeds[1:]):
        st = SamplerState(int(ss.generate_state(1)[0]), state.scan, state.burn_in, state.batches)
        res = mcmc_run(g, model, v, xi, sweeps, st, lam=lam, p=p, alpha=alpha, ncut=ncut)
        sizes.append(int(v.size))
        ests.append(res.norm_exp.mean)
        ses.append(res.norm_exp.stderr)
    return NormCurve(sizes, ests, ses, ncut)


def random_admissible(model: ModelParams, rng: np.random.Generator):
    """Random (beta, lam, p) with p0 <= p < q and 2 beta exp(alpha_bar) < lam.

    p stays in the lower 80% of [p0, q): as p approaches q the capacity integrand
    peaks at huge |u| where log-densities cancel catastrophically.
    """
    p0, q = model.p0, model.V.q
    if not p0 < q:
        raise ValueError(f"no admissible p: p0={p0:g} >= q={q:g}")
    p = p0 + (q - p0) * rng.uniform(0.0, 0.8)
    lam = rng.uniform(0.05, 1.0)
    beta = rng.uniform(0.2, 0.99) * lam * math.exp(-model.alpha_bar) / 2.0
    return float(beta), float(lam), float(p)


def bfs_prefix(g: Graph, k: int) -> np.ndarray:
    """First k vertices in order of distance from the root (ties by index); nested in k."""
    if not 1 <= k <= g.num_vertices:
        raise ValueError(f"volume size must be in [1, {g.num_vertices}]")
    dist = g.distances(g.root)
    return np.sort(np.lexsort((np.arange(g.num_vertices), dist))[:k])


def multiple_holder(mu, phis, alphas):
    """Both sides of sum_j mu_j prod_i phi_ij^a_i <= prod_i (sum_j mu_j phi_ij)^a_i.

    ``mu`` is a probability vector (batched along leading axes), ``phis`` has shape
    (..., k, m) and ``alphas`` (..., k) with nonnegative entries summing to at most 1.
    """
    mu = np.asarray(mu, dtype=float)
    phis = np.asarray(phis, dtype=float)
    a = np.asarray(alphas, dtype=float)
    lhs = np.sum(mu * np.prod(phis ** a[..., None], axis=-2), axis=-1)
    rhs = np.prod(np.sum(mu[..., None, :] * phis, axis=-1) ** a, axis=-1)
    return lhs, rhs
