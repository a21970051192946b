"""Integrals of exp(log_f) over the real line and over small boxes in R^k.

One-dimensional integrals are truncated to [-T, T] where T comes from an analytic
upper envelope of log_f, so the discarded tails carry a certified bound.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested accuracy."""


class DivergentIntegral(ValueError):
    """The integrand's envelope does not decay (e.g. p >= q)."""


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-11
    tail_tol: float = 1e-12
    max_subdivisions: int = 500

    def __post_init__(self):
        if self.rel_tol <= 0 or self.tail_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class Envelope:
    """log f(u) <= const + sum_i c_i |u|^e_i - a |u|^q for every real u (c_i >= 0)."""

    const: float
    terms: tuple
    a: float
    q: float

    def __post_init__(self):
        kept, a = [], self.a
        for c, e in self.terms:
            if c == 0:
                continue
            if c < 0:
                raise ValueError("envelope coefficients must be nonnegative")
            if e == self.q:
                a -= c
            else:
                kept.append((float(c), float(e)))
        if a <= 0 or any(e > self.q for _, e in kept):
            raise DivergentIntegral("integrand does not decay: need exponents < q, or a smaller coefficient at q")
        object.__setattr__(self, "terms", tuple(kept))
        object.__setattr__(self, "a", a)

    def __call__(self, t):
        return self.const + sum(c * t**e for c, e in self.terms) - self.a * t**self.q

    def slope(self, t):
        return sum(c * e * t ** (e - 1) for c, e in self.terms) - self.a * self.q * t ** (self.q - 1)

    def _concave_decreasing(self, t):
        # both factors are monotone in t, so once true it stays true
        rising = sum(c * e * t ** (e - self.q) for c, e in self.terms)
        bending = sum(c * e * (e - 1) * t ** (e - self.q) for c, e in self.terms if e > 1)
        return rising < self.a * self.q and bending < self.a * self.q * (self.q - 1)

    def tail_start(self) -> float:
        t = 1.0
        while not self._concave_decreasing(t):
            t *= 1.5
        return t

    def log_tail(self, t) -> float:
        """log of an upper bound on the integral of f over |u| > t (both tails)."""
        return math.log(2.0) + self(t) - math.log(-self.slope(t))


@dataclass(frozen=True)
class LineIntegral:
    log_value: float
    rel_tail: float       # certified tail mass relative to the value
    rel_error: float      # quadrature error estimate relative to the value
    cutoff: float


BULK_DROP = 50.0


def _peaks(log_f, scan, vals):
    """Refined local maxima of log_f; a coarse scan can miss very narrow peaks."""
    inner = np.flatnonzero((vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:])) + 1
    idx = set(inner.tolist()) | {int(vals.argmax())}
    if vals[0] >= vals[1]:
        idx.add(0)
    if vals[-1] >= vals[-2]:
        idx.add(len(vals) - 1)
    # plateaus make every point a local max; keep the best few
    idx = sorted(idx, key=lambda i: -vals[i])[:32]
    out = []
    for i in idx:
        lo, hi = scan[max(i - 1, 0)], scan[min(i + 1, len(scan) - 1)]
        res = optimize.minimize_scalar(lambda u: -float(log_f(u)), bounds=(lo, hi),
                                       method="bounded", options={"xatol": 1e-12 * max(1.0, abs(hi))})
        u, v = (float(res.x), -float(res.fun)) if -res.fun > vals[i] else (float(scan[i]), float(vals[i]))
        out.append((u, v))
    return out


def _bulk_edge(log_f, peak, level, far):
    """Point between ``peak`` and ``far`` where log_f drops to ``level`` (or ``far``)."""
    if float(log_f(far)) >= level:
        return far
    return optimize.brentq(lambda u: float(log_f(u)) - level, peak, far, xtol=1e-12)


def integrate_line(log_f, env: Envelope, spec: QuadratureSpec = QuadratureSpec()) -> LineIntegral:
    """log of the integral of exp(log_f(u)) over the real line."""
    t = env.tail_start()
    scan = np.linspace(-t, t, 4001)
    vals = log_f(scan)
    peaks = _peaks(log_f, scan, vals)
    shift = max(v for _, v in peaks)
    marks = {0.0}
    step = scan[1] - scan[0]
    for u, v in peaks:
        if v < shift - 700.0:
            continue
        marks.add(u)
        for sign in (-1.0, 1.0):
            # walk out along the scan until below the bulk level, then root-find
            far = u + sign * step
            while abs(far) < t and float(log_f(far)) >= shift - BULK_DROP:
                far += sign * step
            far = float(np.clip(far, -t, t))
            marks.add(_bulk_edge(log_f, u, shift - BULK_DROP, far))

    merged = []
    for x in sorted(marks):
        if not merged or x - merged[-1] > 1e-6 * max(1.0, abs(x)):
            merged.append(x)

    def core(T):
        pts = [x for x in merged if -T < x < T]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(lambda u: math.exp(log_f(u) - shift), -T, T,
                                      points=pts or None, limit=spec.max_subdivisions,
                                      epsabs=0.0, epsrel=spec.rel_tol)
        if not val > 0 or err > max(100 * spec.rel_tol, 1e-6) * val:
            raise QuadratureError(f"quadrature on [-{T:g}, {T:g}] did not converge (err={err:g})")
        return val, err

    val, _ = core(t)
    target = math.log(spec.tail_tol) + math.log(val) + shift
    while env.log_tail(t) > target:
        t *= 1.05
    val, err = core(t)
    rel_tail = math.exp(env.log_tail(t) - shift - math.log(val))
    return LineIntegral(math.log(val) + shift, rel_tail, err / val, t)


# -- tensor grids for |Lambda| <= 3 ---------------------------------------------

@dataclass(frozen=True)
class TensorSpec:
    panels: int = 8
    order: int = 12
    log_cutoff: float = 40.0
    max_points: int = 4_000_000


def gauss_panels(lo: float, hi: float, panels: int, order: int):
    """Composite Gauss-Legendre nodes and weights on [lo, hi]."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    return nodes, wts


def tensor_grid(bounds, spec: TensorSpec):
    """Product nodes (npts, k) and weights (npts,) for the box prod [-U_i, U_i]."""
    axes = [gauss_panels(-u, u, spec.panels, spec.order) for u in bounds]
    npts = int(np.prod([len(n) for n, _ in axes])) if axes else 1
    if npts > spec.max_points:
        raise QuadratureError(f"tensor grid of {npts} points exceeds budget {spec.max_points}")
    if not axes:
        return np.zeros((1, 0)), np.ones(1)
    mesh = np.meshgrid(*[n for n, _ in axes], indexing="ij")
    wmesh = np.meshgrid(*[w for _, w in axes], indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=1)
    wts = np.prod(np.stack([m.ravel() for m in wmesh], axis=1), axis=1)
    return nodes, wts
