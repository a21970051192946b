"""Repulsive graphs: hubs (degree > n_star) kept far apart by an increasing function phi.

phi(b) = upsilon * log(b) * (log log b)^(1 + epsilon) for b >= n_star + 1.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .graph import Graph, t_x_sum, theta_sum


class PlanError(ValueError):
    """The hub plan cannot be realized (e.g. the backbone is too short)."""


@dataclass(frozen=True)
class RepulsionProfile:
    n_star: int
    upsilon: float
    epsilon: float

    def __post_init__(self):
        if int(self.n_star) != self.n_star or self.n_star <= 2:
            raise ValueError("n_star must be an integer > 2")
        if self.upsilon <= 0 or self.epsilon <= 0:
            raise ValueError("upsilon and epsilon must be positive")

    @property
    def admissible(self) -> bool:
        """phi(n_star + 1) > 1, so a hub's repulsion ball contains its neighbours."""
        return self.phi(self.n_star + 1) > 1.0

    def phi(self, b):
        b = np.asarray(b, dtype=float)
        if np.any(b < self.n_star + 1):
            raise ValueError(f"phi is defined for b >= {self.n_star + 1}")
        lb = np.log(b)
        out = self.upsilon * lb * np.log(lb) ** (1.0 + self.epsilon)
        return float(out) if out.ndim == 0 else out

    def phi_inverse(self, t, rtol: float = 1e-13):
        """b with phi(b) = t, by bisection on log b (vectorized over t).

        Working in s = log b keeps huge preimages finite; the bracket on s is
        doubled until it covers t, and an absolute width ``rtol`` on s is a
        relative width on b.
        """
        t = np.asarray(t, dtype=float)
        floor = self.phi(self.n_star + 1)
        if np.any(t < floor):
            raise ValueError(f"phi_inverse needs t >= phi(n_star + 1) = {floor:.6g}")

        def phi_log(s):
            return self.upsilon * s * np.log(s) ** (1.0 + self.epsilon)

        lo = np.full(t.shape, math.log(self.n_star + 1))
        hi = lo * 2.0
        while True:
            short = phi_log(hi) < t
            if not np.any(short):
                break
            hi = np.where(short, hi * 2.0, hi)
        for _ in range(2000):
            mid = 0.5 * (lo + hi)
            up = phi_log(mid) < t
            lo = np.where(up, mid, lo)
            hi = np.where(up, hi, mid)
            if np.all(hi - lo <= rtol):
                break
        with np.errstate(over="ignore"):
            out = np.exp(0.5 * (lo + hi))
        return float(out) if out.ndim == 0 else out

    def degree_cap(self, t):
        """Largest degree the ball bound allows at phi-level ``t``.

        Below phi(n_star + 1) only non-hub degrees (<= n_star) are allowed.
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.full(t.shape, float(self.n_star))
        ok = t >= self.phi(self.n_star + 1)
        if np.any(ok):
            out[ok] = self.phi_inverse(t[ok])
        return out

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["n_star"]), float(d["upsilon"]), float(d["epsilon"]))


def hub_set(g: Graph, n_star: int) -> np.ndarray:
    return np.flatnonzero(g.degrees > n_star)


@dataclass
class Violation:
    x: int
    y: int
    distance: int
    required: float


@dataclass
class CertificationReport:
    admissible_kk: bool
    hub_set: list[int]
    violations: list[Violation] = field(default_factory=list)
    # min-based (weaker) variant, reported for comparison only
    min_condition_holds: bool = True

    @property
    def passed(self) -> bool:
        return self.admissible_kk and not self.violations

    def to_dict(self):
        return {
            "admissible_kk": self.admissible_kk,
            "hub_set": [int(h) for h in self.hub_set],
            "min_condition_holds": self.min_condition_holds,
            "passed": self.passed,
            "violations": [asdict(v) for v in self.violations],
        }


def certify(g: Graph, profile: RepulsionProfile) -> CertificationReport:
    hubs = hub_set(g, profile.n_star)
    report = CertificationReport(profile.admissible, hubs.tolist())
    deg = g.degrees
    for i, x in enumerate(hubs):
        dist = g.distances(int(x))
        for y in hubs[i + 1 :]:
            rho = int(dist[y])
            need = profile.phi(max(deg[x], deg[y]))
            if rho < need:
                report.violations.append(Violation(int(x), int(y), rho, need))
            if rho < profile.phi(min(deg[x], deg[y])):
                report.min_condition_holds = False
    return report


# -- construction ---------------------------------------------------------------

@dataclass(frozen=True)
class HubPlan:
    """Hub degrees (ascending), backbone kind ('ray' or 'tree') and truncation radius."""

    degrees: tuple[int, ...]
    backbone: str = "ray"
    radius: int = 20

    def __post_init__(self):
        object.__setattr__(self, "degrees", tuple(sorted(int(d) for d in self.degrees)))
        if self.backbone not in ("ray", "tree"):
            raise ValueError("backbone must be 'ray' or 'tree'")
        if self.radius < 1:
            raise ValueError("radius must be >= 1")

    def validate(self, profile: RepulsionProfile) -> None:
        if any(d <= profile.n_star for d in self.degrees):
            raise PlanError(f"every hub degree must exceed n_star={profile.n_star}")
        if self.degrees and self.radius < math.ceil(profile.phi(self.degrees[-1])):
            raise PlanError(
                f"radius {self.radius} < ceil(phi({self.degrees[-1]})) = "
                f"{math.ceil(profile.phi(self.degrees[-1]))}")


def hub_spacing(profile: RepulsionProfile, d1: int, d2: int) -> int:
    return math.ceil(profile.phi(max(d1, d2))) + 1


def backbone_edges(kind: str, radius: int):
    if kind == "ray":
        n = radius + 1
        return n, [(i, i + 1) for i in range(radius)]
    n = 2 ** (radius + 1) - 1
    return n, [((i - 1) // 2, i) for i in range(1, n)]


def place_hubs(profile: RepulsionProfile, plan: HubPlan, seed: int) -> list[int]:
    """Backbone positions for each hub of ``plan`` (same order as ``plan.degrees``)."""
    plan.validate(profile)
    rng = np.random.default_rng(seed)
    d = plan.degrees
    if not d:
        return []
    if plan.backbone == "ray":
        gaps = [hub_spacing(profile, d[i - 1], d[i]) for i in range(1, len(d))]
        slack = plan.radius - sum(gaps)
        if slack < 0:
            raise PlanError(
                f"ray of length {plan.radius} cannot hold hubs {d}: needs {sum(gaps)}")
        # spread the slack at random over the lead-in and the gaps
        extra = rng.multinomial(slack, np.full(len(d) + 1, 1.0 / (len(d) + 1)))
        pos = [int(extra[0])]
        for gap, more in zip(gaps, extra[1:-1]):
            pos.append(pos[-1] + gap + int(more))
        return pos
    n, edges = backbone_edges("tree", plan.radius)
    tree = Graph(n, edges)
    candidates = rng.permutation(n)
    placed: list[int] = []
    dists: list[np.ndarray] = []
    order = sorted(range(len(d)), key=lambda i: -d[i])
    pos = [0] * len(d)
    for i in order:
        for c in candidates:
            if all(dist[c] >= hub_spacing(profile, d[i], d[j])
                   for dist, j in zip(dists, placed)):
                pos[i] = int(c)
                placed.append(i)
                dists.append(tree.distances(int(c)))
                break
        else:
            raise PlanError(f"binary tree of depth {plan.radius} cannot hold hubs {d}")
    return pos


def realize(plan: HubPlan, positions) -> Graph:
    """Backbone plus, for each hub, enough fresh leaves to reach its planned degree."""
    n, edges = backbone_edges(plan.backbone, plan.radius)
    edges = list(edges)
    bdeg = np.zeros(n, dtype=np.int64)
    for a, b in edges:
        bdeg[a] += 1
        bdeg[b] += 1
    if len(set(positions)) != len(positions):
        raise PlanError("two hubs share a backbone vertex")
    for target, where in zip(plan.degrees, positions):
        for _ in range(target - int(bdeg[where])):
            edges.append((int(where), n))
            n += 1
    return Graph(n, edges, root=0)


def generate(profile: RepulsionProfile, plan: HubPlan, seed: int = 0) -> Graph:
    return realize(plan, place_hubs(profile, plan, seed))


def corrupt_positions(profile: RepulsionProfile, plan: HubPlan, positions, seed: int = 0):
    """Move one hub so it sits at distance ceil(phi) - 1 from another hub.

    That is one step inside the forbidden zone, so the realized graph must fail
    certification. Returns (new positions, index of the moved hub).
    """
    d = plan.degrees
    if len(d) < 2:
        raise PlanError("need two hubs to corrupt a placement")
    rng = np.random.default_rng(seed)
    pos = list(positions)
    n, edges = backbone_edges(plan.backbone, plan.radius)
    backbone = Graph(n, edges)
    for i, j in rng.permutation([(i, j) for i in range(len(d)) for j in range(len(d)) if i != j]):
        target = math.ceil(profile.phi(max(d[i], d[j]))) - 1
        dist = backbone.distances(pos[j])
        bdeg = backbone.degrees
        taken = set(pos) - {pos[i]}
        spots = [int(c) for c in np.flatnonzero(dist == target)
                 if int(c) not in taken and bdeg[c] <= d[i]]
        if spots:
            pos[i] = spots[int(rng.integers(len(spots)))]
            return pos, int(i)
    raise PlanError("no backbone vertex available for the corrupted hub")


# -- constants and lemma checks -------------------------------------------------

def zeta_tail(start: int, epsilon: float, tol: float = 1e-11):
    """Sum of k^-(1+epsilon) for k >= start, with a rigorous enclosure.

    Partial sum up to K plus convexity bounds on the remainder: the trapezoid rule
    gives a lower bound, the midpoint rule an upper bound. Returns (value, halfwidth).
    """
    s = 1.0 + epsilon
    K = max(int(start), 1024)
    while True:
        k = np.arange(start, K + 1, dtype=float)
        partial = math.fsum(k ** -s)
        integral = lambda a: a ** -epsilon / epsilon
        lower = integral(K) - 0.5 * K ** -s
        upper = integral(K + 0.5)
        if upper - lower <= 2 * tol or K > 10**7:
            return partial + 0.5 * (lower + upper), 0.5 * (upper - lower)
        K *= 4


@dataclass(frozen=True)
class GrowthConstant:
    a: float
    sigma: float
    k_star: int
    tail: float
    tail_error: float


def growth_constant_a(profile: RepulsionProfile, theta: float) -> GrowthConstant:
    if theta <= 0:
        raise ValueError("theta must be positive")
    sigma = max(2.0 / profile.upsilon, math.e)
    k_star = 1
    while math.exp(math.e ** (k_star + 1)) < profile.n_star + 1:
        k_star += 1
    tail, err = zeta_tail(k_star, profile.epsilon)
    a = (1.0 + theta) * sigma + math.log(profile.n_star) + 2.0 * math.e / profile.upsilon * tail
    return GrowthConstant(a, sigma, k_star, tail, err)


def _cap_table(profile, max_radius):
    return profile.degree_cap(2.0 * np.arange(max_radius + 1))


@dataclass
class GrowthReport:
    theta: float
    a: float
    vertices: np.ndarray
    eccentricity: np.ndarray
    n_x: np.ndarray
    violations: np.ndarray
    max_rate: np.ndarray

    @property
    def ball_bound_ok(self) -> np.ndarray:
        """A finite N_x exists on the truncation (N_x <= eccentricity)."""
        return self.n_x <= np.maximum(self.eccentricity, 1)

    @property
    def passed(self) -> bool:
        return bool(np.all(self.ball_bound_ok) and not np.any(self.violations))

    def to_dict(self):
        return {
            "a": self.a,
            "theta": self.theta,
            "passed": self.passed,
            "num_vertices_checked": int(self.vertices.size),
            "ball_bound_failures": [int(v) for v in self.vertices[~self.ball_bound_ok]],
            "growth_violations": int(self.violations.sum()),
            "max_empirical_rate": float(self.max_rate.max()) if self.max_rate.size else None,
            "per_vertex": [
                {"vertex": int(v), "eccentricity": int(e), "N_x": int(n),
                 "violations": int(k), "max_rate": float(r)}
                for v, e, n, k, r in zip(self.vertices, self.eccentricity, self.n_x,
                                         self.violations, self.max_rate)
            ] if self.vertices.size <= 64 else None,
        }


def verify_growth(g: Graph, profile: RepulsionProfile, theta: float,
                  vertices=None, a: float | None = None) -> GrowthReport:
    """Ball degree bound and sphere growth G_theta(N, x) <= exp(aN) for N >= N_x."""
    if a is None:
        a = growth_constant_a(profile, theta).a
    vertices = (np.arange(g.num_vertices) if vertices is None
                else np.atleast_1d(np.asarray(vertices, dtype=np.int64)))
    for v in vertices:
        g._check(int(v))
    cap = _cap_table(profile, g.num_vertices)
    ecc, n_x, bad, rate = kernels.growth_scan(
        g.indptr, g.indices, g.degrees, vertices, cap, float(theta), float(a))
    return GrowthReport(theta, a, vertices, ecc, n_x, bad, rate)


@dataclass(frozen=True)
class BallBound:
    n_x: int
    ok_through: int
    ok: bool


def verify_ball_degree_bound(g: Graph, profile: RepulsionProfile, x: int) -> BallBound:
    rep = verify_growth(g, profile, 1.0, [x], a=math.inf)
    n_x, ecc = int(rep.n_x[0]), int(rep.eccentricity[0])
    return BallBound(n_x, ecc, bool(rep.ball_bound_ok[0]))


def verify_sphere_growth(g: Graph, profile: RepulsionProfile, theta: float, x: int) -> GrowthReport:
    return verify_growth(g, profile, theta, [x])


@dataclass(frozen=True)
class KlmReport:
    alpha: float
    theta: float
    lhs: float
    rhs: float

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs * (1.0 + 1e-12)

    def to_dict(self):
        return {"alpha": self.alpha, "theta": self.theta, "lhs": self.lhs,
                "rhs": self.rhs, "slack": self.rhs - self.lhs, "passed": self.passed}


def verify_klm(g: Graph, profile: RepulsionProfile, alpha: float, theta: float) -> KlmReport:
    """Theta(alpha, theta) <= n_star^theta (e^alpha + 1) T_root(alpha, theta)."""
    lhs = theta_sum(g, alpha, theta).total
    rhs = profile.n_star ** theta * (math.exp(alpha) + 1.0) * t_x_sum(g, alpha, theta, g.root)
    return KlmReport(alpha, theta, lhs, rhs)

