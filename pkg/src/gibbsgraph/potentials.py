"""Pair and site potentials, their declared envelope constants, and the derived bounds."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .graph import Graph
from .quadrature import Envelope, QuadratureSpec, integrate_line

PAIR_KINDS = {
    "zero": kernels.W_ZERO,
    "bilinear": kernels.W_BILINEAR,
    "gradient": kernels.W_GRADIENT,
    "biquadratic": kernels.W_BIQUADRATIC,
}


def abs_pow(u, p):
    """|u|^p with 0^p = 0 for every p > 0."""
    return np.abs(u) ** p


@dataclass(frozen=True)
class PairPotential:
    """W(u, v) with declared envelope |W| <= [I_W + J_W (|u|^r + |v|^r)] / 2.

    kinds: ``zero``; ``bilinear`` J u v; ``gradient`` J (u - v)^2 / 2;
    ``biquadratic`` J u^2 v^2.
    """

    kind: str
    J: float
    I_W: float
    J_W: float
    r: float

    def __post_init__(self):
        if self.kind not in PAIR_KINDS:
            raise ValueError(f"unknown pair potential {self.kind!r}")
        if self.I_W < 0 or self.J_W < 0 or self.r <= 0:
            raise ValueError("need I_W >= 0, J_W >= 0, r > 0")

    @property
    def code(self) -> int:
        return PAIR_KINDS[self.kind]

    def __call__(self, u, v):
        u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
        if self.kind == "bilinear":
            return self.J * u * v
        if self.kind == "gradient":
            return 0.5 * self.J * (u - v) ** 2
        if self.kind == "biquadratic":
            return self.J * u * u * v * v
        return np.zeros(np.broadcast(u, v).shape)

    def envelope(self, u, v):
        return 0.5 * (self.I_W + self.J_W * (abs_pow(u, self.r) + abs_pow(v, self.r)))


@dataclass(frozen=True)
class SitePotential:
    """Polynomial V(u) = sum_k coeffs[k] u^k with declared V(u) >= a_V |u|^q - c_V."""

    coeffs: tuple
    a_V: float
    c_V: float
    q: float
    name: str = "polynomial"

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if self.a_V <= 0 or self.c_V < 0 or self.q <= 0:
            raise ValueError("need a_V > 0, c_V >= 0, q > 0")

    @property
    def coeff_array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=float)

    def __call__(self, u):
        return np.polynomial.polynomial.polyval(np.asarray(u, dtype=float), self.coeff_array)

    def lower_bound(self, u):
        return self.a_V * abs_pow(u, self.q) - self.c_V

    def shifted(self, c: float) -> "SitePotential":
        """Same potential plus the constant ``c`` (c_V follows the shift)."""
        coeffs = list(self.coeffs) or [0.0]
        coeffs[0] += c
        return SitePotential(tuple(coeffs), self.a_V, max(self.c_V - c, 0.0), self.q, self.name)


def builtin_potentials() -> dict:
    """Catalog of potentials with hand-checked constants.

    double well: u^4 - u^2 - (u^4/2 - 1/2) = (u^2 - 1)^2 / 2 >= 0;
    bilinear: |J u v| <= |J| (u^2 + v^2) / 2;  gradient: (u - v)^2 <= 2u^2 + 2v^2;
    biquadratic: |J| u^2 v^2 <= |J| (u^4 + v^4) / 2.
    """
    return {
        "pair": {
            "zero": lambda J=0.0: PairPotential("zero", 0.0, 0.0, 0.0, 2.0),
            "bilinear": lambda J=1.0: PairPotential("bilinear", J, 0.0, abs(J), 2.0),
            "gradient": lambda J=1.0: PairPotential("gradient", J, 0.0, 2.0 * abs(J), 2.0),
            "biquadratic": lambda J=1.0: PairPotential("biquadratic", J, 0.0, abs(J), 4.0),
        },
        "site": {
            "double_well": lambda: SitePotential((0, 0, -1, 0, 1), 0.5, 0.5, 4.0, "double_well"),
            "quartic": lambda: SitePotential((0, 0, 0, 0, 1), 1.0, 0.0, 4.0, "quartic"),
            "sextic": lambda: SitePotential((0, 0, 0, 0, 0, 0, 1), 1.0, 0.0, 6.0, "sextic"),
        },
    }


@dataclass(frozen=True)
class ModelParams:
    W: PairPotential
    V: SitePotential
    theta: float = 2.0
    alpha_bar: float = 1.0
    beta: float = 0.05
    lam: float = 0.5
    p: float | None = None       # defaults to p_0 = r + r/theta
    alpha: float | None = None   # weight rate of the tempered norm, defaults to alpha_bar

    @property
    def p0(self) -> float:
        return self.W.r + self.W.r / self.theta

    @property
    def p_eff(self) -> float:
        return self.p0 if self.p is None else self.p

    @property
    def alpha_eff(self) -> float:
        return self.alpha_bar if self.alpha is None else self.alpha

    @property
    def env(self) -> np.ndarray:
        """(I_W, J_W, r, a_V, c_V, q) in the layout the kernels expect."""
        return np.array([self.W.I_W, self.W.J_W, self.W.r, self.V.a_V, self.V.c_V, self.V.q])

    def to_dict(self) -> dict:
        return {
            "pair": {"kind": self.W.kind, "J": self.W.J, "I_W": self.W.I_W,
                     "J_W": self.W.J_W, "r": self.W.r},
            "site": {"name": self.V.name, "coeffs": list(self.V.coeffs), "a_V": self.V.a_V,
                     "c_V": self.V.c_V, "q": self.V.q},
            "theta": self.theta, "alpha_bar": self.alpha_bar, "beta": self.beta,
            "lambda": self.lam, "p": self.p_eff, "alpha": self.alpha_eff,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        cat = builtin_potentials()
        pair = d["pair"]
        if "J_W" in pair:
            W = PairPotential(pair["kind"], float(pair.get("J", 0.0)), float(pair.get("I_W", 0.0)),
                              float(pair["J_W"]), float(pair["r"]))
        else:
            W = cat["pair"][pair["kind"]](float(pair.get("J", 1.0)))
        site = d["site"]
        if "coeffs" in site:
            V = SitePotential(tuple(site["coeffs"]), float(site["a_V"]), float(site["c_V"]),
                              float(site["q"]), site.get("name", "polynomial"))
        else:
            V = cat["site"][site["name"]]()
        return cls(W, V, float(d.get("theta", 2.0)), float(d.get("alpha_bar", 1.0)),
                   float(d.get("beta", 0.05)), float(d.get("lambda", 0.5)),
                   None if d.get("p") is None else float(d["p"]),
                   None if d.get("alpha") is None else float(d["alpha"]))

    @classmethod
    def load(cls, path) -> "ModelParams":
        return cls.from_dict(json.loads(Path(path).read_text()))


# -- sampled checks of the declared constants -----------------------------------

@dataclass
class SlackReport:
    name: str
    min_slack: float
    argmin: tuple
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.min_slack >= -self.tolerance

    def to_dict(self):
        return {"check": self.name, "min_slack": self.min_slack,
                "argmin": [float(a) for a in self.argmin], "passed": self.passed}


def check_envelope(W: PairPotential, U: float = 50.0, n: int = 2001, rtol: float = 1e-12) -> SlackReport:
    """Minimum of envelope - |W| over a uniform n x n grid on [-U, U]^2.

    Slack is measured relative to 1 + envelope, so rounding in large values does not
    register as a failure.
    """
    g = np.linspace(-U, U, n)
    u, v = np.meshgrid(g, g, indexing="ij")
    bound = W.envelope(u, v)
    slack = (bound - np.abs(W(u, v))) / (1.0 + bound)
    k = np.unravel_index(int(slack.argmin()), slack.shape)
    return SlackReport("pair_envelope", float(slack[k]), (g[k[0]], g[k[1]]), rtol)


def check_coercivity(V: SitePotential, U: float = 50.0, n: int = 2001, rtol: float = 1e-12) -> SlackReport:
    g = np.linspace(-U, U, n)
    val = V(g)
    slack = (val - V.lower_bound(g)) / (1.0 + np.abs(val))
    k = int(slack.argmin())
    return SlackReport("site_coercivity", float(slack[k]), (g[k],), rtol)


# -- explicit constants -----------------------------------------------------------

def young_constant(W: PairPotential, kappa: float, p: float) -> float:
    """2 (p - r) (J_W / 2p)^(p/(p-r)) (r / kappa)^(r/(p-r))."""
    r = W.r
    if p <= r:
        raise ValueError(f"need p > r (p={p}, r={r})")
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if W.J_W == 0:
        return 0.0
    # in logs: the two powers over/underflow separately when p is close to r
    log_c = (math.log(2.0 * (p - r)) + p / (p - r) * math.log(W.J_W / (2.0 * p))
             + r / (p - r) * math.log(r / kappa))
    return math.exp(log_c) if log_c < 709.0 else math.inf


def kappa_envelope_rhs(kappa: float, p: float, u, v, W: PairPotential):
    """kappa (|u|^p + |v|^p) + I_W/2 + Young constant; bounds |W(u, v)| from above."""
    return kappa * (abs_pow(u, p) + abs_pow(v, p)) + 0.5 * W.I_W + young_constant(W, kappa, p)


def gamma_const(beta: float, p: float, W: PairPotential) -> float:
    """gamma(beta, p) = I_W + 4 (p - r) (J_W / 2p)^(p/(p-r)) (r / beta)^(r/(p-r))."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return W.I_W + 2.0 * young_constant(W, beta, p)


def gamma_and_Gamma(beta: float, p: float, W: PairPotential, g: Graph, x: int, y: int):
    if y not in set(g.neighbors(x).tolist()):
        raise ValueError(f"{x} and {y} are not adjacent")
    gam = gamma_const(beta, p, W)
    return gam, gam * float(g.degree(x) * g.degree(y)) ** (W.r / (p - W.r))


def Gamma_table(beta: float, p: float, W: PairPotential, g: Graph) -> np.ndarray:
    """Gamma_xy for every edge, rows aligned with ``g.edges``."""
    gam = gamma_const(beta, p, W)
    d = g.degrees.astype(float)
    e = g.edges
    return gam * (d[e[:, 0]] * d[e[:, 1]]) ** (W.r / (p - W.r))


@dataclass(frozen=True)
class Capacity:
    value: float
    log_upper: float     # log of the integral of exp((lam + beta)|u|^p - a_V |u|^q)
    log_lower: float     # log of the integral of exp(-beta |u|^p - V(u))
    rel_error: float


def capacity_C(beta: float, lam: float, p: float, V: SitePotential,
               quad: QuadratureSpec = QuadratureSpec()) -> Capacity:
    """C = c_V + log int exp((lam+beta)|u|^p - a_V|u|^q) - log int exp(-beta|u|^p - V(u))."""
    if beta < 0 or lam < 0:
        raise ValueError("beta and lambda must be nonnegative")
    up = integrate_line(lambda u: (lam + beta) * abs_pow(u, p) - V.a_V * abs_pow(u, V.q),
                        Envelope(0.0, ((lam + beta, p),), V.a_V, V.q), quad)
    low = integrate_line(lambda u: -beta * abs_pow(u, p) - V(u),
                         Envelope(V.c_V, (), V.a_V, V.q), quad)
    err = up.rel_tail + up.rel_error + low.rel_tail + low.rel_error
    return Capacity(V.c_V + up.log_value - low.log_value, up.log_value, low.log_value, err)


@dataclass
class AdmissibilityReport:
    checks: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    worst_vertex_sum: float | None = None

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self):
        return {"checks": dict(self.checks), "notes": list(self.notes),
                "passed": self.passed, "worst_vertex_sum": self.worst_vertex_sum}


def admissibility(model: ModelParams, g: Graph | None = None) -> AdmissibilityReport:
    rep = AdmissibilityReport()
    p0, p, q = model.p0, model.p_eff, model.V.q
    rep.checks["q_above_p0"] = q > p0
    rep.checks["p_in_window"] = p0 <= p < q
    rep.checks["beta_lambda"] = 2.0 * model.beta * math.exp(model.alpha_bar) < model.lam
    rep.notes.append("alpha_bar is a modelling input; on a finite graph every alpha > 0 is summable")
    if g is not None:
        d = g.degrees.astype(float)
        owner = np.repeat(np.arange(g.num_vertices), g.degrees)
        terms = 2.0 * model.beta / (model.lam * d[owner] * d[g.indices])
        sums = np.bincount(owner, weights=terms, minlength=g.num_vertices)
        rep.worst_vertex_sum = float(sums.max())
        rep.checks["vertex_sums"] = bool(np.all(sums <= 1.0 + 1e-14))
    return rep
