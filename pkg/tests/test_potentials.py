import dataclasses
import math

import numpy as np
import pytest

from gibbsgraph.graph import Graph, star_graph
from gibbsgraph.potentials import (ModelParams, PairPotential, SitePotential, admissibility,
                                   builtin_potentials, capacity_C, check_coercivity,
                                   check_envelope, gamma_and_Gamma, gamma_const,
                                   kappa_envelope_rhs, young_constant)
from gibbsgraph.quadrature import DivergentIntegral

from conftest import CAT, make_model


@pytest.mark.parametrize("kind", ["zero", "bilinear", "gradient", "biquadratic"])
def test_builtin_envelopes_hold(kind):
    W = CAT["pair"][kind]() if kind == "zero" else CAT["pair"][kind](-1.7)
    rep = check_envelope(W)
    assert rep.passed, rep


@pytest.mark.parametrize("name", ["double_well", "quartic", "sextic"])
def test_builtin_coercivity_holds(name):
    assert check_coercivity(CAT["site"][name]()).passed


def test_envelope_slack_examples():
    W = CAT["pair"]["bilinear"](1.0)
    assert check_envelope(W, U=10.0, n=201).min_slack == pytest.approx(0.0, abs=1e-15)
    dw = check_coercivity(CAT["site"]["double_well"](), U=10.0, n=201)
    assert dw.min_slack == pytest.approx(0.0, abs=1e-15)
    assert abs(abs(dw.argmin[0]) - 1.0) < 1e-12


def test_wrong_constants_fail():
    W = CAT["pair"]["bilinear"](1.0)
    assert not check_envelope(dataclasses.replace(W, J_W=0.5)).passed
    V = CAT["site"]["double_well"]()
    assert not check_coercivity(dataclasses.replace(V, c_V=0.25)).passed


def test_young_rhs_example():
    W = CAT["pair"]["bilinear"](1.0)
    # 1*(8+8) + 0 + 2*(3-2)*(1/6)^3*(2/1)^2 = 16 + 8/216
    assert kappa_envelope_rhs(1.0, 3.0, 2.0, 2.0, W) == pytest.approx(16 + 8 / 216, rel=1e-15)
    assert kappa_envelope_rhs(1.0, 3.0, 0.0, 0.0, W) == young_constant(W, 1.0, 3.0)
    with pytest.raises(ValueError):
        young_constant(W, 1.0, 2.0)


def test_young_rhs_randomized(rng):
    for kind in ("bilinear", "gradient", "biquadratic"):
        W = CAT["pair"][kind](rng.uniform(0.1, 3.0))
        n = 20000
        u, v = rng.uniform(-20, 20, (2, n))
        kappa = np.exp(rng.uniform(-4, 2, n))
        p = W.r + rng.uniform(0.05, 4.0, n)
        rhs = np.array([kappa_envelope_rhs(k, pp, uu, vv, W) for k, pp, uu, vv in zip(kappa, p, u, v)])
        assert np.all(rhs - np.abs(W(u, v)) >= -1e-12 * (1 + rhs))


def test_gamma_examples():
    W = PairPotential("bilinear", 1.0, 0.0, 1.0, 2.0)
    assert gamma_const(1.0, 4.0, W) == pytest.approx(0.25, rel=1e-15)
    g = Graph(3, [(0, 1), (1, 2)])
    gam, Gam = gamma_and_Gamma(1.0, 4.0, W, g, 0, 1)
    assert Gam == pytest.approx(gam * 2, rel=1e-15)      # degrees 1 and 2, exponent 1
    edge = Graph(2, [(0, 1)])
    assert gamma_and_Gamma(1.0, 4.0, W, edge, 0, 1)[1] == gam
    with pytest.raises(ValueError):
        gamma_and_Gamma(1.0, 4.0, W, g, 0, 2)


def test_gamma_degree_product_six():
    W = CAT["pair"]["gradient"](0.5)
    g = Graph(6, [(0, 1), (0, 2), (1, 3), (1, 4), (1, 5)])   # n(0)=2, n(1)=4
    gam, Gam = gamma_and_Gamma(0.3, 4.0, W, g, 0, 1)
    assert Gam == pytest.approx(gam * 8, rel=1e-14)


def test_gamma_large_beta_limit():
    W = PairPotential("bilinear", 1.0, 0.4, 1.0, 2.0)
    vals = [gamma_const(b, 3.0, W) - W.I_W for b in (1e2, 1e4, 1e6)]
    assert vals[0] > vals[1] > vals[2] > 0 and vals[2] < 1e-9


def test_capacity_cv_shift_is_additive():
    V = CAT["site"]["quartic"]()
    c0 = capacity_C(0.05, 0.3, 3.0, V)
    c1 = capacity_C(0.05, 0.3, 3.0, dataclasses.replace(V, c_V=1.0))
    assert c1.value - c0.value == 1.0


def test_capacity_monotone():
    V = CAT["site"]["double_well"]()
    lams = [capacity_C(0.05, lam, 3.0, V).value for lam in (0.1, 0.2, 0.4)]
    betas = [capacity_C(b, 0.3, 3.0, V).value for b in (0.01, 0.05, 0.1)]
    assert lams == sorted(lams) and betas == sorted(betas)


def test_capacity_divergent():
    with pytest.raises(DivergentIntegral):
        capacity_C(0.1, 0.2, 4.5, CAT["site"]["quartic"]())


def test_admissibility_examples():
    m = make_model(theta=2.0, alpha_bar=1.0, beta=0.05, lam=0.5)
    assert m.p0 == 3.0 and m.p_eff == 3.0
    assert admissibility(m).passed
    edge = make_model(theta=1.0)        # q = 4 = r + r/theta: strict inequality fails
    rep = admissibility(edge)
    assert not rep.checks["q_above_p0"]
    # threshold 1/(2e) = 0.18394
    assert not admissibility(make_model(beta=0.1840, lam=1.0)).checks["beta_lambda"]
    assert admissibility(make_model(beta=0.1839, lam=1.0)).checks["beta_lambda"]


def test_admissibility_vertex_sums():
    m = make_model(beta=0.09, lam=0.5)
    rep = admissibility(m, star_graph(1))     # single edge: 2*0.09/0.5 = 0.36
    assert rep.worst_vertex_sum == pytest.approx(0.36) and rep.checks["vertex_sums"]
    assert admissibility(make_model(beta=0.18, lam=0.36), star_graph(1)).checks["vertex_sums"]
    assert not admissibility(make_model(beta=0.2, lam=0.36), star_graph(1)).checks["vertex_sums"]


def test_model_json_round_trip(tmp_path):
    m = make_model("gradient", "sextic", J=0.7, theta=3.0, p=5.5)
    d = m.to_dict()
    assert ModelParams.from_dict(d).to_dict() == d
    short = {"pair": {"kind": "bilinear", "J": 0.3}, "site": {"name": "double_well"}}
    assert ModelParams.from_dict(short).W.J_W == pytest.approx(0.3)


def test_unknown_kind():
    with pytest.raises(ValueError):
        PairPotential("cubic", 1.0, 0.0, 1.0, 2.0)
    with pytest.raises(ValueError):
        SitePotential((0, 1), -1.0, 0.0, 4.0)
