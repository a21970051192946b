import math

import numpy as np
import pytest
from scipy import special

from gibbsgraph import gibbs as G
from gibbsgraph.graph import Graph, path_graph, star_graph
from gibbsgraph.potentials import Gamma_table, capacity_C

from conftest import make_model, small_graphs


@pytest.fixture
def edge():
    return Graph(2, [(0, 1)])


def quartic_free():
    return make_model("zero", "quartic")


def site_moment(g, model, x, xi, k):
    """E[u^k] under the single-site law, by an independent fine Riemann sum."""
    nb = xi[g.neighbors(x)]
    u = np.linspace(-8, 8, 800001)
    logd = -model.V(u) - model.W(u[:, None], nb[None, :]).sum(axis=1)
    w = np.exp(logd - logd.max())
    return float(np.sum(w * u**k) / np.sum(w))


# -- Hamiltonian -------------------------------------------------------------------

def test_hamiltonian_edge_example(edge):
    m = make_model("bilinear", "quartic", J=1.0)
    assert G.local_hamiltonian(edge, m, [0, 1], [1.0, 2.0], np.zeros(2)) == 19.0


def test_hamiltonian_zero_boundary_kills_bilinear(model):
    g = path_graph(3)
    assert G.local_hamiltonian(g, model, [1], [0.7], np.zeros(3)) == pytest.approx(model.V(0.7))


def test_hamiltonian_additive(model):
    g = path_graph(5)
    xi = np.linspace(-1, 1, 5)
    h = G.local_hamiltonian(g, model, [0, 3], [0.2, -0.9], xi)
    parts = (G.local_hamiltonian(g, model, [0], [0.2], xi)
             + G.local_hamiltonian(g, model, [3], [-0.9], xi))
    assert h == pytest.approx(parts, rel=1e-15)


def test_hamiltonian_rejects_bad_input(model):
    g = path_graph(3)
    with pytest.raises(ValueError):
        G.local_hamiltonian(g, model, [5], [0.0], np.zeros(3))
    with pytest.raises(ValueError):
        G.local_hamiltonian(g, model, [0, 1], [0.0], np.zeros(3))


# -- single-site quadrature ---------------------------------------------------------

def test_partition_quartic(edge):
    z = G.single_site_partition(edge, quartic_free(), 0, np.zeros(2))
    assert abs(z - special.gamma(0.25) / 2) < 1e-10


def test_partition_boundary_flip_symmetry():
    g = star_graph(3)
    m = make_model("gradient", "double_well", J=0.8)
    xi = np.array([0.0, 0.4, -1.1, 2.0])
    assert G.single_site_partition(g, m, 0, xi) == pytest.approx(
        G.single_site_partition(g, m, 0, -xi), rel=1e-12)


def test_partition_constant_shift(edge):
    m = make_model("bilinear", "double_well")
    shifted = type(m)(m.W, m.V.shifted(0.75), m.theta, m.alpha_bar, m.beta, m.lam)
    xi = np.array([0.0, 0.9])
    z0 = G.single_site_partition(edge, m, 0, xi)
    assert G.single_site_partition(edge, shifted, 0, xi) == pytest.approx(z0 * math.exp(-0.75), rel=1e-11)


def test_exp_moment_lambda_zero(edge, model):
    assert abs(G.single_site_exp_moment(0.0, 3.0, edge, model, 0, np.array([0.0, 1.3])) - 1) < 1e-12


def test_exp_moment_against_riemann(edge):
    val = G.single_site_exp_moment(0.1, 3.0, edge, quartic_free(), 0, np.zeros(2))
    u = np.linspace(-6, 6, 600001)
    ref = np.sum(np.exp(0.1 * np.abs(u) ** 3 - u**4)) / np.sum(np.exp(-u**4))
    assert val == pytest.approx(ref, rel=1e-9)


def test_exp_moment_monotone(edge, model):
    xi = np.array([0.0, -0.5])
    a = G.single_site_exp_moment(0.1, 3.0, edge, model, 0, xi)
    b = G.single_site_exp_moment(0.2, 3.0, edge, model, 0, xi)
    assert b >= a


def test_lemma1_rhs_zero_boundary(two_hub, model):
    x = int(np.argmax(two_hub.degrees))
    xi = np.zeros(two_hub.num_vertices)
    beta, lam, p = 0.05, 0.5, 3.0
    gam = Gamma_table(beta, p, model.W, two_hub)
    at_x = (two_hub.edges == x).any(axis=1)
    expect = capacity_C(beta, lam, p, model.V).value + gam[at_x].sum()
    assert G.lemma1_log_rhs(beta, lam, p, two_hub, model, x, xi) == pytest.approx(expect, rel=1e-14)


@pytest.mark.parametrize("g", small_graphs(), ids=lambda g: repr(g))
def test_lemma1_randomized(g, rng):
    for pair, site, theta in (("bilinear", "double_well", 2.0), ("gradient", "quartic", 2.5),
                              ("biquadratic", "sextic", 3.0)):
        m = make_model(pair, site, J=0.4, theta=theta)
        beta, lam, p = G.random_admissible(m, rng)
        x = int(rng.integers(g.num_vertices))
        xi = G.tempered_boundary(g, "noise", 1.5, seed=int(rng.integers(1000)))
        chk = G.verify_lemma1(beta, lam, p, g, m, x, xi)
        assert chk.passed, chk.to_dict()


# -- sampling -------------------------------------------------------------------------

def test_sample_site_quartic_moments(edge):
    m = quartic_free()
    rng = np.random.default_rng(1)
    draws = np.array([G.sample_site(edge, m, 0, np.zeros(2), rng) for _ in range(20000)])
    se = draws.std() / math.sqrt(draws.size)
    assert abs(draws.mean()) < 3 * se
    m2 = special.gamma(0.75) / special.gamma(0.25)          # E u^2 for density ~ exp(-u^4)
    se2 = (draws**2).std() / math.sqrt(draws.size)
    assert abs((draws**2).mean() - m2) < 3 * se2


def test_sample_site_is_seeded(edge, model):
    a = [G.sample_site(edge, model, 0, np.array([0.0, 1.0]), np.random.default_rng(9)) for _ in range(3)]
    b = [G.sample_site(edge, model, 0, np.array([0.0, 1.0]), np.random.default_rng(9)) for _ in range(3)]
    assert a == b


def test_mcmc_single_site_matches_quadrature(model):
    g = star_graph(3)
    xi = np.array([0.0, 0.8, -0.3, 1.5])
    st = G.mcmc_run(g, model, [0], xi, 20000, G.SamplerState(seed=4))
    for k, est, se in ((1, st.mean[0], st.mean_se[0]), (2, st.second[0], st.second_se[0])):
        assert abs(est - site_moment(g, model, 0, xi, k)) < 3.5 * se


def test_mcmc_leaves_boundary_alone(model):
    g = path_graph(6)
    xi = np.linspace(0.5, -0.5, 6)
    st = G.mcmc_run(g, model, [2, 3], xi, 500, G.SamplerState(seed=1, scan="random"))
    assert np.array_equal(st.final[[0, 1, 4, 5]], xi[[0, 1, 4, 5]])


def test_mcmc_independent_sites_uncorrelated():
    g = path_graph(2)
    st = G.mcmc_run(g, quartic_free(), [0, 1], np.zeros(2), 20000, G.SamplerState(seed=2),
                    pairs=[(0, 1)])
    est = st.pair_moments[(0, 1)]
    assert abs(est.mean) < 3.5 * est.stderr


def test_mcmc_pair_moment_against_tensor_quadrature(edge):
    m = make_model("bilinear", "quartic", J=0.8)
    st = G.mcmc_run(edge, m, [0, 1], np.zeros(2), 30000, G.SamplerState(seed=8), pairs=[(0, 1)])
    exact = G.brute_force_expectation(edge, m, [0, 1], np.zeros(2), G.MonomialProduct(((0, 1), (1, 1))))
    est = st.pair_moments[(0, 1)]
    assert exact < 0 and abs(est.mean - exact) < 3.5 * est.stderr


def test_mcmc_deterministic(model):
    g = path_graph(4)
    runs = [G.mcmc_run(g, model, [1, 2], np.zeros(4), 300, G.SamplerState(seed=3, scan="random"),
                       keep_trace=True) for _ in range(2)]
    assert np.array_equal(runs[0].trace, runs[1].trace)


def test_sampler_state_validation():
    with pytest.raises(ValueError):
        G.SamplerState(scan="diagonal")
    with pytest.raises(ValueError):
        G.SamplerState(burn_in=1.0)


# -- tensor quadrature and DLR ----------------------------------------------------------

def test_brute_force_normalization(model):
    g = path_graph(4)
    xi = np.array([0.3, 0.0, 0.0, -1.2])
    one = G.brute_force_expectation(g, model, [1, 2], xi, lambda pts: np.ones(len(pts)))
    assert abs(one - 1.0) < 1e-14


def test_brute_force_single_site_agrees_with_line_quadrature(model):
    g = star_graph(2)
    xi = np.array([0.0, 0.5, -0.25])
    bf = G.brute_force_expectation(g, model, [0], xi, G.MonomialProduct(((0, 2),)))
    assert bf == pytest.approx(site_moment(g, model, 0, xi, 2), rel=1e-8)


def test_brute_force_odd_function_vanishes():
    g = path_graph(3)
    m = make_model("gradient", "double_well")
    val = G.brute_force_expectation(g, m, [0, 1, 2], np.zeros(3), G.TanhLinear(((0, 1.0), (2, 0.5))))
    assert abs(val) < 1e-12


def test_brute_force_volume_guard(model):
    with pytest.raises(G.BudgetExceeded):
        G.brute_force_expectation(path_graph(5), model, [0, 1, 2, 3], np.zeros(5), lambda p: p[:, 0])


def test_dlr_delta_equals_lambda(model):
    g = path_graph(4)
    xi = G.tempered_boundary(g, "noise", 1.0, seed=2)
    rep = G.dlr_consistency_check(g, model, [1, 2], [1, 2], xi, [G.TanhLinear(((1, 1.0), (2, -0.3)))])
    assert rep.max_discrepancy <= 1e-12


def test_dlr_edge_bilinear_quartic(edge):
    m = make_model("bilinear", "quartic", J=0.9)
    rep = G.dlr_consistency_check(edge, m, [0, 1], [0], np.zeros(2),
                                  [G.TanhLinear(((0, 1.0), (1, 1.0)), 0.3)])
    assert rep.passed and rep.max_discrepancy <= 1e-6


def test_dlr_product_measure():
    g = path_graph(5)
    xi = G.tempered_boundary(g, "decay", 1.2, 0.4)
    rep = G.dlr_consistency_check(g, quartic_free(), [1, 2, 3], [2], xi,
                                  [G.GaussianBump(((1, 0.5, 0.2), (2, 1.0, -0.4)))])
    assert rep.max_discrepancy <= 1e-10


# -- exp-norm monitor ----------------------------------------------------------------

def test_monitor_lambda_zero_is_flat(model):
    g = path_graph(8)
    curve = G.exp_norm_monitor(g, model, [[0, 1], [0, 1, 2, 3]], np.zeros(8), 200,
                               G.SamplerState(seed=1), lam=0.0)
    assert curve.estimates == [1.0, 1.0]


def test_monitor_product_oracle(tmp_path):
    g = path_graph(4)
    m = quartic_free()
    lam, p, alpha = 0.3, 3.0, 1.0
    xi = G.tempered_boundary(g, "decay", 0.5, 0.5)
    vol = [0, 1]
    curve = G.exp_norm_monitor(g, m, [vol], xi, 20000, G.SamplerState(seed=6), lam=lam, p=p,
                               alpha=alpha, ncut=1e6)
    w = np.exp(-alpha * g.distances(g.root))
    u = np.linspace(-6, 6, 600001)
    expect = math.exp(lam * sum(abs(xi[v]) ** p * w[v] for v in (2, 3)))
    for v in vol:
        expect *= np.sum(np.exp(lam * w[v] * np.abs(u) ** p - u**4)) / np.sum(np.exp(-u**4))
    assert abs(curve.estimates[0] - expect) < 3.5 * curve.stderrs[0]
    curve.to_csv(tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_text().splitlines()[0] == "volume_size,estimate,stderr"


def test_monitor_requires_nested(model):
    with pytest.raises(ValueError):
        G.exp_norm_monitor(path_graph(4), model, [[0, 1], [2]], np.zeros(4), 100)


def test_bfs_prefix_nested(two_hub):
    a, b = G.bfs_prefix(two_hub, 5), G.bfs_prefix(two_hub, 12)
    assert set(a) <= set(b) and two_hub.root in a


# -- multiple Hoelder ----------------------------------------------------------------

from hypothesis import given, settings, strategies as st  # noqa: E402


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 5), st.integers(1, 8), st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
def test_multiple_holder_property(k, m, seed, total):
    rng = np.random.default_rng(seed)
    mu = rng.dirichlet(np.ones(m))
    phis = rng.exponential(1.0, (k, m)) ** rng.uniform(0.1, 4)
    alphas = rng.dirichlet(np.ones(k)) * total
    lhs, rhs = G.multiple_holder(mu, phis, alphas)
    assert lhs <= rhs * (1 + 1e-12)


def test_multiple_holder_equality_cases():
    mu = np.array([0.2, 0.3, 0.5])
    phi = np.array([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]])
    lhs, rhs = G.multiple_holder(mu, phi, [0.5, 0.5])     # identical factors, sum 1
    assert lhs == pytest.approx(rhs, rel=1e-15)
    lhs, rhs = G.multiple_holder(mu, phi, [0.0, 0.0])
    assert lhs == rhs == 1.0
