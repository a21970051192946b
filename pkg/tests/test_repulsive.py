import math

import numpy as np
import pytest

from gibbsgraph.graph import Graph, path_graph, sphere_degree_sum, star_graph
from gibbsgraph.repulsive import (HubPlan, PlanError, RepulsionProfile, certify,
                                  corrupt_positions, generate, growth_constant_a, hub_set,
                                  place_hubs, realize, verify_ball_degree_bound, verify_growth,
                                  verify_klm, zeta_tail)


def test_phi_values():
    assert RepulsionProfile(3, 1.0, 0.3).phi(math.e ** math.e) == pytest.approx(math.e, rel=1e-14)
    p = RepulsionProfile(3, 10.0, 1.0)
    # 10 ln b (ln ln b)^2, evaluated by hand
    assert p.phi(4) == pytest.approx(1.47904, abs=1e-5)
    assert p.phi(5) == pytest.approx(3.6448, abs=1e-4)
    assert p.phi(40) == pytest.approx(62.8536, abs=1e-4)
    with pytest.raises(ValueError):
        p.phi(3.5)


def test_phi_inverse():
    assert RepulsionProfile(3, 1.0, 2.0).phi_inverse(math.e) == pytest.approx(math.e ** math.e, rel=1e-10)
    p = RepulsionProfile(3, 10.0, 1.0)
    b = np.exp(np.linspace(math.log(4), 40, 200))
    assert np.allclose(p.phi_inverse(p.phi(b)), b, rtol=1e-8, atol=0)
    assert p.phi_inverse(3.6448381731183) == pytest.approx(5.0, rel=1e-10)
    assert np.all(np.diff(p.phi(b)) > 0)
    with pytest.raises(ValueError):
        p.phi_inverse(1.0)


def test_huge_inverse_does_not_overflow_bisection():
    p = RepulsionProfile(4, 5.0, 0.5)
    assert p.phi_inverse(1e6) > 1e30
    assert np.isinf(p.degree_cap(1e9)[0]) or p.degree_cap(1e9)[0] > 1e100


@pytest.mark.parametrize("n_star,ups,eps,ok", [(3, 10, 1, True), (3, 5, 1, False),
                                               (3, 5, 0.5, True), (4, 5, 1, True)])
def test_kk_admissibility(n_star, ups, eps, ok):
    assert RepulsionProfile(n_star, ups, eps).admissible is ok


def test_hub_set():
    assert hub_set(path_graph(6), 3).size == 0
    assert hub_set(star_graph(5), 3).tolist() == [0]


def spaced_hubs(gap):
    """Ray with two degree-5 hubs ``gap`` apart."""
    plan = HubPlan((5, 5), "ray", gap + 4)
    return realize(plan, [2, 2 + gap])


def test_certify_examples(profile):
    bad = certify(spaced_hubs(3), profile)
    assert not bad.passed and bad.violations[0].distance == 3
    assert certify(spaced_hubs(4), profile).passed
    assert certify(path_graph(9), profile).passed
    assert not certify(path_graph(9), RepulsionProfile(3, 5.0, 1.0)).passed


def test_generate_two_hub(profile, two_hub):
    hubs = hub_set(two_hub, 3)
    assert len(hubs) == 2 and all(two_hub.degree(int(h)) == 5 for h in hubs)
    assert two_hub.distances(int(hubs[0]))[hubs[1]] >= 5
    assert certify(two_hub, profile).passed


def test_generate_is_seeded(profile):
    plan = HubPlan((4, 5, 6), "tree", 7)
    a, b = generate(profile, plan, 3), generate(profile, plan, 3)
    assert a.digest() == b.digest()


def test_infeasible_plans(profile):
    with pytest.raises(PlanError):
        generate(profile, HubPlan((5, 40), "ray", 63))
    g = generate(profile, HubPlan((5, 40), "ray", 64))
    assert certify(g, profile).passed
    with pytest.raises(PlanError):
        generate(profile, HubPlan((3, 5), "ray", 30))      # degree 3 is not a hub


def test_no_hub_plan(profile):
    g = generate(profile, HubPlan((), "ray", 10))
    assert g.num_vertices == 11 and certify(g, profile).passed


@pytest.mark.parametrize("backbone,radius", [("ray", 40), ("tree", 10)])
def test_corrupted_copy_fails(profile, backbone, radius):
    plan = HubPlan((5, 6, 7), backbone, radius)
    pos = place_hubs(profile, plan, 1)
    assert certify(realize(plan, pos), profile).passed
    bad, moved = corrupt_positions(profile, plan, pos, 1)
    assert sum(a != b for a, b in zip(pos, bad)) == 1
    assert not certify(realize(plan, bad), profile).passed


def test_zeta_tail():
    val, err = zeta_tail(1, 1.0)
    assert abs(val - math.pi**2 / 6) < 1e-10 and err < 1e-9
    # a coarser independent bracket must contain it
    k = np.arange(1, 2001, dtype=float)
    lo = math.fsum(k**-2.0) + 1 / 2001
    hi = math.fsum(k**-2.0) + 1 / 2000
    assert lo <= val <= hi


def test_growth_constant():
    c = growth_constant_a(RepulsionProfile(3, 10.0, 1.0), 1.0)
    assert c.sigma == math.e and c.k_star == 1
    expect = 2 * math.e + math.log(3) + 2 * math.e / 10 * math.pi**2 / 6
    assert c.a == pytest.approx(expect, rel=1e-12)
    assert c.a == pytest.approx(7.4295, abs=1e-4)
    assert growth_constant_a(RepulsionProfile(3, 0.5, 1.0), 1.0).sigma == 4.0


def test_growth_on_two_hub(profile, two_hub):
    rep = verify_growth(two_hub, profile, 1.0)
    assert rep.passed
    assert np.all(rep.n_x <= rep.eccentricity)


def test_growth_scan_matches_sphere_sums(profile, two_hub):
    rep = verify_growth(two_hub, profile, 1.0, vertices=[0, 5], a=1e9)
    for i, x in enumerate([0, 5]):
        ecc = int(rep.eccentricity[i])
        rates = [math.log(sphere_degree_sum(two_hub, 1.0, n, x)) / n for n in range(1, ecc + 1)]
        assert rep.max_rate[i] == pytest.approx(max(rates), rel=1e-12)


def test_ball_bound_hub_free(profile):
    b = verify_ball_degree_bound(path_graph(12), profile, 4)
    assert b.n_x <= 1


def test_klm(profile, abc, two_hub):
    r = verify_klm(abc, profile, math.log(2), 1.0)
    assert r.lhs == 6.0 and r.rhs == pytest.approx(45.0, rel=1e-15) and r.passed
    for a in (0.5, 1.0, 2.0):
        for t in (0.5, 1.0):
            assert verify_klm(two_hub, profile, a, t).passed
