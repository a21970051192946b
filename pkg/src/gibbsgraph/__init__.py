"""Gibbs random fields on graphs with unbounded vertex degrees."""
from .graph import (BudgetExceeded, Graph, GraphError, cycle_graph, path_graph, star_graph,
                    path_census, randic_m_theta, simple_path_census, t_x_sum, tempered_norm,
                    theta_sum)
from .repulsive import (HubPlan, PlanError, RepulsionProfile, certify, generate,
                        growth_constant_a, verify_growth, verify_klm)
from .potentials import ModelParams, PairPotential, SitePotential, builtin_potentials
from .gibbs import (SamplerState, brute_force_expectation, dlr_consistency_check,
                    exp_norm_monitor, mcmc_run, single_site_exp_moment, single_site_partition,
                    verify_lemma1)

__version__ = "0.1.0"
