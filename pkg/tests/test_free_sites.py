import numpy as np
import pytest

from softpd.evaluation import brute_force_balanced_lsa, random_instance
from softpd.formulations import build_pspd_fixed, build_soft, sigma_matrix
from softpd.free_sites import (
    LocalSolveError,
    initial_sites,
    local_optimize,
    normalization_violation,
)
from softpd.geometry import GeometryError, SiteSet, dataset_from_clusters, margin_of
from softpd.lp import solve


def test_initial_sites_satisfy_normalization(rng):
    data = random_instance(rng, 15, 3, 2)
    S = initial_sites(data)
    assert normalization_violation(S.sites, data.cluster_means()) == 0.0


def test_violation_measures_shortfall():
    means = np.array([[0.0], [1.0]])
    assert normalization_violation(np.array([[0.0], [0.25]]), means) == pytest.approx(0.75)
    assert normalization_violation(np.array([[0.0], [2.0]]), means) == 0.0


def test_symmetric_pair_spd(symmetric_pair):
    data, _ = symmetric_pair
    rep = local_optimize(data, "spd")
    assert rep.converged
    assert rep.epsilon >= 1.0 - 1e-6
    assert rep.violation <= 1e-6
    assert margin_of(rep.diagram, data) == pytest.approx(rep.epsilon, abs=1e-6)


def test_separable_lsa_converges_with_nonnegative_margin(rng):
    S = SiteSet(rng.normal(size=(3, 2)) * 3)
    data = brute_force_balanced_lsa(rng.normal(size=(9, 2)) * 3, S, (3, 3, 3))
    rep = local_optimize(data, "spd", sites0=SiteSet.means_of(data).scaled(10.0))
    assert rep.converged and rep.epsilon >= -1e-7


def test_mep_never_worse_than_start(rng):
    for _ in range(3):
        data = random_instance(rng, 12, 3, 2)
        start = initial_sites(data)
        base = solve(build_soft(data, start, 2, "mep")).objective
        rep = local_optimize(data, "mep", 2, start)
        assert rep.objective >= base - 1e-9
        assert rep.initial_objective == pytest.approx(base)
        assert rep.violation <= 1e-6
        assert rep.xi.shape == (data.n,)


def test_mme_variant_and_default_budget(rng):
    data = random_instance(rng, 10, 3, 2)
    rep = local_optimize(data, "mme")
    assert rep.t == round(0.1 * 2 * data.n)
    assert rep.xi.shape == (data.n, 3)
    assert rep.objective >= rep.initial_objective


def test_spd_objective_is_the_margin(five_point):
    data, _ = five_point
    start = initial_sites(data)
    base = solve(build_pspd_fixed(sigma_matrix(data, start))).objective
    rep = local_optimize(data, "spd", sites0=start)
    assert rep.t is None and rep.xi is None
    assert rep.objective == pytest.approx(rep.epsilon)
    assert rep.objective >= base - 1e-12


def test_mismatched_start_rejected(five_point):
    data, _ = five_point
    with pytest.raises(GeometryError):
        local_optimize(data, "spd", sites0=SiteSet([[0.0, 0.0], [1.0, 0.0]]))


def test_unbounded_start_is_reported():
    data = dataset_from_clusters([[[0.0], [9.0]], [[1.0], [10.0]]])
    with pytest.raises(ValueError):
        local_optimize(data, "mep", data.n)


def test_error_carries_last_iterate():
    err = LocalSolveError("boom", last=None)
    assert err.last is None and str(err) == "boom"
