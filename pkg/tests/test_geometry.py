import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from softpd.geometry import (
    Dataset,
    GeometryError,
    PowerDiagram,
    Separation,
    SiteSet,
    SoftSolution,
    dataset_from_clusters,
    extract_errors,
    gamma_from_weights,
    margin_of,
    pair_direction,
    slack_table,
    verify_separating,
    weights_from_gamma,
)

coords = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def test_pair_direction_axis_aligned():
    S = SiteSet([[0, 0], [5, 0]])
    u, dist = pair_direction(S, 0, 1)
    assert np.allclose(u, [1, 0]) and dist == 5
    u, dist = pair_direction(S, 1, 0)
    assert np.allclose(u, [-1, 0]) and dist == 5


def test_pair_direction_three_four_five():
    u, dist = pair_direction(SiteSet([[1, 1], [4, 5]]), 0, 1)
    assert np.allclose(u, [0.6, 0.8]) and dist == pytest.approx(5)


def test_pair_direction_rejects_same_index():
    with pytest.raises(GeometryError, match="degenerate site pair"):
        pair_direction(SiteSet([[0], [1]]), 1, 1)


def test_coincident_sites_rejected():
    with pytest.raises(GeometryError):
        SiteSet([[1.0, 2.0], [1.0, 2.0]])


@given(arrays(float, (3, 2), elements=coords))
def test_pair_direction_antisymmetric(s):
    try:
        S = SiteSet(s)
    except GeometryError:
        return
    u, d1 = pair_direction(S, 0, 2)
    v, d2 = pair_direction(S, 2, 0)
    assert np.allclose(u, -v) and d1 == pytest.approx(d2)
    assert np.linalg.norm(u) == pytest.approx(1.0)


@pytest.mark.parametrize(
    "site, w, gamma",
    [([0.0, 0.0], 0.0, 0.0), ([5.0, 0.0], 0.0, 12.5), ([5.0, 0.0], 5.0, 10.0)],
)
def test_gamma_from_weights(site, w, gamma):
    S = SiteSet([site, [100.0, 100.0]])
    assert gamma_from_weights(S, [w, 0.0])[0] == pytest.approx(gamma)


@given(arrays(float, (4, 3), elements=coords), arrays(float, 4, elements=coords))
def test_weight_gamma_round_trip(s, w):
    try:
        S = SiteSet(s)
    except GeometryError:
        return
    assert np.allclose(weights_from_gamma(S, gamma_from_weights(S, w)), w, atol=1e-9)


def test_classify_voronoi_midpoint():
    P = PowerDiagram(SiteSet([[0.0], [5.0]]), [0.0, 12.5])
    assert P.classify([1.0]) == 0
    assert P.classify([4.0]) == 1
    assert P.classify([2.5]) == 0  # tie goes to the smaller index


def test_classify_shifted_boundary():
    P = PowerDiagram(SiteSet([[0.0], [5.0]]), [0.0, 17.5])
    assert P.classify([3.0]) == 0
    assert P.classify([3.6]) == 1
    power = P.power([3.0])
    assert power[0] < power[1]


def test_classify_rejects_wrong_dimension():
    P = PowerDiagram(SiteSet([[0.0], [5.0]]), [0.0, 12.5])
    with pytest.raises(GeometryError):
        P.classify([1.0, 2.0])


@settings(max_examples=60)
@given(
    arrays(float, (3, 2), elements=coords),
    arrays(float, 3, elements=coords),
    arrays(float, (10, 2), elements=coords),
)
def test_classify_agrees_with_power_function(s, w, x):
    try:
        P = PowerDiagram.from_weights(SiteSet(s), w)
    except GeometryError:
        return
    labels = P.classify(x)
    for point, lab in zip(x, labels):
        power = P.power(point)
        assert power[lab] <= power.min() + 1e-6 * max(1.0, abs(power).max())


def test_gamma_shift_does_not_change_cells(rng):
    S = SiteSet(rng.normal(size=(4, 2)))
    P = PowerDiagram(S, rng.normal(size=4))
    x = rng.normal(size=(50, 2))
    assert np.array_equal(P.classify(x), PowerDiagram(S, P.gamma + 3.7).classify(x))
    assert P.normalized().gamma[0] == 0


def test_margin_symmetric_pair(symmetric_pair):
    data, S = symmetric_pair
    assert margin_of(PowerDiagram(S, [0.0, 0.0]), data) == pytest.approx(1.0)


def test_margin_five_point(five_point):
    data, S = five_point
    P = PowerDiagram(S, [0.0, 25.0])
    assert P.gamma_pair(0, 1) == pytest.approx(5.0)
    assert margin_of(P, data) == pytest.approx(-1.0)


def test_margin_lower_bound_by_construction():
    data = dataset_from_clusters([[[-3.0, 0.0], [-2.0, 1.0]], [[2.0, 5.0], [4.0, -1.0]]])
    P = PowerDiagram(SiteSet([[-1.0, 0.0], [1.0, 0.0]]), [0.0, 0.0])
    assert margin_of(P, data) >= 2.0 - 1e-12


def test_margin_invariant_under_joint_scaling(rng):
    data = dataset_from_clusters([rng.normal(size=(4, 2)) - 3, rng.normal(size=(4, 2)) + 3])
    S = SiteSet([[-1.0, -1.0], [1.0, 1.0]])
    P = PowerDiagram(S, [0.0, 0.7])
    Q = PowerDiagram(S.scaled(4.0), [0.0, 2.8])
    assert margin_of(P, data) == pytest.approx(margin_of(Q, data))


def test_verify_separating_cases():
    data = dataset_from_clusters([[[-2.0], [-1.0]], [[1.0], [2.0]]])
    S = SiteSet([[-1.0], [1.0]])
    assert verify_separating(PowerDiagram(S, [0.0, 0.0]), data) is Separation.STRICT
    # wall at x=1.5 leaves the point 1 on the wrong side
    assert verify_separating(PowerDiagram(S, [0.0, 3.0]), data) is Separation.NONE
    # wall at x=1: point 1 sits on it but cluster 2 still reaches into its cell
    assert verify_separating(PowerDiagram(S, [0.0, 2.0]), data) is Separation.SEPARATING


def test_cluster_inside_wall_is_not_separating():
    data = dataset_from_clusters([[[0.0, 1.0], [0.0, -1.0]], [[2.0, 0.0]]])
    P = PowerDiagram(SiteSet([[-1.0, 0.0], [1.0, 0.0]]), [0.0, 0.0])
    assert verify_separating(P, data) is Separation.NONE


def test_slack_table_shape(five_point):
    data, S = five_point
    table = slack_table(PowerDiagram(S, [0.0, 12.5]), data)
    assert table.shape == (5, 2)
    assert np.isinf(table[np.arange(5), data.labels]).all()


def test_error_extraction_hand_solution(five_point):
    data, S = five_point
    P = PowerDiagram(S, [0.0, 12.5])  # boundary at 2.5
    xi = np.array([0.0, 0.0, 5.0, 0.0, 0.0])
    sol = SoftSolution(P, 1.5, xi, "mep")
    sol.check(data)
    errors = extract_errors(sol, data)
    assert errors.margin_errors == (2,)
    assert errors.support_vectors == (1, 2, 3)


def test_error_extraction_mme_pairs(five_point):
    data, S = five_point
    xi = np.zeros((5, 2))
    xi[2, 1] = 5.0
    sol = SoftSolution(PowerDiagram(S, [0.0, 12.5]), 1.5, xi, "mme")
    errors = extract_errors(sol, data)
    assert errors.margin_errors == ((2, 1),)
    assert set(errors.support_vectors) == {(1, 1), (2, 1), (3, 0)}


def test_soft_check_detects_violation(five_point):
    data, S = five_point
    sol = SoftSolution(PowerDiagram(S, [0.0, 12.5]), 1.5, np.zeros(5), "mep")
    with pytest.raises(GeometryError):
        sol.check(data)


def test_no_errors_at_a_smaller_margin():
    data = dataset_from_clusters([[[-3.0], [-1.0]], [[1.0], [4.0]]])
    P = PowerDiagram(SiteSet([[-1.0], [1.0]]), [0.0, 0.0])
    errors = extract_errors(SoftSolution(P, 0.5, np.zeros(4), "mep"), data)
    assert errors.margin_errors == () and errors.support_vectors == ()
    at_own = extract_errors(SoftSolution(P, 1.0, np.zeros(4), "mep"), data)
    assert at_own.support_vectors == (1, 2)


def test_dataset_validation():
    with pytest.raises(GeometryError):
        Dataset([[0.0], [1.0], [2.0]], [0, 0, 2], k=3)  # empty cluster
    with pytest.raises(GeometryError):
        dataset_from_clusters([[[0.0], [2.0]], [[1.0]]])  # equal means
    with pytest.raises(GeometryError):
        Dataset([[0.0], [np.nan]], [0, 1])
    with pytest.raises(GeometryError):
        Dataset([[0.0]], [0])


def test_dataset_accessors(five_point):
    data, _ = five_point
    assert (data.n, data.d, data.k) == (5, 1, 2)
    assert data.shape == (3, 2)
    assert np.allclose(data.cluster_means().ravel(), [7 / 3, 4.5])
    assert data == dataset_from_clusters([[[0.0], [1.0], [6.0]], [[4.0], [5.0]]])
