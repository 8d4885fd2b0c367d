import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from softpd.algorithms import ls_spd
from softpd.evaluation import (
    brute_force_balanced_lsa,
    brute_force_threshold,
    canonical_json,
    evaluate_classifier,
    random_bounded_lp,
    random_instance,
    threshold_to_dict,
    timing_report,
    vertex_enumeration,
)
from softpd.formulations import build_feasibility_free_sites, build_pspd_fixed, extract_hard_solution, sigma_matrix
from softpd.geometry import GeometryError, PowerDiagram, SiteSet, dataset_from_clusters
from softpd.lp import LinearProgram, solve


def test_lsa_points_at_their_sites():
    data = brute_force_balanced_lsa([-1.0, 1.0], SiteSet([[-1.0], [1.0]]), (1, 1))
    assert data.labels.tolist() == [0, 1]


def test_lsa_shape_two_one():
    data = brute_force_balanced_lsa([0.0, 1.0, 10.0], SiteSet([[0.0], [10.0]]), (2, 1))
    assert data.labels.tolist() == [0, 0, 1]


def test_lsa_respects_shape(rng):
    S = SiteSet(rng.normal(size=(3, 2)))
    data = brute_force_balanced_lsa(rng.normal(size=(7, 2)), S, (1, 2, 4))
    assert np.bincount(data.labels).tolist() == [1, 2, 4]


def test_lsa_output_is_separable(rng):
    for _ in range(8):
        S = SiteSet(rng.normal(size=(3, 2)) * 2)
        data = brute_force_balanced_lsa(rng.normal(size=(8, 2)) * 2, S, (3, 3, 2))
        assert solve(build_feasibility_free_sites(data)).optimal
        _, eps = extract_hard_solution(solve(build_pspd_fixed(sigma_matrix(data, S))), S)
        assert eps >= -1e-7


def test_lsa_input_errors():
    S = SiteSet([[0.0], [1.0]])
    with pytest.raises(ValueError):
        brute_force_balanced_lsa([0.0, 1.0, 2.0], S, (1, 1))
    with pytest.raises(ValueError):
        brute_force_balanced_lsa(np.zeros(13), S, (6, 7))


def test_vertex_enumeration_small():
    lp = LinearProgram([3, 5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18], [False, False])
    val, v = vertex_enumeration(lp)
    assert val == pytest.approx(36) and np.allclose(v, [2, 6])
    assert vertex_enumeration(LinearProgram([1.0], [[1.0], [-1.0]], [0.0, -1.0], [True])) is None


def test_random_bounded_lp_is_bounded(rng):
    for _ in range(30):
        lp = random_bounded_lp(rng)
        assert vertex_enumeration(lp) is not None
        assert solve(lp).optimal


def test_brute_threshold_cases(five_point, symmetric_pair):
    assert brute_force_threshold(*five_point) == 2
    assert brute_force_threshold(*symmetric_pair) == 0
    swapped = dataset_from_clusters([[[10.0], [9.0]], [[1.0], [0.0]]])
    assert brute_force_threshold(swapped, SiteSet([[0.0], [10.0]])) == 4


def test_evaluate_separable_train_equals_test(rng):
    S = SiteSet(rng.normal(size=(3, 2)) * 3)
    data = brute_force_balanced_lsa(rng.normal(size=(9, 2)) * 3, S, (3, 3, 3))
    diagram, eps = extract_hard_solution(solve(build_pspd_fixed(sigma_matrix(data, S))), S)
    report = evaluate_classifier(diagram, data)
    # a wall may pass through points when eps is zero; ties can then misassign
    if eps > 1e-9:
        assert report.misclassified == 0
    assert report.total == 9


def test_evaluate_confusion_counts(five_point):
    data, S = five_point
    report = evaluate_classifier(PowerDiagram(S, [0.0, 12.5]), data)
    assert report.confusion.tolist() == [[2, 1], [0, 2]]
    assert report.rate == pytest.approx(0.2)
    assert report.to_dict()["misclassified"] == 1


def test_evaluate_shape_mismatch(five_point):
    data, _ = five_point
    with pytest.raises(GeometryError):
        evaluate_classifier(PowerDiagram(SiteSet([[0.0, 0.0], [1.0, 1.0]]), [0.0, 0.0]), data)


def test_timing_report_rows(five_point):
    data, S = five_point
    rows = timing_report(data, S, [1, 2], repeats=2)
    assert [r["t"] for r in rows] == [1, 2]
    assert all(r["rows"] == 5 and r["columns"] == 7 and r["seconds"] >= 0 for r in rows)


def test_threshold_dict(five_point):
    res = ls_spd(*five_point)
    out = threshold_to_dict(res)
    assert out["tau_fraction"] == "2/5" and out["t_min"] == 2
    assert Fraction(out["tau_fraction"]) == res.tau


def test_canonical_json_format():
    text = canonical_json({"b": 1.0, "a": [math.inf, -0.0, 2], "c": None, "d": np.float64(1 / 3)})
    assert text == '{"a":["inf",0.000000,2],"b":1.000000,"c":null,"d":0.333333}'
    assert json.loads(text)["d"] == pytest.approx(0.333333)


@given(st.dictionaries(st.text(max_size=5), st.floats(allow_nan=False), max_size=6))
def test_canonical_json_stable(obj):
    text = canonical_json(obj)
    assert text == canonical_json(dict(reversed(list(obj.items()))))
    json.loads(text)


def test_random_instance_shape(rng):
    data = random_instance(rng, 25, 4, 3)
    assert (data.n, data.k, data.d) == (25, 4, 3)
