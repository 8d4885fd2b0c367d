import numpy as np
import pytest

from softpd.evaluation import random_bounded_lp, vertex_enumeration
from softpd.lp import (
    LinearProgram,
    LpError,
    LpStatus,
    read_mps,
    solve,
    solve_feasibility,
    to_mps,
)


def test_single_bound():
    sol = solve(LinearProgram([1.0], [[1.0]], [1.0], [True]))
    assert sol.status is LpStatus.OPTIMAL
    assert sol.x[0] == pytest.approx(1.0) and sol.objective == pytest.approx(1.0)


def test_no_constraints_unbounded():
    sol = solve(LinearProgram([1.0], np.zeros((0, 1)), [], [True]))
    assert sol.status is LpStatus.UNBOUNDED


def test_no_constraints_zero_objective():
    sol = solve(LinearProgram([0.0, 0.0], np.zeros((0, 2)), [], [True, False]))
    assert sol.optimal and np.allclose(sol.x, 0)


def test_contradictory_rows_infeasible():
    lp = LinearProgram([0.0], [[1.0], [-1.0]], [0.0, -1.0], [False])
    assert solve(lp).status is LpStatus.INFEASIBLE
    assert solve_feasibility(lp).status is LpStatus.INFEASIBLE


def test_textbook_program():
    # max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18
    lp = LinearProgram([3, 5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18], [False, False])
    sol = solve(lp)
    assert sol.objective == pytest.approx(36)
    assert np.allclose(sol.x, [2, 6])
    # duals are non-negative and certify the optimum
    assert np.all(sol.duals >= -1e-9)
    assert sol.duals @ lp.b == pytest.approx(36)


def test_unbounded_ray_is_certified():
    lp = LinearProgram([1.0, 1.0], [[1.0, -1.0]], [1.0], [False, False])
    sol = solve(lp)
    assert sol.status is LpStatus.UNBOUNDED
    ray = sol.ray
    assert lp.c @ ray > 0 and np.all(lp.A @ ray <= 1e-9) and np.all(ray >= -1e-12)


def test_free_variables_negative_optimum():
    lp = LinearProgram([1.0, -1.0], [[1.0, 0.0], [0.0, -1.0]], [-3.0, 2.0], [True, True])
    sol = solve(lp)
    assert np.allclose(sol.x, [-3.0, -2.0])


def test_redundant_equal_rows():
    lp = LinearProgram([1.0, 1.0], [[1, 1], [1, 1], [-1, -1]], [2, 2, -2], [False, False])
    sol = solve(lp)
    assert sol.objective == pytest.approx(2.0)


def test_input_validation():
    with pytest.raises(LpError):
        LinearProgram([1.0, 2.0], [[1.0]], [1.0], [True, True])
    with pytest.raises(LpError):
        LinearProgram([1.0], [[np.inf]], [1.0], [True])
    with pytest.raises(LpError):
        solve(LinearProgram([1.0], [[1.0]], [1.0], [True]), backend="gurobi")


def test_against_vertex_enumeration_and_highs(rng):
    for _ in range(60):
        lp = random_bounded_lp(rng)
        ref = vertex_enumeration(lp)
        sol = solve(lp)
        assert sol.optimal
        assert np.all(lp.residuals(sol.x) <= 1e-7)
        assert np.all(sol.x[~lp.free] >= -1e-9)
        assert sol.objective == pytest.approx(ref[0], abs=1e-6)
        assert solve(lp, backend="highs").objective == pytest.approx(ref[0], abs=1e-6)


def test_warm_start_matches_cold(rng):
    for _ in range(25):
        lp = random_bounded_lp(rng)
        first = solve(lp)
        shifted = lp.with_objective(lp.c + rng.normal(scale=0.3, size=lp.num_vars))
        cold, warm = solve(shifted), solve(shifted, first)
        assert cold.status is warm.status
        assert warm.objective == pytest.approx(cold.objective, abs=1e-7)


def test_warm_start_with_bogus_basis_falls_back():
    lp = LinearProgram([3, 5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18], [False, False])
    assert solve(lp, [0, 0, 0]).objective == pytest.approx(36)


def test_mps_round_trip(rng):
    for _ in range(20):
        lp = random_bounded_lp(rng)
        back = read_mps(to_mps(lp))
        assert np.array_equal(back.free, lp.free)
        assert np.allclose(back.A, lp.A, rtol=1e-8, atol=1e-9)
        assert np.allclose(back.b, lp.b, rtol=1e-8, atol=1e-9)
        assert np.allclose(back.c, lp.c, rtol=1e-8, atol=1e-9)
        assert solve(back).objective == pytest.approx(solve(lp).objective, abs=1e-6)


def test_mps_layout():
    lp = LinearProgram([1.0, 0.0], [[1.0, 0.0]], [2.5], [True, False], names=("eps", "z"), row_names=("cap",))
    text = to_mps(lp)
    lines = text.splitlines()
    assert lines[0].startswith("NAME") and lines[-1] == "ENDATA"
    assert "OBJSENSE" in lines and "    MAX" in lines
    assert " FR BND       eps" in lines
    assert read_mps(text).names == ("eps", "z")


def test_mps_rejects_long_names():
    lp = LinearProgram([1.0], [[1.0]], [1.0], [True], names=("much_too_long",))
    with pytest.raises(LpError):
        to_mps(lp)
