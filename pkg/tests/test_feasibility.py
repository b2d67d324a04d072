import numpy as np
import pytest

import feasibility
from errors import NumericalError


def test_feasible_point_found():
    result = feasibility.find_feasible_point(np.array([[1.0, 1.0]]), np.array([1.0]))
    assert result.feasible
    assert result.status == "optimal"
    assert result.solution.sum() == pytest.approx(1.0)


def test_infeasible_is_an_answer():
    """Test that an empty polytope reports infeasible instead of raising."""
    result = feasibility.find_feasible_point(np.array([[1.0, 1.0]]), np.array([3.0]))
    assert not result.feasible
    assert result.status == "infeasible"
    assert result.solution is None


def test_maximize_returns_positive_objective():
    result = feasibility.solve_lp(np.array([1.0, 2.0]), np.array([[1.0, 1.0]]), np.array([1.0]), maximize=True)
    assert result.objective == pytest.approx(2.0)


def test_solver_trouble_retries_then_raises(mocker):
    """
    Test that numerical difficulties on both backends become a NumericalError.
    Verifies:
    - The interior-point backend is tried after the simplex backend
    - The failure surfaces as the lab's numerical error
    """
    stuck = mocker.MagicMock(status=4, message="numerical difficulties", x=None, fun=None)
    mock_linprog = mocker.patch("feasibility.linprog", return_value=stuck)
    with pytest.raises(NumericalError):
        feasibility.find_feasible_point(np.array([[1.0]]), np.array([1.0]))
    methods = [call.kwargs["method"] for call in mock_linprog.call_args_list]
    assert methods == ["highs-ds", "highs-ipm"]


def test_solver_recovers_on_second_backend(mocker):
    stuck = mocker.MagicMock(status=4, message="numerical difficulties", x=None, fun=None)
    solved = mocker.MagicMock(status=0, message="ok", x=np.array([1.0]), fun=0.0)
    mocker.patch("feasibility.linprog", side_effect=[stuck, solved])
    result = feasibility.find_feasible_point(np.array([[1.0]]), np.array([1.0]))
    assert result.feasible
    assert result.method == "highs-ipm"


def test_rejected_problem_raises(mocker):
    mocker.patch("feasibility.linprog", side_effect=ValueError("bad shapes"))
    with pytest.raises(NumericalError):
        feasibility.find_feasible_point(np.array([[1.0]]), np.array([1.0]))
