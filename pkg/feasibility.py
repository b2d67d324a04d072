"""
Linear programs for polytope membership and optimization.

Wraps scipy's HiGHS backends. Infeasibility is an answer, not a failure;
solver trouble is retried once on the interior-point backend and then
raised as a NumericalError.
"""
import time
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import linprog

from errors import NumericalError
from logging_config import get_logger

logger = get_logger(__name__)

STATUS_NAMES = {
    0: "optimal",
    1: "iteration_limit",
    2: "infeasible",
    3: "unbounded",
    4: "numerical_difficulties",
}
METHODS = ("highs-ds", "highs-ipm")

Bounds = Union[tuple[float, float], Sequence[tuple[float, float]]]


@dataclass(frozen=True, eq=False)
class LPResult:
    status: str
    feasible: bool
    objective: Optional[float]
    solution: Optional[np.ndarray]
    message: str
    method: str


def solve_lp(
    c: np.ndarray,
    a_eq: np.ndarray,
    b_eq: np.ndarray,
    bounds: Bounds = (0.0, 1.0),
    maximize: bool = False,
    label: str = "lp",
) -> LPResult:
    c = np.asarray(c, dtype=float)
    logger.info("lp_solve_attempt", label=label, variables=int(c.size), equalities=int(len(b_eq)))

    for attempt, method in enumerate(METHODS):
        start_time = time.time()
        try:
            res = linprog(-c if maximize else c, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method=method)
        except ValueError as e:
            logger.error("lp_solve_failure", label=label, error_type="invalid_problem", error_message=str(e))
            raise NumericalError(f"LP {label!r} rejected by the solver: {e}") from e

        latency_ms = int((time.time() - start_time) * 1000)
        status = STATUS_NAMES.get(res.status, "unknown")
        if res.status in (0, 2):
            objective = None
            if res.status == 0:
                objective = float(-res.fun if maximize else res.fun)
            logger.info("lp_solve_success", label=label, status=status, objective=objective,
                        method=method, latency_ms=latency_ms)
            return LPResult(
                status=status,
                feasible=res.status == 0,
                objective=objective,
                solution=np.asarray(res.x) if res.status == 0 else None,
                message=str(res.message),
                method=method,
            )
        logger.error("lp_solve_failure", label=label, error_type=status,
                     error_message=str(res.message), attempt=attempt + 1)

    raise NumericalError(f"LP {label!r} could not be solved ({status})")


def find_feasible_point(a_eq: np.ndarray, b_eq: np.ndarray, bounds: Bounds = (0.0, 1.0), label: str = "feasibility") -> LPResult:
    """Zero-objective LP: is {x : A x = b, x within bounds} non-empty?"""
    a_eq = np.asarray(a_eq, dtype=float)
    return solve_lp(np.zeros(a_eq.shape[1]), a_eq, b_eq, bounds=bounds, label=label)
