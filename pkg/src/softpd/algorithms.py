"""Outlier detection and least-squares thresholds over fixed sites."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional


from .formulations import (
    UnboundedProgram,
    build_pspd_fixed,
    build_soft,
    extract_hard_solution,
    extract_soft_solution,
    max_errors,
    sigma_matrix,
)
from .geometry import TAU_NUM, Dataset, PowerDiagram, SiteSet, SoftSolution, Variant, extract_errors
from .lp import LpSolution, LpStatus, solve

log = logging.getLogger(__name__)


def spd_od(
    data: Dataset,
    sites: SiteSet,
    t: int,
    variant: Variant | str = Variant.MEP,
    *,
    tol: float = TAU_NUM,
    backend: str = "simplex",
) -> tuple[SoftSolution, dict[int, int]]:
    """Solve one soft program and report its margin-error points.

    The returned mapping sends each outlier's point index to the number of
    foreign clusters it violates (always 1 for MEP, which counts points).
    """
    variant = Variant(variant)
    limit = max_errors(data, variant)
    if not 1 <= t <= limit:
        raise ValueError(f"t must lie in 1..{limit}")
    sol = solve(build_soft(data, sites, t, variant), backend=backend)
    if sol.status is LpStatus.UNBOUNDED:
        raise UnboundedProgram(f"t={t} admits arbitrarily large margins; choose a smaller t")
    soft = extract_soft_solution(sol, data, sites, variant, tol)
    errors = extract_errors(soft, data, tol)
    outliers: dict[int, int] = {}
    if variant is Variant.MME:
        for l, _ in errors.margin_errors:
            outliers[l] = outliers.get(l, 0) + 1
    else:
        outliers = {l: 1 for l in errors.margin_errors}
    return soft, outliers


@dataclass(frozen=True)
class ThresholdResult:
    """Smallest error budget admitting a non-negative margin.

    ``diagram`` is None (and ``epsilon`` is +inf) when that budget is the
    maximal one, where the program is unbounded.
    """

    tau: Fraction
    t_min: int
    variant: Variant
    diagram: Optional[PowerDiagram]
    epsilon: float
    lp_solve_count: int
    solution: Optional[SoftSolution] = None


def ls_spd(
    data: Dataset,
    sites: SiteSet,
    variant: Variant | str = Variant.MEP,
    *,
    warm_start: bool = True,
    tol: float = TAU_NUM,
    backend: str = "simplex",
) -> ThresholdResult:
    """Binary search for the smallest budget whose optimal margin is non-negative."""
    variant = Variant(variant)
    t_max = max_errors(data, variant)
    hard = solve(build_pspd_fixed(sigma_matrix(data, sites)), backend=backend)
    diagram, eps = extract_hard_solution(hard, sites)
    count = 1
    if eps >= -tol:
        return ThresholdResult(Fraction(0), 0, variant, diagram, eps, count)

    # the program at t_max is unbounded by construction, so it is never probed
    lo, hi = 1, t_max
    best: Optional[tuple[int, LpSolution]] = None
    warm: Optional[LpSolution] = None
    while lo < hi:
        mid = (lo + hi) // 2
        sol = solve(build_soft(data, sites, mid, variant), warm if warm_start else None, backend=backend)
        count += 1
        if sol.status is LpStatus.UNBOUNDED:
            ok = True
        else:
            ok = float(sol.x[data.k - 1]) >= -tol
        log.debug("probe t=%d status=%s ok=%s", mid, sol.status.value, ok)
        if ok:
            hi = mid
            best = (mid, sol)
        else:
            lo = mid + 1
        if sol.basis is not None:
            warm = sol

    t_min = lo
    tau = Fraction(t_min, t_max)
    if best is not None and best[0] == t_min and best[1].optimal:
        soft = extract_soft_solution(best[1], data, sites, variant)
        return ThresholdResult(tau, t_min, variant, soft.diagram, soft.epsilon, count, soft)
    # either the probe at t_min was unbounded or the search ran up to t_max
    return ThresholdResult(tau, t_min, variant, None, math.inf, count)


@dataclass(frozen=True)
class CurvePoint:
    t: int
    epsilon: float
    objective: float
    status: LpStatus


def epsilon_curve(
    data: Dataset,
    sites: SiteSet,
    variant: Variant | str,
    t_values: Iterable[int],
    *,
    warm_start: bool = True,
    backend: str = "simplex",
) -> list[CurvePoint]:
    """Optimal margin and objective for each budget; t=0 means the hard-margin program."""
    variant = Variant(variant)
    limit = max_errors(data, variant)
    out = []
    warm = None
    for t in t_values:
        if not 0 <= t <= limit:
            raise ValueError(f"t={t} outside 0..{limit}")
        if t == 0:
            sol = solve(build_pspd_fixed(sigma_matrix(data, sites)), backend=backend)
        else:
            sol = solve(build_soft(data, sites, t, variant), warm, backend=backend)
            if warm_start and sol.basis is not None:
                warm = sol
        if sol.status is LpStatus.UNBOUNDED:
            out.append(CurvePoint(t, math.inf, math.inf, sol.status))
        else:
            out.append(CurvePoint(t, float(sol.x[data.k - 1]), sol.objective, sol.status))
    return out
