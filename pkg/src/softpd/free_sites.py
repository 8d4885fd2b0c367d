"""Local search over site positions for the free-site programs.

With sites fixed, the remaining variables solve an exact LP. The site
coordinates are then moved by a finite-difference ascent on the LP optimum,
penalized by squared violations of the pairwise normalization
``(s_j - s_i)^T (c_j - c_i) >= 1``. Only feasible, improving steps are
accepted, so the objective never drops below its value at the start.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .formulations import (
    build_pspd_fixed,
    build_soft,
    extract_hard_solution,
    extract_soft_solution,
    sigma_matrix,
)
from .geometry import Dataset, GeometryError, PowerDiagram, SiteSet, Variant
from .lp import LpSolution, LpStatus, solve

log = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-6


class FreeVariant(str, enum.Enum):
    SPD = "spd"
    MME = "mme"
    MEP = "mep"


class LocalSolveError(RuntimeError):
    def __init__(self, message: str, last: "LocalSolveReport"):
        super().__init__(message)
        self.last = last


@dataclass(frozen=True)
class LocalSolveReport:
    sites: SiteSet
    gamma: np.ndarray
    epsilon: float
    xi: Optional[np.ndarray]
    objective: float
    initial_objective: float
    iterations: int
    converged: bool
    violation: float
    variant: FreeVariant
    t: Optional[int]

    @property
    def diagram(self) -> PowerDiagram:
        return PowerDiagram(self.sites, self.gamma)


def normalization_violation(sites: np.ndarray, means: np.ndarray) -> float:
    """Largest shortfall of ``(s_j - s_i)^T (c_j - c_i)`` below 1 over pairs i < j."""
    ds = sites[None, :, :] - sites[:, None, :]
    dc = means[None, :, :] - means[:, None, :]
    inner = (ds * dc).sum(axis=2)
    iu = np.triu_indices(len(sites), 1)
    return float(max(0.0, (1.0 - inner[iu]).max()))


def _penalty(sites: np.ndarray, means: np.ndarray) -> float:
    ds = sites[None, :, :] - sites[:, None, :]
    dc = means[None, :, :] - means[:, None, :]
    inner = (ds * dc).sum(axis=2)
    iu = np.triu_indices(len(sites), 1)
    return float((np.maximum(0.0, 1.0 - inner[iu]) ** 2).sum())


def initial_sites(data: Dataset) -> SiteSet:
    """Cluster means scaled so every normalization constraint holds."""
    means = data.cluster_means()
    dc = means[None, :, :] - means[:, None, :]
    sq = (dc**2).sum(axis=2)
    iu = np.triu_indices(data.k, 1)
    delta = float(sq[iu].min())
    return SiteSet(means / delta)


class _FixedSiteProgram:
    """Exact LP value of the free-site program with the sites held fixed."""

    def __init__(self, data: Dataset, variant: FreeVariant, t: Optional[int], backend: str):
        self.data = data
        self.variant = variant
        self.t = t
        self.backend = backend
        self.warm: Optional[LpSolution] = None

    def build(self, sites: SiteSet):
        if self.variant is FreeVariant.SPD:
            return build_pspd_fixed(sigma_matrix(self.data, sites))
        return build_soft(self.data, sites, self.t, Variant(self.variant.value))

    def value(self, coords: np.ndarray) -> tuple[float, Optional[LpSolution]]:
        try:
            sites = SiteSet(coords)
        except GeometryError:
            return -math.inf, None
        sol = solve(self.build(sites), self.warm, backend=self.backend)
        if sol.status is LpStatus.UNBOUNDED:
            return math.inf, sol
        if not sol.optimal:
            return -math.inf, sol
        return sol.objective, sol

    def unpack(self, coords: np.ndarray, sol: LpSolution):
        sites = SiteSet(coords)
        if self.variant is FreeVariant.SPD:
            diagram, eps = extract_hard_solution(sol, sites)
            return diagram.gamma, eps, None
        soft = extract_soft_solution(sol, self.data, sites, Variant(self.variant.value))
        return soft.diagram.gamma, soft.epsilon, soft.xi


def local_optimize(
    data: Dataset,
    variant: FreeVariant | str = FreeVariant.MEP,
    t: Optional[int] = None,
    sites0: Optional[SiteSet] = None,
    *,
    rho: float = 1e3,
    tol: float = 1e-3,
    max_iter: int = 500,
    armijo: float = 1e-4,
    backend: str = "simplex",
) -> LocalSolveReport:
    """Locally maximize the margin objective over site positions.

    ``t`` defaults to 10% of the maximal error count for the soft variants and
    is ignored for SPD.
    """
    variant = FreeVariant(variant)
    if variant is FreeVariant.SPD:
        t = None
    elif t is None:
        cap = data.n if variant is FreeVariant.MEP else (data.k - 1) * data.n
        t = max(1, round(0.1 * cap))
    means = data.cluster_means()
    sites0 = sites0 if sites0 is not None else initial_sites(data)
    if sites0.k != data.k or sites0.d != data.d:
        raise GeometryError("starting sites do not match the dataset")

    program = _FixedSiteProgram(data, variant, t, backend)
    x = sites0.sites.copy()
    theta, sol = program.value(x)
    if not math.isfinite(theta):
        raise ValueError(f"fixed-site program at the starting sites has objective {theta}")
    program.warm = sol
    initial = theta

    def report(iterations: int, converged: bool) -> LocalSolveReport:
        gamma, eps, xi = program.unpack(x, sol)
        return LocalSolveReport(
            SiteSet(x), gamma, eps, xi, theta, initial, iterations, converged,
            normalization_violation(x, means), variant, t,
        )

    def penalized(coords: np.ndarray) -> tuple[float, float, Optional[LpSolution]]:
        val, s = program.value(coords)
        return val - rho * _penalty(coords, means), val, s

    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        h = 1e-5 * max(1.0, float(np.abs(x).max()))
        grad = np.zeros_like(x)
        for idx in np.ndindex(x.shape):
            up, down = x.copy(), x.copy()
            up[idx] += h
            down[idx] -= h
            f_up = penalized(up)[0]
            f_down = penalized(down)[0]
            if not (math.isfinite(f_up) and math.isfinite(f_down)):
                if math.inf in (f_up, f_down):
                    raise LocalSolveError("objective became unbounded near the current sites", report(it, False))
                grad[idx] = 0.0
                continue
            grad[idx] = (f_up - f_down) / (2 * h)
        gnorm2 = float((grad**2).sum())
        if gnorm2 == 0.0 or not math.isfinite(gnorm2):
            converged = True
            break

        step = max(1.0, float(np.abs(x).max())) / math.sqrt(gnorm2)
        accepted = False
        infeasible_hits = 0
        for _ in range(40):
            cand = x + step * grad
            f_pen, f_val, cand_sol = penalized(cand)
            if f_val == math.inf:
                raise LocalSolveError("objective became unbounded during line search", report(it, False))
            if math.isfinite(f_pen) and f_pen >= theta + armijo * step * gnorm2:
                if normalization_violation(cand, means) <= FEASIBILITY_TOL and f_val >= theta:
                    gain = f_val - theta
                    x, theta, sol = cand, f_val, cand_sol
                    program.warm = sol
                    accepted = True
                    break
                infeasible_hits += 1
            step *= 0.5
        if infeasible_hits > 2:
            rho *= 2.0
        if not accepted:
            converged = True
            break
        log.debug("iteration %d: objective %.6f (gain %.3g)", it, theta, gain)
        if gain < tol:
            converged = True
            break

    if not np.all(np.isfinite(x)):
        raise LocalSolveError("site coordinates became non-finite", report(it, False))
    return report(it, converged)
