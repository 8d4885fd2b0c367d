"""Linear programs for maximum-margin and soft power diagrams.

Every fixed-site program pins ``gamma_0 = 0`` and lays out its variables as
``gamma_1..gamma_{k-1}``, ``eps``, then the margin-error slacks in point-major
order. For MME the slacks are indexed by ``(point, foreign cluster)`` pairs,
for MEP by point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import (
    TAU_NUM,
    Dataset,
    PowerDiagram,
    SiteSet,
    SoftSolution,
    Variant,
    pair_tables,
)
from .lp import LinearProgram, LpSolution, LpStatus, solve


class UnboundedProgram(Exception):
    """The program has no finite optimum (the margin can grow without limit)."""


def f_coefficient(t: int) -> float:
    """Penalty weight ``(t + 1/2) / (t (t + 1))`` on the summed slacks."""
    if t < 1:
        raise ValueError("t must be a positive integer")
    return (t + 0.5) / (t * (t + 1.0))


@dataclass(frozen=True)
class SigmaMatrix:
    """Per ordered cluster pair, the furthest reach of cluster i towards site j.

    ``sigma[i, j] = max_{x in C_i} s_ij^T x``; ``dist[i, j] = ||s_j - s_i||``.
    Diagonal entries are meaningless and set to 0 and 1.
    """

    sigma: np.ndarray
    dist: np.ndarray

    @property
    def k(self) -> int:
        return self.sigma.shape[0]


def sigma_matrix(data: Dataset, sites: SiteSet) -> SigmaMatrix:
    _check_compatible(data, sites)
    unit, dist = pair_tables(sites)
    proj = np.einsum("ijd,ld->ijl", unit, data.points)
    sigma = np.zeros((data.k, data.k))
    for i in range(data.k):
        sigma[i] = proj[i][:, data.labels == i].max(axis=1)
    np.fill_diagonal(sigma, 0.0)
    return SigmaMatrix(sigma, dist)


def _check_compatible(data: Dataset, sites: SiteSet) -> None:
    if sites.k != data.k:
        raise ValueError(f"{sites.k} sites for {data.k} clusters")
    if sites.d != data.d:
        raise ValueError(f"sites have dimension {sites.d}, points {data.d}")


def _gamma_names(k: int) -> list[str]:
    return [f"g{i + 1}" for i in range(1, k)]


def _pair_rows(i: np.ndarray, j: np.ndarray, dist: np.ndarray, k: int) -> np.ndarray:
    """Coefficients of ``-gamma_ij`` over the variables gamma_1..gamma_{k-1}."""
    rows = np.zeros((len(i), k))
    scale = 1.0 / dist[i, j]
    rows[np.arange(len(i)), j] -= scale
    rows[np.arange(len(i)), i] += scale
    return rows[:, 1:]


def ordered_pairs(k: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(k) for j in range(k) if i != j]


def build_pspd_fixed(sig: SigmaMatrix) -> LinearProgram:
    """Hard-margin program: ``max eps`` s.t. ``sigma_ij + eps <= gamma_ij``."""
    k = sig.k
    pairs = np.array(ordered_pairs(k))
    i, j = pairs[:, 0], pairs[:, 1]
    A = np.hstack([_pair_rows(i, j, sig.dist, k), np.ones((len(pairs), 1))])
    b = -sig.sigma[i, j]
    c = np.zeros(k)
    c[-1] = 1.0
    names = tuple(_gamma_names(k) + ["eps"])
    rows = tuple(f"h{a + 1}_{b_ + 1}" for a, b_ in pairs)
    return LinearProgram(c, A, b, np.ones(k, dtype=bool), names, rows)


def foreign_pairs(data: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """``(point, foreign cluster)`` index arrays in point-major order."""
    l = np.repeat(np.arange(data.n), data.k - 1)
    j = np.array([jj for own in data.labels for jj in range(data.k) if jj != own], dtype=int)
    return l, j


def _pointwise_rows(data: Dataset, sites: SiteSet):
    _check_compatible(data, sites)
    unit, dist = pair_tables(sites)
    l, j = foreign_pairs(data)
    i = data.labels[l]
    proj = np.einsum("rd,rd->r", unit[i, j], data.points[l])
    G = _pair_rows(i, j, dist, data.k)
    return l, j, G, -proj


def build_pointwise_spd(data: Dataset, sites: SiteSet) -> LinearProgram:
    """Hard-margin program with one row per point and foreign cluster."""
    l, j, G, b = _pointwise_rows(data, sites)
    A = np.hstack([G, np.ones((len(l), 1))])
    c = np.zeros(data.k)
    c[-1] = 1.0
    return LinearProgram(c, A, b, np.ones(data.k, dtype=bool), tuple(_gamma_names(data.k) + ["eps"]))


def build_pmme_fixed(data: Dataset, sites: SiteSet, t: int) -> LinearProgram:
    """Soft program bounding multiclass margin errors by ``t``."""
    f = f_coefficient(t)
    l, j, G, b = _pointwise_rows(data, sites)
    rows = len(l)
    A = np.hstack([G, np.ones((rows, 1)), -np.eye(rows)])
    c = np.concatenate([np.zeros(data.k - 1), [1.0], np.full(rows, -f)])
    free = np.concatenate([np.ones(data.k, dtype=bool), np.zeros(rows, dtype=bool)])
    names = _gamma_names(data.k) + ["eps"] + [f"x{a + 1}_{b_ + 1}" for a, b_ in zip(l, j)]
    row_names = tuple(f"m{a + 1}_{b_ + 1}" for a, b_ in zip(l, j))
    return LinearProgram(c, A, b, free, tuple(names), row_names)


def build_pmep_fixed(data: Dataset, sites: SiteSet, t: int) -> LinearProgram:
    """Soft program bounding margin error points by ``t``."""
    f = f_coefficient(t)
    l, j, G, b = _pointwise_rows(data, sites)
    n = data.n
    share = np.zeros((len(l), n))
    share[np.arange(len(l)), l] = -1.0
    A = np.hstack([G, np.ones((len(l), 1)), share])
    c = np.concatenate([np.zeros(data.k - 1), [1.0], np.full(n, -f)])
    free = np.concatenate([np.ones(data.k, dtype=bool), np.zeros(n, dtype=bool)])
    names = _gamma_names(data.k) + ["eps"] + [f"x{a + 1}" for a in range(n)]
    row_names = tuple(f"m{a + 1}_{b_ + 1}" for a, b_ in zip(l, j))
    return LinearProgram(c, A, b, free, tuple(names), row_names)


def build_soft(data: Dataset, sites: SiteSet, t: int, variant: Variant | str) -> LinearProgram:
    if Variant(variant) is Variant.MME:
        return build_pmme_fixed(data, sites, t)
    return build_pmep_fixed(data, sites, t)


def max_errors(data: Dataset, variant: Variant | str) -> int:
    """Largest meaningful ``t``: n for MEP, (k-1) n for MME."""
    return data.n if Variant(variant) is Variant.MEP else (data.k - 1) * data.n


def build_feasibility_free_sites(data: Dataset) -> LinearProgram:
    """Joint linear system in sites and gamma deciding whether any separating diagram exists.

    Variables are the k*d site coordinates (row-major) followed by
    gamma_1..gamma_{k-1}.
    """
    k, d = data.k, data.d
    means = data.cluster_means()
    nv = k * d + k - 1
    l, j = foreign_pairs(data)
    i = data.labels[l]
    rows = []
    for ll, ii, jj in zip(l, i, j):
        row = np.zeros(nv)
        x = data.points[ll]
        row[jj * d : (jj + 1) * d] += x
        row[ii * d : (ii + 1) * d] -= x
        if jj > 0:
            row[k * d + jj - 1] -= 1.0
        if ii > 0:
            row[k * d + ii - 1] += 1.0
        rows.append(row)
    rhs = [0.0] * len(rows)
    for a in range(k):
        for b_ in range(a + 1, k):
            row = np.zeros(nv)
            delta = means[b_] - means[a]
            row[b_ * d : (b_ + 1) * d] -= delta
            row[a * d : (a + 1) * d] += delta
            rows.append(row)
            rhs.append(-1.0)
    names = [f"s{a + 1}_{q + 1}" for a in range(k) for q in range(d)] + _gamma_names(k)
    return LinearProgram(np.zeros(nv), np.array(rows), rhs, np.ones(nv, dtype=bool), tuple(names))


def diagram_from_feasibility(sol: LpSolution, data: Dataset) -> PowerDiagram:
    if not sol.optimal:
        raise ValueError(f"no separating power diagram exists ({sol.status.value})")
    k, d = data.k, data.d
    sites = SiteSet(sol.x[: k * d].reshape(k, d))
    gamma = np.concatenate([[0.0], sol.x[k * d :]])
    return PowerDiagram(sites, gamma)


def extract_hard_solution(sol: LpSolution, sites: SiteSet) -> tuple[PowerDiagram, float]:
    """Diagram and margin from an optimal hard-margin program."""
    if sol.status is LpStatus.UNBOUNDED:
        raise UnboundedProgram("hard-margin program is unbounded")
    if not sol.optimal:
        raise ValueError(f"program is {sol.status.value}")
    k = sites.k
    gamma = np.concatenate([[0.0], sol.x[: k - 1]])
    return PowerDiagram(sites, gamma), float(sol.x[k - 1])


def extract_soft_solution(
    sol: LpSolution,
    data: Dataset,
    sites: SiteSet,
    variant: Variant | str,
    tol: float = TAU_NUM,
) -> SoftSolution:
    variant = Variant(variant)
    if sol.status is LpStatus.UNBOUNDED:
        raise UnboundedProgram("soft program is unbounded; the margin can grow without limit")
    if not sol.optimal:
        raise ValueError(f"program is {sol.status.value}")
    k = data.k
    diagram = PowerDiagram(sites, np.concatenate([[0.0], sol.x[: k - 1]]))
    eps = float(sol.x[k - 1])
    raw = np.array(sol.x[k:], dtype=float)
    raw[(raw < 0) & (raw > -tol)] = 0.0
    if variant is Variant.MME:
        xi = np.zeros((data.n, k))
        l, j = foreign_pairs(data)
        if len(raw) != len(l):
            raise ValueError("solution does not match the MME layout")
        xi[l, j] = raw
    else:
        if len(raw) != data.n:
            raise ValueError("solution does not match the MEP layout")
        xi = raw
    return SoftSolution(diagram, eps, xi, variant)


def soft_objective(sol: SoftSolution, t: int) -> float:
    return sol.epsilon - f_coefficient(t) * float(np.sum(sol.xi))


def solve_soft(
    data: Dataset,
    sites: SiteSet,
    t: int,
    variant: Variant | str,
    warm=None,
    backend: str = "simplex",
) -> tuple[LpSolution, Optional[SoftSolution]]:
    """Build and solve one soft program. The soft solution is None when unbounded."""
    lp = build_soft(data, sites, t, variant)
    sol = solve(lp, warm, backend=backend)
    if sol.status is LpStatus.UNBOUNDED:
        return sol, None
    return sol, extract_soft_solution(sol, data, sites, variant)
