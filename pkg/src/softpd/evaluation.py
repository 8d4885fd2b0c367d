"""Reference oracles, instance generators and classifier evaluation.

The brute-force routines here are deliberately naive. They exist to check the
fast paths in :mod:`softpd.algorithms` and :mod:`softpd.lp` and are only
practical on tiny inputs.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional, Sequence

import numpy as np

from .algorithms import ThresholdResult
from .formulations import build_pspd_fixed, build_soft, max_errors, sigma_matrix
from .geometry import TAU_NUM, Dataset, GeometryError, PowerDiagram, SiteSet, Variant
from .lp import LinearProgram, LpStatus, solve


def brute_force_balanced_lsa(points, sites: SiteSet, shape: Sequence[int]) -> Dataset:
    """Clustering of ``points`` with the given cluster sizes minimizing total squared distance.

    Enumerates every clustering of that shape. Ties go to the lexicographically
    smallest label vector.
    """
    X = np.array(points, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    n = len(X)
    shape = [int(s) for s in shape]
    if sum(shape) != n:
        raise ValueError(f"shape {shape} does not sum to {n} points")
    if len(shape) != sites.k:
        raise ValueError("one cluster size per site required")
    if n > 12:
        raise ValueError("exhaustive enumeration is limited to 12 points")
    cost = ((X[:, None, :] - sites.sites[None, :, :]) ** 2).sum(axis=2)

    best_cost = math.inf
    best: Optional[list[int]] = None
    labels = [0] * n
    remaining = list(shape)

    def visit(l: int, acc: float) -> None:
        nonlocal best_cost, best
        if l == n:
            if acc < best_cost:
                best_cost, best = acc, labels.copy()
            return
        for i in range(sites.k):
            if remaining[i]:
                remaining[i] -= 1
                labels[l] = i
                visit(l + 1, acc + cost[l, i])
                remaining[i] += 1

    # label vectors are visited in lexicographic order, so strict < keeps the first tie
    visit(0, 0.0)
    return Dataset(X, np.array(best), k=sites.k)


def vertex_enumeration(lp: LinearProgram, tol: float = 1e-9) -> Optional[tuple[float, np.ndarray]]:
    """Best vertex of ``lp`` by trying every square active set.

    Returns None when the feasible region has no vertex. On bounded feasible
    programs this is the optimum.
    """
    m = lp.num_vars
    bound_rows = -np.eye(m)[~lp.free]
    G = np.vstack([lp.A, bound_rows])
    h = np.concatenate([lp.b, np.zeros(len(bound_rows))])
    scale = np.maximum(np.abs(G).max(axis=1), 1.0)
    best = None
    for active in itertools.combinations(range(len(G)), m):
        sub = G[list(active)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        v = np.linalg.solve(sub, h[list(active)])
        if np.all((G @ v - h) / scale <= tol * max(1.0, np.abs(v).max())):
            val = float(lp.c @ v)
            if best is None or val > best[0]:
                best = (val, v)
    return best


def random_bounded_lp(rng: np.random.Generator, max_vars: int = 6, max_rows: int = 8) -> LinearProgram:
    """Random feasible program whose feasible region is a polytope.

    The first m+1 rows positively span R^m, which bounds the region regardless
    of which variables are free. Some rows pass through the seed point, so
    degenerate vertices are common.
    """
    m = int(rng.integers(1, max_vars + 1))
    extra = int(rng.integers(0, max_rows - m))
    while True:
        U = rng.normal(size=(m, m))
        if abs(np.linalg.det(U)) > 1e-3:
            break
    w = rng.uniform(0.2, 2.0, size=m)
    rows = [U, -(w @ U)[None, :]]
    if extra:
        rows.append(rng.normal(size=(extra, m)))
    A = np.vstack(rows)
    x0 = rng.normal(size=m)
    free = rng.random(m) < 0.5
    x0[~free] = np.abs(x0[~free])
    slack = rng.exponential(1.0, size=len(A))
    slack[rng.random(len(A)) < 0.3] = 0.0
    b = A @ x0 + slack
    c = rng.normal(size=m)
    return LinearProgram(c, A, b, free)


def random_instance(
    rng: np.random.Generator,
    n: int,
    k: int,
    d: int,
    spread: float = 2.5,
    flip: float = 0.15,
) -> Dataset:
    """Noisy Gaussian clusters with a fraction of labels reassigned at random."""
    while True:
        centers = rng.normal(scale=spread, size=(k, d))
        labels = np.concatenate([np.arange(k), rng.integers(0, k, size=n - k)])
        rng.shuffle(labels)
        pts = centers[labels] + rng.normal(size=(n, d))
        noisy = rng.random(n) < flip
        labels = labels.copy()
        labels[noisy] = rng.integers(0, k, size=int(noisy.sum()))
        if np.all(np.bincount(labels, minlength=k) > 0):
            try:
                return Dataset(pts, labels, k=k)
            except GeometryError:
                continue


def brute_force_threshold(
    data: Dataset,
    sites: SiteSet,
    variant: Variant | str = Variant.MEP,
    *,
    backend: str = "simplex",
) -> int:
    """Smallest budget with non-negative optimal margin, by scanning t = 0, 1, 2, ..."""
    variant = Variant(variant)
    hard = solve(build_pspd_fixed(sigma_matrix(data, sites)), backend=backend)
    if hard.x[data.k - 1] >= -TAU_NUM:
        return 0
    t_max = max_errors(data, variant)
    for t in range(1, t_max + 1):
        sol = solve(build_soft(data, sites, t, variant), backend=backend)
        if sol.status is LpStatus.UNBOUNDED or sol.x[data.k - 1] >= -TAU_NUM:
            return t
    return t_max


@dataclass
class EvalReport:
    """Confusion counts (rows: true cluster, columns: predicted) and error rate."""

    confusion: np.ndarray
    threshold: Optional[ThresholdResult] = None
    timings: list[float] = field(default_factory=list)
    notes: dict[str, Any] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return int(self.confusion.sum())

    @property
    def misclassified(self) -> int:
        return self.total - int(np.trace(self.confusion))

    @property
    def rate(self) -> float:
        return self.misclassified / self.total if self.total else 0.0

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "confusion": self.confusion.tolist(),
            "misclassified": self.misclassified,
            "total": self.total,
            "misclassification_rate": self.rate,
            "lp_timings": list(self.timings),
        }
        if self.threshold is not None:
            out["threshold"] = threshold_to_dict(self.threshold)
        out.update(self.notes)
        return out


def evaluate_classifier(diagram: PowerDiagram, test: Dataset, **extra) -> EvalReport:
    if diagram.d != test.d:
        raise GeometryError(f"test points have dimension {test.d}, diagram {diagram.d}")
    if diagram.k != test.k:
        raise GeometryError(f"test set has {test.k} clusters, diagram {diagram.k}")
    predicted = diagram.classify(test.points)
    confusion = np.zeros((test.k, test.k), dtype=int)
    np.add.at(confusion, (test.labels, predicted), 1)
    return EvalReport(confusion, **extra)


def timing_report(
    data: Dataset,
    sites: SiteSet,
    t_values: Sequence[int],
    variant: Variant | str = Variant.MEP,
    repeats: int = 10,
    backend: str = "simplex",
) -> list[dict]:
    """Wall-clock time for ``repeats`` cold solves of each soft program."""
    out = []
    for t in t_values:
        lp = build_soft(data, sites, t, variant)
        start = time.perf_counter()
        for _ in range(repeats):
            sol = solve(lp, backend=backend)
        elapsed = time.perf_counter() - start
        out.append(
            {
                "t": int(t),
                "rows": lp.num_rows,
                "columns": lp.num_vars,
                "repeats": repeats,
                "seconds": elapsed,
                "status": sol.status.value,
            }
        )
    return out


def threshold_to_dict(res: ThresholdResult) -> dict:
    return {
        "tau": float(res.tau),
        "tau_fraction": f"{res.tau.numerator}/{res.tau.denominator}",
        "t_min": res.t_min,
        "variant": res.variant.value,
        "epsilon": res.epsilon,
        "gamma": None if res.diagram is None else res.diagram.gamma.tolist(),
        "lp_solve_count": res.lp_solve_count,
    }


def _canonical(obj) -> str:
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        return "{" + ",".join(json.dumps(k) + ":" + _canonical(v) for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_canonical(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return _canonical(obj.tolist())
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, Fraction):
        return _canonical(float(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return '"nan"'
        if math.isinf(x):
            return '"inf"' if x > 0 else '"-inf"'
        text = "%.6f" % x
        return "0.000000" if text == "-0.000000" else text
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj) -> str:
    """JSON with sorted keys, no whitespace, and every float printed as ``%.6f``.

    Non-finite floats become the strings ``"inf"``, ``"-inf"`` and ``"nan"``.
    """
    return _canonical(obj)
