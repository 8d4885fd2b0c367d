"""Dense two-phase primal simplex for small and medium linear programs.

Programs are stated as ``max c^T v  s.t.  A v <= b`` with each variable either
free or non-negative. Free variables are split into a difference of two
non-negative columns. Rows are scaled to unit max-norm before solving.

Pivoting uses Dantzig's largest-reduced-cost rule and switches to Bland's
smallest-index rule after a run of degenerate pivots, returning to Dantzig as
soon as the objective strictly improves. Any cycle consists solely of
degenerate pivots, so this hybrid inherits Bland's termination guarantee.

``solve(..., backend="highs")`` routes the same contract through SciPy's HiGHS
bindings for programs too large for the dense tableau.
"""

from __future__ import annotations

import enum
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, TextIO

import numpy as np

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-9
COST_TOL = 1e-9
FEAS_TOL = 1e-9
DEGENERATE_RUN = 25


class LpError(RuntimeError):
    """Malformed program or numerical breakdown inside the solver."""


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    UNBOUNDED = "unbounded"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class LinearProgram:
    """``max c^T v`` subject to ``A v <= b``; ``free[j]`` marks unbounded variables.

    Variables with ``free[j] == False`` are constrained to ``v_j >= 0``.
    """

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    free: np.ndarray
    names: Optional[tuple[str, ...]] = None
    row_names: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        c = np.array(self.c, dtype=float).reshape(-1)
        m = len(c)
        if m == 0:
            raise LpError("a linear program needs at least one variable")
        A = np.array(self.A, dtype=float)
        if A.size == 0:
            A = A.reshape(0, m)
        if A.ndim != 2 or A.shape[1] != m:
            raise LpError(f"constraint matrix has shape {A.shape}, expected (rows, {m})")
        b = np.array(self.b, dtype=float).reshape(-1)
        if len(b) != A.shape[0]:
            raise LpError(f"rhs has length {len(b)}, expected {A.shape[0]}")
        free = np.array(self.free, dtype=bool).reshape(-1)
        if free.shape == (1,) and m > 1:
            free = np.repeat(free, m)
        if len(free) != m:
            raise LpError(f"bound marker has length {len(free)}, expected {m}")
        for name, arr in (("objective", c), ("constraint matrix", A), ("rhs", b)):
            if not np.all(np.isfinite(arr)):
                raise LpError(f"{name} contains non-finite coefficients")
        if self.names is not None and len(self.names) != m:
            raise LpError("one name per variable required")
        if self.row_names is not None and len(self.row_names) != A.shape[0]:
            raise LpError("one name per row required")
        for arr in (c, A, b, free):
            arr.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "free", free)

    @property
    def num_vars(self) -> int:
        return len(self.c)

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    def with_objective(self, c) -> "LinearProgram":
        return LinearProgram(c, self.A, self.b, self.free, self.names, self.row_names)

    def residuals(self, v) -> np.ndarray:
        """Row violations ``A v - b`` on max-norm scaled rows (positive means violated)."""
        scale = np.abs(self.A).max(axis=1, initial=0.0)
        scale[scale == 0] = 1.0
        return (self.A @ np.asarray(v) - self.b) / scale


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    x: Optional[np.ndarray] = None
    objective: float = math.nan
    duals: Optional[np.ndarray] = None
    iterations: int = 0
    basis: Optional[tuple[int, ...]] = field(default=None, repr=False)
    ray: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class _StandardForm:
    """Column bookkeeping for ``[A+ | A- | I] x = b`` with scaled rows."""

    def __init__(self, lp: LinearProgram):
        m = lp.num_vars
        scale = np.abs(lp.A).max(axis=1, initial=0.0)
        zero = scale == 0
        if np.any(lp.b[zero] < -FEAS_TOL):
            self.trivially_infeasible = True
        else:
            self.trivially_infeasible = False
        self.kept = np.flatnonzero(~zero)
        scale = scale[self.kept]
        self.scale = scale
        A = lp.A[self.kept] / scale[:, None]
        self.b = lp.b[self.kept] / scale
        self.free_idx = np.flatnonzero(lp.free)
        r = len(self.kept)
        self.m = m
        self.r = r
        self.n_struct = m + len(self.free_idx)
        self.n_cols = self.n_struct + r
        self.M = np.hstack([A, -A[:, self.free_idx], np.eye(r)])
        self.cost = np.concatenate([lp.c, -lp.c[self.free_idx], np.zeros(r)])

    def to_original(self, x: np.ndarray) -> np.ndarray:
        v = x[: self.m].copy()
        v[self.free_idx] -= x[self.m : self.n_struct]
        return v


def _pivot(T: np.ndarray, p: int, q: int) -> None:
    prow = T[p] / T[p, q]
    T -= np.outer(T[:, q], prow)
    T[p] = prow


class _Simplex:
    def __init__(self, T: np.ndarray, basis: list[int], max_iter: int):
        # T holds the constraint rows followed by one reduced-cost row whose
        # last entry is minus the current objective value.
        self.T = T
        self.basis = basis
        self.iterations = 0
        self.max_iter = max_iter

    @property
    def rows(self) -> int:
        return self.T.shape[0] - 1

    def price(self, cost: np.ndarray) -> None:
        T = self.T
        r = self.rows
        cb = cost[self.basis]
        T[r, :-1] = cost - cb @ T[:r, :-1]
        T[r, -1] = -(cb @ T[:r, -1])

    def run(self) -> Optional[int]:
        """Pivot to optimality. Returns an entering column if unbounded, else None."""
        T = self.T
        r = self.rows
        degenerate_run = 0
        while True:
            rc = T[r, :-1]
            candidates = np.flatnonzero(rc > COST_TOL)
            if len(candidates) == 0:
                return None
            if degenerate_run >= DEGENERATE_RUN:
                q = int(candidates[0])
            else:
                q = int(candidates[np.argmax(rc[candidates])])
            col = T[:r, q]
            rows = np.flatnonzero(col > PIVOT_TOL)
            if len(rows) == 0:
                return q
            rhs = np.maximum(T[rows, -1], 0.0)
            ratios = rhs / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * (1.0 + best)]
            basis_arr = np.asarray(self.basis)
            p = int(ties[np.argmin(basis_arr[ties])])
            degenerate_run = degenerate_run + 1 if best <= 1e-12 else 0
            _pivot(T, p, q)
            T[:r, -1][np.abs(T[:r, -1]) < 1e-13] = 0.0
            self.basis[p] = q
            self.iterations += 1
            if self.iterations > self.max_iter:
                raise LpError(f"iteration limit {self.max_iter} exceeded")
            if not np.isfinite(T[p, -1]):
                raise LpError("numeric overflow during pivoting")


def _warm_tableau(sf: _StandardForm, basis: Sequence[int]) -> Optional[np.ndarray]:
    if len(basis) != sf.r or any(not 0 <= j < sf.n_cols for j in basis):
        return None
    if len(set(basis)) != len(basis):
        return None
    B = sf.M[:, list(basis)]
    try:
        if np.linalg.cond(B) > 1e12:
            return None
        T = np.linalg.solve(B, np.hstack([sf.M, sf.b[:, None]]))
    except np.linalg.LinAlgError:
        return None
    if np.any(T[:, -1] < -FEAS_TOL):
        return None
    T[:, -1] = np.maximum(T[:, -1], 0.0)
    return np.vstack([T, np.zeros((1, T.shape[1]))])


def _cold_start(sf: _StandardForm, max_iter: int):
    """Phase one. Returns (simplex, kept_rows) or None when infeasible."""
    r, N = sf.r, sf.n_cols
    neg = sf.b < 0
    sign = np.where(neg, -1.0, 1.0)
    art_rows = np.flatnonzero(neg)
    n_art = len(art_rows)
    T = np.zeros((r + 1, N + n_art + 1))
    T[:r, :N] = sf.M * sign[:, None]
    T[:r, -1] = sf.b * sign
    T[art_rows, N + np.arange(n_art)] = 1.0
    basis = [sf.n_struct + i for i in range(r)]
    for a, i in enumerate(art_rows):
        basis[i] = N + a
    sx = _Simplex(T, basis, max_iter)
    if n_art:
        cost = np.zeros(N + n_art)
        cost[N:] = -1.0
        sx.price(cost)
        sx.run()
        artificial_sum = sx.T[r, -1]
        if artificial_sum > FEAS_TOL * max(1.0, float(np.abs(sf.b).max(initial=0.0))) * 10:
            return None
        # drive zero-level artificials out of the basis; drop redundant rows
        keep = np.ones(r, dtype=bool)
        for p in range(r):
            if sx.basis[p] < N:
                continue
            row = sx.T[p, :N]
            nz = np.flatnonzero(np.abs(row) > PIVOT_TOL)
            if len(nz):
                q = int(nz[np.argmax(np.abs(row[nz]))])
                _pivot(sx.T, p, q)
                sx.basis[p] = q
            else:
                keep[p] = False
        rows = np.flatnonzero(keep)
        T = np.vstack([sx.T[rows][:, list(range(N)) + [-1]], np.zeros((1, N + 1))])
        basis = [sx.basis[p] for p in rows]
        sx2 = _Simplex(T, basis, max_iter)
        sx2.iterations = sx.iterations
        return sx2, rows
    return sx, np.arange(r)


def solve(
    lp: LinearProgram,
    warm: Optional[LpSolution | Sequence[int]] = None,
    *,
    backend: str = "simplex",
    max_iter: Optional[int] = None,
) -> LpSolution:
    """Solve ``lp``.

    ``warm`` may be a previous :class:`LpSolution` (or its ``basis``) for a
    program with the same constraints; it only affects the iteration count.
    """
    if backend == "highs":
        return _solve_highs(lp)
    if backend != "simplex":
        raise LpError(f"unknown LP backend {backend!r}")

    sf = _StandardForm(lp)
    if sf.trivially_infeasible:
        return LpSolution(LpStatus.INFEASIBLE)
    if max_iter is None:
        max_iter = 50 * (sf.r + sf.n_cols) + 1000

    if sf.r == 0:
        return _solve_unconstrained(lp, sf)

    basis_hint = warm.basis if isinstance(warm, LpSolution) else warm
    sx = None
    rows = np.arange(sf.r)
    if basis_hint is not None:
        T = _warm_tableau(sf, basis_hint)
        if T is not None:
            sx = _Simplex(T, list(basis_hint), max_iter)
        else:
            log.debug("warm basis rejected; cold start")
    if sx is None:
        started = _cold_start(sf, max_iter)
        if started is None:
            return LpSolution(LpStatus.INFEASIBLE)
        sx, rows = started

    N = sf.n_cols
    sx.price(sf.cost)
    entering = sx.run()
    if entering is not None:
        ray = _extract_ray(sf, sx, entering)
        _verify_ray(lp, ray)
        return LpSolution(LpStatus.UNBOUNDED, iterations=sx.iterations, basis=tuple(sx.basis), ray=ray)

    x = np.zeros(N)
    x[sx.basis] = sx.T[:-1, -1]
    basis = list(sx.basis)
    B = sf.M[rows][:, basis]
    try:
        xb = np.linalg.solve(B, sf.b[rows])
        if np.all(xb >= -FEAS_TOL):
            x = np.zeros(N)
            x[basis] = np.maximum(xb, 0.0)
        y_rows = np.linalg.solve(B.T, sf.cost[basis])
    except np.linalg.LinAlgError:
        y_rows = np.zeros(len(rows))
    v = sf.to_original(x)
    y_scaled = np.zeros(sf.r)
    y_scaled[rows] = y_rows
    duals = np.zeros(lp.num_rows)
    duals[sf.kept] = y_scaled / sf.scale
    full_basis = tuple(basis) if len(rows) == sf.r else None
    return LpSolution(
        LpStatus.OPTIMAL,
        x=v,
        objective=float(lp.c @ v),
        duals=duals,
        iterations=sx.iterations,
        basis=full_basis,
    )


def _solve_unconstrained(lp: LinearProgram, sf: _StandardForm) -> LpSolution:
    c = lp.c
    improving = np.flatnonzero((lp.free & (np.abs(c) > COST_TOL)) | (~lp.free & (c > COST_TOL)))
    if len(improving):
        ray = np.zeros(lp.num_vars)
        j = improving[0]
        ray[j] = np.sign(c[j])
        return LpSolution(LpStatus.UNBOUNDED, ray=ray)
    v = np.zeros(lp.num_vars)
    return LpSolution(LpStatus.OPTIMAL, x=v, objective=0.0, duals=np.zeros(lp.num_rows), basis=())


def _extract_ray(sf: _StandardForm, sx: _Simplex, q: int) -> np.ndarray:
    d = np.zeros(sf.n_cols)
    d[q] = 1.0
    col = sx.T[:-1, q]
    for p, j in enumerate(sx.basis):
        d[j] -= col[p]
    return sf.to_original(d)


def _verify_ray(lp: LinearProgram, ray: np.ndarray) -> None:
    size = max(1.0, float(np.abs(ray).max()))
    scale = np.abs(lp.A).max(axis=1, initial=0.0)
    scale[scale == 0] = 1.0
    growth = (lp.A @ ray) / scale
    bad_bound = np.any(ray[~lp.free] < -1e-7 * size)
    if lp.num_rows and growth.max() > 1e-7 * size or bad_bound or lp.c @ ray <= 0:
        raise LpError("unbounded direction failed verification")


def _solve_highs(lp: LinearProgram) -> LpSolution:
    from scipy.optimize import linprog

    bounds = [(None, None) if f else (0, None) for f in lp.free]
    kwargs = {}
    if lp.num_rows:
        kwargs = {"A_ub": lp.A, "b_ub": lp.b}
    res = linprog(-lp.c, bounds=bounds, method="highs", **kwargs)
    if res.status == 0:
        duals = -np.asarray(res.ineqlin.marginals) if lp.num_rows else np.zeros(0)
        v = np.asarray(res.x)
        return LpSolution(
            LpStatus.OPTIMAL, x=v, objective=float(lp.c @ v), duals=duals, iterations=int(res.nit)
        )
    if res.status == 2:
        return LpSolution(LpStatus.INFEASIBLE, iterations=int(res.nit))
    if res.status == 3:
        return LpSolution(LpStatus.UNBOUNDED, iterations=int(res.nit))
    raise LpError(f"HiGHS failed: {res.message}")


def solve_feasibility(lp: LinearProgram, **kwargs) -> LpSolution:
    """Find any feasible point of ``lp``'s constraints (the objective is ignored)."""
    return solve(lp.with_objective(np.zeros(lp.num_vars)), **kwargs)


# -- fixed-format MPS ---------------------------------------------------------


def _mps_number(value: float) -> str:
    text = repr(float(value))
    if len(text) <= 12:
        return text
    for digits in range(12, 0, -1):
        text = f"{value:.{digits}g}"
        if len(text) <= 12:
            return text
    raise LpError(f"cannot format {value!r} in 12 characters")


def _mps_line(kind: str, name1: str, name2: str = "", value=None, name3: str = "", value2=None) -> str:
    line = f" {kind:<2} {name1:<8}"
    if name2:
        line += f"  {name2:<8}"
    if value is not None:
        line += f"  {_mps_number(value):>12}"
    if name3:
        line += f"   {name3:<8}  {_mps_number(value2):>12}"
    return line.rstrip()


def write_mps(lp: LinearProgram, out: TextIO, name: str = "SOFTPD") -> None:
    """Write ``lp`` in fixed MPS with an ``OBJSENSE MAX`` section."""
    cols = lp.names or tuple(f"v{j + 1}" for j in range(lp.num_vars))
    rows = lp.row_names or tuple(f"r{i + 1}" for i in range(lp.num_rows))
    for label in (*cols, *rows):
        if len(label) > 8 or " " in label:
            raise LpError(f"name {label!r} does not fit fixed MPS")
    out.write(f"NAME          {name}\n")
    out.write("OBJSENSE\n    MAX\n")
    out.write("ROWS\n")
    out.write(" N  obj\n")
    for r in rows:
        out.write(f" L  {r}\n")
    out.write("COLUMNS\n")
    for j, col in enumerate(cols):
        entries = []
        if lp.c[j] != 0:
            entries.append(("obj", lp.c[j]))
        for i in np.flatnonzero(lp.A[:, j]):
            entries.append((rows[i], lp.A[i, j]))
        if not entries:
            # keep empty columns visible to readers
            entries.append(("obj", 0.0))
        for a in range(0, len(entries), 2):
            pair = entries[a : a + 2]
            if len(pair) == 2:
                out.write(_mps_line("", col, pair[0][0], pair[0][1], pair[1][0], pair[1][1]) + "\n")
            else:
                out.write(_mps_line("", col, pair[0][0], pair[0][1]) + "\n")
    out.write("RHS\n")
    for i in np.flatnonzero(lp.b):
        out.write(_mps_line("", "RHS", rows[i], lp.b[i]) + "\n")
    free_cols = [cols[j] for j in np.flatnonzero(lp.free)]
    if free_cols:
        out.write("BOUNDS\n")
        for col in free_cols:
            out.write(_mps_line("FR", "BND", col) + "\n")
    out.write("ENDATA\n")


def to_mps(lp: LinearProgram, name: str = "SOFTPD") -> str:
    buf = io.StringIO()
    write_mps(lp, buf, name)
    return buf.getvalue()


def read_mps(text: str) -> LinearProgram:
    """Parse the subset of fixed MPS produced by :func:`write_mps`."""
    section = None
    sense_max = False
    row_order: list[str] = []
    obj_row = None
    cols: dict[str, dict[str, float]] = {}
    rhs: dict[str, float] = {}
    free: set[str] = set()
    for raw in text.splitlines():
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw.startswith(" "):
            section = raw.split()[0]
            continue
        parts = raw.split()
        if section == "OBJSENSE":
            sense_max = parts[0].upper() == "MAX"
        elif section == "ROWS":
            kind, rname = parts
            if kind == "N":
                obj_row = rname
            elif kind == "L":
                row_order.append(rname)
            else:
                raise LpError(f"unsupported row type {kind}")
        elif section == "COLUMNS":
            entry = cols.setdefault(parts[0], {})
            for a in range(1, len(parts), 2):
                entry[parts[a]] = float(parts[a + 1])
        elif section == "RHS":
            for a in range(1, len(parts), 2):
                rhs[parts[a]] = float(parts[a + 1])
        elif section == "BOUNDS":
            if parts[0] != "FR":
                raise LpError(f"unsupported bound type {parts[0]}")
            free.add(parts[2])
    names = tuple(cols)
    index = {r: i for i, r in enumerate(row_order)}
    A = np.zeros((len(row_order), len(names)))
    c = np.zeros(len(names))
    for j, col in enumerate(names):
        for rname, val in cols[col].items():
            if rname == obj_row:
                c[j] = val
            else:
                A[index[rname], j] = val
    if not sense_max:
        c = -c
    b = np.array([rhs.get(r, 0.0) for r in row_order])
    return LinearProgram(c, A, b, [n in free for n in names], names, tuple(row_order))
