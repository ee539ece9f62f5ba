"""LP solving and pessimization oracles.

A dense two-phase primal simplex (Bland's anti-cycling rule) solves the
lowered linear models.  Second-order-cone rows are handled by an outer
cutting loop on the master LP, and a pessimization-based cutting-plane loop
solves canonical robust models directly, serving as the independent oracle
for every reformulation.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .canonicalize import CanonicalModel
from .errors import SolverError, UnsupportedSetError
from .model import (EQ, INF, LE, LinExpr, MinkowskiSum, NormBall, Polyhedral,
                    UncertaintySet, VariableDecl, vector_norm)
from .lower import DeterministicModel, LinRow

log = logging.getLogger("roc")

FEAS_TOL = 1e-7
PIVOT_TOL = 1e-9
DEGEN_TOL = 1e-11
MAX_PIVOTS = 100_000
MAX_ROUNDS = 500
CUT_POOL = 30  # live cuts kept per cone / uncertain row

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration-limit"


@dataclass(frozen=True)
class Solution:
    status: str
    objective: float
    values: dict[str, float]
    iterations: int


@dataclass(frozen=True)
class PessimizationResult:
    """Worst-case z for a fixed numeric argument w = P^T x."""

    zstar: np.ndarray
    value: float  # max over z in Z of w^T z


# ---------------------------------------------------------------------------
# Two-phase primal simplex
# ---------------------------------------------------------------------------

class _StandardForm:
    """min c'x', A x' <= b, x' >= 0, tracking the variable transforms."""

    def __init__(self, model: DeterministicModel):
        self.fixed: dict[str, float] = {}
        free_vars = []
        for v in model.vars:
            if v.is_fixed():
                self.fixed[v.id] = v.lower
            else:
                free_vars.append(v)

        # column layout per remaining variable:
        #   shift:  x = lo + x'        (finite lower bound)
        #   mirror: x = up - x'        (upper bound only)
        #   split:  x = x+ - x-        (free)
        self.columns: list[tuple[str, str, float]] = []
        self.box_rows: list[tuple[int, float]] = []  # (column, residual upper bound)
        for v in free_vars:
            if v.lower > -INF:
                col = len(self.columns)
                self.columns.append((v.id, "shift", v.lower))
                if v.upper < INF:
                    self.box_rows.append((col, v.upper - v.lower))
            elif v.upper < INF:
                self.columns.append((v.id, "mirror", v.upper))
            else:
                self.columns.append((v.id, "pos", 0.0))
                self.columns.append((v.id, "neg", 0.0))

        self.ncols = len(self.columns)
        self.col_of: dict[str, list[int]] = {}
        for j, (vid, _, _) in enumerate(self.columns):
            self.col_of.setdefault(vid, []).append(j)

    def row_vector(self, lhs: LinExpr) -> tuple[np.ndarray, float]:
        """Dense coefficient vector over standard columns + rhs offset."""
        a = np.zeros(self.ncols)
        offset = 0.0
        for vid, coeff in lhs.terms:
            if vid in self.fixed:
                offset += coeff * self.fixed[vid]
                continue
            for j in self.col_of[vid]:
                kind = self.columns[j][1]
                if kind == "shift":
                    a[j] += coeff
                    offset += coeff * self.columns[j][2]
                elif kind == "mirror":
                    a[j] -= coeff
                    offset += coeff * self.columns[j][2]
                elif kind == "pos":
                    a[j] += coeff
                else:
                    a[j] -= coeff
        return a, offset

    def recover(self, x: np.ndarray) -> dict[str, float]:
        values = dict(self.fixed)
        for j, (vid, kind, base) in enumerate(self.columns):
            if kind == "shift":
                values[vid] = base + x[j]
            elif kind == "mirror":
                values[vid] = base - x[j]
            elif kind == "pos":
                values[vid] = values.get(vid, 0.0) + x[j]
            else:
                values[vid] = values.get(vid, 0.0) - x[j]
        # snap float dust onto zero and return plain floats
        return {v: (0.0 if abs(x) < 1e-12 else float(x)) for v, x in values.items()}


class _Tableau:
    """Simplex tableau refactorized from the original data at every pivot.

    Incremental tableau updates on ill-conditioned bases (e.g. masters full
    of near-parallel cuts) accumulate enough floating error to corrupt both
    the rhs column and the pivot selection.  Re-solving B^-1 [A | b] from
    the untouched data after each basis change keeps every pivot decision at
    roundoff accuracy; at desk scale the extra LU factorizations are cheap.
    """

    def __init__(self, A_ext: np.ndarray, b0: np.ndarray, basis: np.ndarray):
        self.A_ext = A_ext
        self.b0 = b0
        self.basis = basis
        self.m = A_ext.shape[0]
        self.T = np.zeros((self.m + 1, A_ext.shape[1] + 1))
        self.rebuild(np.zeros(A_ext.shape[1]))

    def rebuild(self, cost: np.ndarray):
        B = self.A_ext[:, self.basis]
        try:
            body = np.linalg.solve(B, np.hstack([self.A_ext, self.b0[:, None]]))
        except np.linalg.LinAlgError as exc:
            raise SolverError("numerically singular simplex basis") from exc
        self.T[:self.m] = body
        self.T[-1, :-1] = cost - cost[self.basis] @ body[:, :-1]
        self.T[-1, -1] = -cost[self.basis] @ body[:, -1]
        # basic columns are unit columns by definition; writing them exactly
        # removes back-solve noise that would otherwise let a basic column
        # "re-enter" against itself (reduced cost -1e-9 instead of 0)
        self.T[:self.m, self.basis] = 0.0
        self.T[np.arange(self.m), self.basis] = 1.0
        self.T[-1, self.basis] = 0.0
        # snap dust in the basic values to exact zeros: negatives would
        # produce negative ratios, and tiny positives would make degenerate
        # ties inexact, cutting Bland's anticycling out of the loop
        rhs = self.T[:self.m, -1]
        rhs[(rhs > -FEAS_TOL) & (rhs < DEGEN_TOL)] = 0.0

    def pivot(self, row: int, col: int, cost: np.ndarray):
        self.basis[row] = col
        self.rebuild(cost)

    def iterate(self, cost: np.ndarray, allowed: int, pivots_left: int) -> tuple[str, int]:
        """Bland-rule pivoting until optimal/unbounded/limit.

        `allowed` bounds the entering-column index (bans artificials in
        phase 2).  Returns (status, pivots used).
        """
        T = self.T
        m = self.m
        used = 0
        threshold = PIVOT_TOL
        visited: set[bytes] = set()
        while True:
            candidates = np.nonzero(T[-1, :allowed] < -threshold)[0]
            if candidates.size == 0:
                return OPTIMAL, used
            # noise-scale reduced costs can drive a cycle through refactorized
            # tableaus; a repeated basis means no exact-arithmetic progress is
            # available at this threshold, so demand a clearly negative cost
            key = self.basis.tobytes()
            if key in visited:
                if threshold >= FEAS_TOL:
                    log.warning("simplex settled on a degenerate basis cycle")
                    return OPTIMAL, used
                threshold = FEAS_TOL
                visited.clear()
                continue
            visited.add(key)
            col = int(candidates[0])  # Bland: smallest index
            column = T[:m, col]
            rows = np.nonzero(column > PIVOT_TOL)[0]
            if rows.size == 0:
                return UNBOUNDED, used
            ratios = T[rows, -1] / column[rows]
            best = np.min(ratios)
            ties = rows[ratios == best]  # exact ties: anticycling needs them exact
            row = int(ties[np.argmin(self.basis[ties])])  # Bland: smallest basic index
            if used >= pivots_left:
                return ITERATION_LIMIT, used
            self.pivot(row, col, cost)
            used += 1


def simplex_solve(model: DeterministicModel, max_pivots: int = MAX_PIVOTS) -> Solution:
    """Two-phase dense primal simplex over a purely linear model."""
    if model.soc_rows:
        raise SolverError("simplex cannot handle second-order-cone rows; lower or cut them first")

    sf = _StandardForm(model)

    rows: list[np.ndarray] = []
    rhs: list[float] = []

    def add_le(a: np.ndarray, b: float):
        rows.append(a)
        rhs.append(b)

    for lin in model.linear_rows:
        a, offset = sf.row_vector(lin.lhs)
        b = lin.rhs - offset
        if lin.sense == LE:
            add_le(a, b)
        elif lin.sense == EQ:
            # equalities are split into paired inequalities at ingestion
            add_le(a.copy(), b)
            add_le(-a, -b)
        else:
            raise SolverError(f"row {lin.id}: unsupported sense {lin.sense!r}")
    for col, residual in sf.box_rows:
        a = np.zeros(sf.ncols)
        a[col] = 1.0
        add_le(a, residual)

    c, c_offset = sf.row_vector(model.objective)
    c_offset += model.objective.constant

    n = sf.ncols
    m = len(rows)
    if m == 0 and n == 0:
        return Solution(OPTIMAL, c_offset, dict(sf.fixed), 0)

    A = np.array(rows).reshape(m, n) if m else np.zeros((0, n))
    b = np.array(rhs)

    # slack per row; artificial where the slack basis is infeasible (b < 0)
    neg = b < 0
    A = np.where(neg[:, None], -A, A) if m else A
    b = np.abs(b)
    S = np.eye(m)
    S[neg, :] *= -1.0
    n_art = int(np.count_nonzero(neg))
    art_cols = np.zeros((m, n_art))
    art_of_row = {}
    k = 0
    for i in range(m):
        if neg[i]:
            art_cols[i, k] = 1.0
            art_of_row[i] = n + m + k
            k += 1

    total = n + m + n_art
    A_ext = np.hstack([A, S, art_cols]) if m else np.zeros((0, total))
    basis = np.array([art_of_row.get(i, n + i) for i in range(m)], dtype=int)
    tab = _Tableau(A_ext, b, basis)
    pivots = 0

    # Phase 1: minimize the sum of artificials.
    if n_art:
        cost1 = np.zeros(total)
        cost1[n + m:] = 1.0
        tab.rebuild(cost1)
        status, used = tab.iterate(cost1, total, max_pivots)
        pivots += used
        if status == ITERATION_LIMIT:
            return Solution(ITERATION_LIMIT, math.nan, {}, pivots)
        if -tab.T[-1, -1] > FEAS_TOL:  # leftover artificial mass
            return Solution(INFEASIBLE, math.nan, {}, pivots)
        # drive leftover zero-level artificials out of the basis where possible
        for i in range(m):
            if tab.basis[i] >= n + m:
                cols = np.nonzero(np.abs(tab.T[i, :n + m]) > PIVOT_TOL)[0]
                if cols.size:
                    tab.pivot(i, int(cols[0]), cost1)
                    pivots += 1

    # Phase 2: original objective, artificials banned from entering.
    cost2 = np.zeros(total)
    cost2[:n] = c
    tab.rebuild(cost2)
    status, used = tab.iterate(cost2, n + m, max_pivots - pivots)
    pivots += used
    if status == ITERATION_LIMIT:
        return Solution(ITERATION_LIMIT, math.nan, {}, pivots)
    if status == UNBOUNDED:
        return Solution(UNBOUNDED, -math.inf, {}, pivots)

    x = np.zeros(total)
    x[tab.basis] = tab.T[:m, -1]
    values = sf.recover(x[:n])
    objective = float(c @ x[:n] + c_offset)
    return Solution(OPTIMAL, objective, values, pivots)


# ---------------------------------------------------------------------------
# Pessimization (worst-case z for a numeric argument)
# ---------------------------------------------------------------------------

def pessimize(uset: UncertaintySet, w: np.ndarray) -> PessimizationResult:
    """Closed-form / inner-LP maximizer of w^T z over z in Z."""
    w = np.asarray(w, dtype=float)
    if w.shape != (uset.dim,):
        raise SolverError(f"pessimize: argument shape {w.shape} does not match set dim {uset.dim}")

    if isinstance(uset, NormBall):
        rho = uset.radius
        if rho == 0.0 or not w.any():
            z = np.zeros(uset.dim)
            return PessimizationResult(z, float(rho * vector_norm(w, dual_q(uset.p)) if w.any() else 0.0))
        if uset.p == INF:
            z = rho * np.sign(w)
        elif uset.p == 1.0:
            z = np.zeros(uset.dim)
            i = int(np.argmax(np.abs(w)))
            z[i] = rho * np.sign(w[i])
        elif uset.p == 2.0:
            z = rho * w / np.linalg.norm(w)
        else:
            q = dual_q(uset.p)
            scale = vector_norm(w, q) ** (q - 1.0)
            z = rho * np.sign(w) * np.abs(w) ** (q - 1.0) / scale
        return PessimizationResult(z, float(w @ z))

    if isinstance(uset, Polyhedral):
        z_vars = tuple(VariableDecl(f"_z{l + 1}") for l in range(uset.dim))
        rows = tuple(
            LinRow(f"_pz{i + 1}",
                   LinExpr.of({z_vars[l].id: float(uset.D[i, l]) for l in range(uset.dim)}),
                   LE, float(uset.d[i]))
            for i in range(uset.D.shape[0]))
        inner = DeterministicModel(
            vars=z_vars,
            objective=LinExpr.of({v.id: -w[l] for l, v in enumerate(z_vars)}),
            linear_rows=rows)
        sol = simplex_solve(inner)
        if sol.status != OPTIMAL:
            raise SolverError(f"pessimization LP over polyhedron ended {sol.status}")
        z = np.array([sol.values[v.id] for v in z_vars])
        return PessimizationResult(z, float(-sol.objective))

    if isinstance(uset, MinkowskiSum):
        z = np.zeros(uset.dim)
        value = 0.0
        for member in uset.members:
            part = pessimize(member, w)
            z = z + part.zstar
            value += part.value
        return PessimizationResult(z, value)

    raise UnsupportedSetError(
        f"pessimization not supported for set kind {uset.kind!r}; "
        "use the reformulation path plus sampling")


def dual_q(p: float) -> float:
    if p == 1.0:
        return INF
    if p == INF:
        return 1.0
    return p / (p - 1.0)


# ---------------------------------------------------------------------------
# Polyhedron analysis (parse-time validation, stress points)
# ---------------------------------------------------------------------------

def coordinate_extremes(uset: Polyhedral) -> tuple[np.ndarray, np.ndarray, list[np.ndarray]]:
    """Min/max of each coordinate over D z <= d via 2L auxiliary LPs.

    Returns (lo, hi, extreme points).  Raises SolverError("unbounded ...")
    when any coordinate LP is unbounded.
    """
    L = uset.dim
    lo = np.zeros(L)
    hi = np.zeros(L)
    points: list[np.ndarray] = []
    for l in range(L):
        w = np.zeros(L)
        for sign, store in ((1.0, hi), (-1.0, lo)):
            w[l] = sign
            try:
                res = pessimize(uset, w)
            except SolverError as exc:
                raise SolverError(f"unbounded polyhedral set along coordinate {l + 1}") from exc
            store[l] = sign * res.value
            points.append(res.zstar)
        w[l] = 0.0
    return lo, hi, points


# ---------------------------------------------------------------------------
# Cutting loops
# ---------------------------------------------------------------------------

def _cut_key(lhs: LinExpr, rhs: float) -> tuple:
    return (tuple((v, round(c, 12)) for v, c in lhs.terms), round(rhs, 12))


class _CutPool:
    """Master rows: base rows plus a bounded FIFO of cuts per generator.

    Supporting cuts of one cone / uncertain row converge onto the same face
    and become nearly parallel; letting them pile up makes the master LP
    arbitrarily ill-conditioned.  Only the most recent CUT_POOL cuts per
    generator stay live (an evicted cut is re-addable if it re-violates).
    """

    def __init__(self, base_rows):
        self.base = list(base_rows)
        self.base_keys = {_cut_key(r.lhs, r.rhs) for r in self.base}
        self.pools: dict[str, list[LinRow]] = {}
        self.keys: dict[str, set] = {}

    def rows(self) -> tuple[LinRow, ...]:
        out = list(self.base)
        for pool in self.pools.values():
            out.extend(pool)
        return tuple(out)

    def add(self, gen_id: str, row: LinRow) -> bool:
        key = _cut_key(row.lhs, row.rhs)
        if key in self.base_keys:
            return False
        pool = self.pools.setdefault(gen_id, [])
        keys = self.keys.setdefault(gen_id, set())
        if key in keys:
            return False
        pool.append(row)
        keys.add(key)
        if len(pool) > CUT_POOL:
            old = pool.pop(0)
            keys.discard(_cut_key(old.lhs, old.rhs))
        return True


def solve_deterministic(model: DeterministicModel, feas_tol: float = FEAS_TOL,
                        max_rounds: int = MAX_ROUNDS) -> Solution:
    """Solve a lowered model; cone rows are enforced by outer cuts.

    Each violated cone row t >= ||w(x)||_2 contributes the supporting cut
    z*^T w(x) <= t at z* = w/||w||, i.e. the worst unit direction for the
    current iterate.
    """
    if not model.soc_rows:
        return simplex_solve(model)

    pool = _CutPool(model.linear_rows)
    for round_no in range(1, max_rounds + 1):
        sol = simplex_solve(replace(model, linear_rows=pool.rows(), soc_rows=()))
        if sol.status != OPTIMAL:
            return sol
        added = 0
        for k, soc in enumerate(model.soc_rows, start=1):
            w = np.array([e.evaluate(sol.values) for e in soc.arg])
            norm = np.linalg.norm(w)
            if norm - sol.values[soc.t] <= feas_tol:
                continue
            zstar = w / norm
            cut = LinExpr()
            for zj, arg in zip(zstar, soc.arg):
                cut = cut + arg.scaled(float(zj))
            cut = cut + LinExpr.of({soc.t: -1.0})
            if pool.add(f"soc{k}", LinRow(f"_soc{k}_c{round_no}", cut.drop_constant(),
                                          LE, -cut.constant)):
                added += 1
        if not added:
            return Solution(sol.status, sol.objective, sol.values, round_no)
    log.warning("cone cutting loop hit the round limit (%d)", max_rounds)
    return Solution(ITERATION_LIMIT, math.nan, {}, max_rounds)


def cutting_plane_solve(model: CanonicalModel, feas_tol: float = FEAS_TOL,
                        max_rounds: int = MAX_ROUNDS) -> Solution:
    """Pessimization-based solve of a canonical robust model.

    The master LP holds the certain rows plus the nominal (z = 0) version of
    every uncertain row; each outer round pessimizes every uncertain row at
    the current iterate and adds the violated realizations as cuts.
    """
    for row in model.rows:
        if row.adaptive is not None:
            raise SolverError(f"row {row.id}: apply the decision-rule stage before solving")

    uncertain = [row for row in model.rows if row.uncertainty is not None]
    pool = _CutPool([LinRow(row.id, row.lhs, LE, row.rhs) for row in model.rows])

    for round_no in range(1, max_rounds + 1):
        det = DeterministicModel(model.vars, model.objective, pool.rows())
        sol = simplex_solve(det)
        if sol.status != OPTIMAL:
            return sol
        added = 0
        for row in uncertain:
            block = row.uncertainty
            w = np.array([e.evaluate(sol.values) for e in block.arg_exprs()])
            worst = pessimize(block.uset, w)
            violation = row.lhs.evaluate(sol.values) + worst.value - row.rhs
            if violation <= feas_tol:
                continue
            shift = block.P @ worst.zstar  # coefficient perturbation at z*
            cut = row.lhs + LinExpr.of({v: float(shift[i]) for i, v in enumerate(block.on)})
            if pool.add(row.id, LinRow(f"{row.id}_cut{round_no}", cut, LE, row.rhs)):
                added += 1
        if not added:
            return Solution(sol.status, sol.objective, sol.values, round_no)
    log.warning("cutting-plane loop hit the round limit (%d)", max_rounds)
    return Solution(ITERATION_LIMIT, math.nan, {}, max_rounds)
