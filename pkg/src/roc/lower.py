"""Lowering symbolic norm terms to LP rows or second-order-cone rows.

  rho*||w||_1   ->  rho * sum_i t_i   with  t_i >= w_i, t_i >= -w_i
  rho*||w||_inf ->  rho * t           with  t >= w_i, t >= -w_i  for all i
  rho*||w||_2   ->  rho * t           with  t >= ||w||_2 (second-order cone)

Zero-weight terms vanish.  Any other norm index is rejected: the catalog
only provides lowerings for q in {1, 2, inf}.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import LoweringError
from .model import INF, LE, LinExpr, VariableDecl, expr_negate
from .rc import RcModel


@dataclass(frozen=True)
class LinRow:
    id: str
    lhs: LinExpr
    sense: str  # "<=" or "="
    rhs: float


@dataclass(frozen=True)
class SocRow:
    """t >= ||arg||_2 with t >= 0."""

    t: str
    arg: tuple[LinExpr, ...]


@dataclass(frozen=True, eq=False)
class DeterministicModel:
    """Fully deterministic model: linear rows plus explicit cone rows."""

    vars: tuple[VariableDecl, ...]
    objective: LinExpr
    linear_rows: tuple[LinRow, ...]
    soc_rows: tuple[SocRow, ...] = ()

    def var_map(self) -> dict[str, VariableDecl]:
        return {v.id: v for v in self.vars}

    def __eq__(self, other):
        return (isinstance(other, DeterministicModel)
                and self.vars == other.vars
                and self.objective == other.objective
                and self.linear_rows == other.linear_rows
                and self.soc_rows == other.soc_rows)


def _abs_rows(row_id: str, term_idx: int, t_id: str, i: int, w: LinExpr) -> tuple[LinRow, LinRow]:
    # t >= w and t >= -w, stored as "<=" rows.
    t = LinExpr.of({t_id: 1.0})
    lo = w - t
    hi = expr_negate(w) - t
    return (
        LinRow(f"{row_id}_a{term_idx}_{i}p", lo.drop_constant(), LE, -lo.constant),
        LinRow(f"{row_id}_a{term_idx}_{i}n", hi.drop_constant(), LE, -hi.constant),
    )


def lower_norms(model: RcModel) -> DeterministicModel:
    """Replace every symbolic norm term by auxiliary variables and rows."""
    variables = list(model.vars)
    lin_rows: list[LinRow] = []
    soc_rows: list[SocRow] = []
    counter = 0

    for row in model.rows:
        lhs = row.lhs
        sign_rows: list[LinRow] = []
        for k, term in enumerate(row.norm_terms, start=1):
            if term.weight == 0.0:
                continue
            counter += 1
            if term.q == 1.0:
                t_ids = [f"_t{counter}_{i + 1}" for i in range(len(term.arg))]
                variables.extend(VariableDecl(t, lower=0.0) for t in t_ids)
                lhs = lhs + LinExpr.of({t: term.weight for t in t_ids})
                for i, (t_id, w) in enumerate(zip(t_ids, term.arg), start=1):
                    sign_rows.extend(_abs_rows(row.id, k, t_id, i, w))
            elif term.q == INF:
                t_id = f"_t{counter}"
                variables.append(VariableDecl(t_id, lower=0.0))
                lhs = lhs + LinExpr.of({t_id: term.weight})
                for i, w in enumerate(term.arg, start=1):
                    sign_rows.extend(_abs_rows(row.id, k, t_id, i, w))
            elif term.q == 2.0:
                t_id = f"_t{counter}"
                variables.append(VariableDecl(t_id, lower=0.0))
                lhs = lhs + LinExpr.of({t_id: term.weight})
                soc_rows.append(SocRow(t_id, term.arg))
            else:
                raise LoweringError(
                    f"row {row.id}: no lowering for q = {term.q} (supported: 1, 2, inf)")
        lin_rows.append(LinRow(row.id, lhs.drop_constant(), row.sense, row.rhs - lhs.constant))
        lin_rows.extend(sign_rows)

    return DeterministicModel(
        vars=tuple(variables),
        objective=model.objective,
        linear_rows=tuple(lin_rows),
        soc_rows=tuple(soc_rows),
    )
