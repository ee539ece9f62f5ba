"""Wait-and-see elimination through decision rules.

Substituting y(z) = u + V^T z into an adaptive row

    (a + P z)^T x + d^T y(z) <= b,   z in Z

yields an ordinary uncertain row over the here-and-now variables (x, u, V):
the nominal part gains d^T u and the support argument becomes P^T x + V d,
because the slope entry V[l, j] is multiplied by d_j z_l.  Bound rows
lo <= y_j(z) <= up are robustified the same way (argument +/- V[:, j]);
dropping them would admit policies that are invalid for some z.

All adaptive rows of a model share a single uncertainty vector z, so their
annotated sets must be structurally identical; rows without an annotation
(the objective epigraph, bound rows) inherit that shared set.
"""
from __future__ import annotations

import numpy as np

from .canonicalize import CanonicalModel
from .errors import ModelError
from .model import (HERE_AND_NOW, INF, LE, Constraint, LdrAssignment, LinExpr,
                    UncertainBlock, UncertaintySet, VariableDecl)


def _shared_set(model: CanonicalModel) -> UncertaintySet:
    sets = [row.uncertainty.uset for row in model.rows
            if row.adaptive is not None and row.uncertainty is not None]
    if not sets:
        raise ModelError(
            "adaptive model needs an uncertainty annotation on at least one adaptive row")
    for s in sets[1:]:
        if s != sets[0]:
            raise ModelError("adaptive rows must share one structurally identical uncertainty set")
    return sets[0]


def _extend_block(block: UncertainBlock | None, d: LinExpr, ldr: dict[str, tuple[str, tuple[str, ...]]],
                  uset: UncertaintySet, L: int) -> UncertainBlock | None:
    """Uncertain block of the rewritten row: P rows for x, plus d_j e_l for V[l, j]."""
    on = list(block.on) if block else []
    rows = [block.P[i] for i in range(len(on))] if block else []
    for y_id, coeff in d.terms:
        _, v_ids = ldr[y_id]
        for l, v_id in enumerate(v_ids):
            on.append(v_id)
            e = np.zeros(L)
            e[l] = coeff
            rows.append(e)
    if not on:
        return None
    P = np.vstack(rows)
    if not P.any():
        return None
    return UncertainBlock(tuple(on), P, uset)


def apply_ldr(model: CanonicalModel) -> CanonicalModel:
    """Eliminate wait-and-see variables by substituting their decision rules.

    Linear rules add one intercept and L slope variables per wait-and-see
    variable; static rules add the intercept only.  The result is a purely
    here-and-now canonical model carrying the rule assignment in `ldr`.
    """
    wait = model.wait_and_see()
    if not wait:
        return model

    uset = _shared_set(model)
    L = uset.dim

    variables = [v for v in model.vars if v.stage == HERE_AND_NOW]
    ldr: dict[str, tuple[str, tuple[str, ...]]] = {}
    bound_rows: list[Constraint] = []
    for y in wait:
        u_id = f"_u_{y.id}"
        v_ids = tuple(f"_v_{y.id}_{l + 1}" for l in range(L)) if y.rule == "linear" else ()
        ldr[y.id] = (u_id, v_ids)
        if y.rule == "static":
            # y(z) = u: native bounds on u are exact.
            variables.append(VariableDecl(u_id, lower=y.lower, upper=y.upper))
            continue
        variables.append(VariableDecl(u_id))
        variables.extend(VariableDecl(v_id) for v_id in v_ids)
        # lo <= y(z) <= up must hold for every z: robustify both sides.
        if y.lower > -INF:
            bound_rows.append(Constraint(
                id=f"{y.id}_lb",
                lhs=LinExpr.of({u_id: -1.0}),
                sense=LE,
                rhs=-y.lower,
                uncertainty=UncertainBlock(v_ids, -np.eye(L), uset),
            ))
        if y.upper < INF:
            bound_rows.append(Constraint(
                id=f"{y.id}_ub",
                lhs=LinExpr.of({u_id: 1.0}),
                sense=LE,
                rhs=y.upper,
                uncertainty=UncertainBlock(v_ids, np.eye(L), uset),
            ))

    rows: list[Constraint] = []
    for row in model.rows:
        if row.adaptive is None:
            rows.append(row)
            continue
        d = row.adaptive
        intercepts = LinExpr.of({ldr[y_id][0]: c for y_id, c in d.terms})
        rows.append(Constraint(
            id=row.id,
            lhs=row.lhs + intercepts,
            sense=LE,
            rhs=row.rhs,
            uncertainty=_extend_block(row.uncertainty, d, ldr, uset, L),
        ))
    rows.extend(bound_rows)

    assignment = LdrAssignment(
        dim=L, entries=tuple((y.id, ldr[y.id][0], ldr[y.id][1]) for y in wait))
    return CanonicalModel(vars=tuple(variables), objective=model.objective,
                          rows=tuple(rows), ldr=assignment)
