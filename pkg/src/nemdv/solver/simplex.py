"""Bounded-variable primal revised simplex.

Works on ``min c.x  s.t.  A x (<,=,>) b,  lb <= x <= ub`` without expanding
box bounds into rows. Inequality rows receive a slack column; rows whose
slack cannot start feasible receive an artificial column, and a phase-1
pass drives the artificials to zero before the real objective is priced.

The basis inverse is held explicitly and updated with rank-one pivots,
with periodic reinversion.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg.blas import dger

from ..formulation import MilpModel, Status
from .config import DEFAULT_TOLERANCES, Tolerances

log = logging.getLogger(__name__)

_BASIC, _AT_LB, _AT_UB, _FREE = 0, 1, 2, 3
_REINVERT_EVERY = 100


class SimplexError(RuntimeError):
    """The simplex iteration cap was hit or the basis became singular."""


@dataclass
class LpSolution:
    status: Status
    x: np.ndarray | None
    objective: float
    iterations: int = 0


class _Tableau:
    def __init__(self, A: sp.csc_matrix, b, c, lb, ub, n_struct: int, tol: Tolerances):
        self.A = A
        self.AT = A.T.tocsr()
        self.b = b
        self.c = c
        self.lb = lb
        self.ub = ub
        self.n_struct = n_struct
        self.tol = tol
        self.m, self.n = A.shape

    def column(self, j):
        lo, hi = self.A.indptr[j], self.A.indptr[j + 1]
        return self.A.indices[lo:hi], self.A.data[lo:hi]

    def reinvert(self):
        B = self.A[:, self.basis].toarray()
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise SimplexError("singular basis") from exc
        self.recompute_basics()
        self.n_updates = 0

    def recompute_basics(self):
        x = self.x.copy()
        x[self.basis] = 0.0
        self.xB = self.Binv @ (self.b - self.A @ x)
        self.x[self.basis] = self.xB

    def run(self, cost, max_iter: int, iterations: int) -> tuple[Status, int]:
        """Iterate until optimal or unbounded for objective ``cost``."""
        tol = self.tol
        degenerate_run = 0
        bland = False
        bland_after = 5 * max(self.m, 1)
        movable = self.ub - self.lb > 0
        while True:
            if iterations >= max_iter:
                raise SimplexError(f"iteration cap {max_iter} reached")
            y = cost[self.basis] @ self.Binv
            d = cost - self.AT @ y
            st = self.status
            score = np.zeros(self.n)
            lo = (st == _AT_LB) & movable & (d < -tol.optimality)
            up = (st == _AT_UB) & movable & (d > tol.optimality)
            fr = (st == _FREE) & (np.abs(d) > tol.optimality)
            score[lo] = -d[lo]
            score[up] = d[up]
            score[fr] = np.abs(d[fr])
            if bland:
                cand = np.flatnonzero(score > 0)
                if cand.size == 0:
                    return Status.OPTIMAL, iterations
                q = int(cand[0])
            else:
                q = int(np.argmax(score))
                if score[q] <= 0:
                    return Status.OPTIMAL, iterations
            direction = 1.0 if d[q] < 0 else -1.0

            rows, vals = self.column(q)
            alpha = self.Binv[:, rows] @ vals
            delta = direction * alpha
            xB = self.xB
            lbB = self.lb[self.basis]
            ubB = self.ub[self.basis]
            lim = np.full(self.m, np.inf)
            dec = delta > tol.pivot
            inc = delta < -tol.pivot
            lim[dec] = (xB[dec] - lbB[dec]) / delta[dec]
            lim[inc] = (ubB[inc] - xB[inc]) / -delta[inc]
            np.maximum(lim, 0.0, out=lim)
            theta_b = lim.min() if self.m else np.inf
            span = self.ub[q] - self.lb[q]
            iterations += 1

            if span <= theta_b:
                if not np.isfinite(span):
                    return Status.UNBOUNDED, iterations
                theta = span
                self.xB -= theta * delta
                self.x[self.basis] = self.xB
                if st[q] == _AT_LB:
                    self.x[q] = self.ub[q]
                    st[q] = _AT_UB
                else:
                    self.x[q] = self.lb[q]
                    st[q] = _AT_LB
            else:
                if not np.isfinite(theta_b):
                    return Status.UNBOUNDED, iterations
                ties = np.flatnonzero(lim <= theta_b + 1e-12)
                if bland:
                    r = int(ties[np.argmin(self.basis[ties])])
                else:
                    r = int(ties[np.argmax(np.abs(delta[ties]))])
                theta = lim[r]
                leaving = self.basis[r]
                self.xB -= theta * delta
                self.x[self.basis] = self.xB
                self.x[q] += direction * theta
                if dec[r]:
                    self.x[leaving] = self.lb[leaving]
                    st[leaving] = _AT_LB
                else:
                    self.x[leaving] = self.ub[leaving]
                    st[leaving] = _AT_UB
                self.basis[r] = q
                st[q] = _BASIC
                self.xB[r] = self.x[q]
                pivot_row = self.Binv[r] / alpha[r]
                # in-place rank-one update; Binv.T is the Fortran view BLAS wants
                dger(-1.0, pivot_row, alpha, a=self.Binv.T, overwrite_a=True)
                self.Binv[r] = pivot_row
                self.n_updates += 1
                if self.n_updates >= _REINVERT_EVERY:
                    self.reinvert()
            if theta <= 1e-12:
                degenerate_run += 1
                if not bland and degenerate_run >= bland_after:
                    log.debug("switching to Bland's rule after %d degenerate pivots",
                              degenerate_run)
                    bland = True
            else:
                degenerate_run = 0
                bland = False


def _standard_form(m: MilpModel, lb, ub):
    """Append slack columns; returns (A, c, lb, ub) over structural + slack."""
    n_rows = m.n_rows
    ineq = np.flatnonzero(m.sense != "=")
    signs = np.where(m.sense[ineq] == "<", 1.0, -1.0)
    S = sp.csc_matrix((signs, (ineq, np.arange(len(ineq)))), shape=(n_rows, len(ineq)))
    A = sp.hstack([m.A.tocsc(), S], format="csc")
    c = np.concatenate([m.c, np.zeros(len(ineq))])
    lb = np.concatenate([lb, np.zeros(len(ineq))])
    ub = np.concatenate([ub, np.full(len(ineq), np.inf)])
    slack_of_row = np.full(n_rows, -1)
    slack_of_row[ineq] = m.n_vars + np.arange(len(ineq))
    return A, c, lb, ub, slack_of_row


def simplex_solve(
    m: MilpModel,
    lb: np.ndarray | None = None,
    ub: np.ndarray | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> LpSolution:
    """Solve the LP relaxation of ``m`` (binaries relaxed to their bounds)."""
    lb = m.lb.astype(float) if lb is None else np.asarray(lb, dtype=float)
    ub = m.ub.astype(float) if ub is None else np.asarray(ub, dtype=float)
    if np.any(lb > ub + tol.feasibility):
        return LpSolution(Status.INFEASIBLE, None, np.nan)
    ub = np.maximum(lb, ub)
    A, c, lb_f, ub_f, slack_of_row = _standard_form(m, lb, ub)
    n_rows, n_cols = A.shape
    b = m.rhs.astype(float)

    x = np.zeros(n_cols)
    status = np.empty(n_cols, dtype=np.int8)
    fin_lb = np.isfinite(lb_f)
    fin_ub = np.isfinite(ub_f)
    x[fin_lb] = lb_f[fin_lb]
    only_ub = ~fin_lb & fin_ub
    x[only_ub] = ub_f[only_ub]
    status[:] = _AT_LB
    status[only_ub] = _AT_UB
    status[~fin_lb & ~fin_ub] = _FREE

    resid = b - A @ x
    basis = np.empty(n_rows, dtype=np.int64)
    art_rows, art_signs = [], []
    slack_sign = np.where(m.sense == "<", 1.0, -1.0)
    for i in range(n_rows):
        k = slack_of_row[i]
        if k >= 0 and slack_sign[i] * resid[i] >= 0:
            basis[i] = k
            x[k] = resid[i] * slack_sign[i]
            status[k] = _BASIC
        else:
            art_rows.append(i)
            art_signs.append(1.0 if resid[i] >= 0 else -1.0)
    n_art = len(art_rows)
    if n_art:
        art = sp.csc_matrix(
            (art_signs, (art_rows, np.arange(n_art))), shape=(n_rows, n_art)
        )
        A = sp.hstack([A, art], format="csc")
        first = n_cols
        art_idx = first + np.arange(n_art)
        basis[art_rows] = art_idx
        x = np.concatenate([x, np.abs(resid[art_rows])])
        status = np.concatenate([status, np.full(n_art, _BASIC, dtype=np.int8)])
        c = np.concatenate([c, np.zeros(n_art)])
        lb_f = np.concatenate([lb_f, np.zeros(n_art)])
        ub_f = np.concatenate([ub_f, np.full(n_art, np.inf)])

    tab = _Tableau(A, b, c, lb_f, ub_f, m.n_vars, tol)
    tab.basis = basis
    tab.status = status
    tab.x = x
    tab.reinvert()
    max_iter = 50 * (n_rows + A.shape[1])
    iterations = 0

    if n_art:
        phase1 = np.zeros(A.shape[1])
        phase1[art_idx] = 1.0
        _, iterations = tab.run(phase1, max_iter, iterations)
        tab.reinvert()
        infeas = float(tab.x[art_idx].sum())
        if infeas > tol.feasibility * (1.0 + float(np.abs(b).max(initial=0.0))):
            return LpSolution(Status.INFEASIBLE, None, np.nan, iterations)
        tab.ub[art_idx] = 0.0
        nonbasic_art = art_idx[tab.status[art_idx] != _BASIC]
        tab.x[nonbasic_art] = 0.0
        tab.recompute_basics()

    result, iterations = tab.run(c, max_iter, iterations)
    if result is Status.UNBOUNDED:
        return LpSolution(Status.UNBOUNDED, None, -np.inf, iterations)
    tab.reinvert()
    xs = tab.x[: m.n_vars].copy()
    # clip round-off against the box; row residuals stay within tolerance
    np.clip(xs, lb, ub, out=xs)
    return LpSolution(Status.OPTIMAL, xs, float(m.c @ xs), iterations)
