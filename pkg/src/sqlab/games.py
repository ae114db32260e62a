"""Dense linear programming and finite zero-sum games.

Everything here is exact small-scale machinery: a two-phase primal simplex
with Bland's rule (no cycling, no external solver), zero-sum game values via
the classic shift-positive reduction, maximum-margin separation queries, and
the achievable-subset / fractional-cover machinery the dimension layer is
built on.

Conventions:

- ``lp_solve`` maximizes c.x subject to A_ub x <= b_ub, A_eq x = b_eq,
  x >= 0, and returns primal and dual points. Infeasible and unbounded
  programs raise distinct errors.
- Strict inequalities ("margin > tau") are realized as
  margin >= tau + STRICT_EPS so achievability is a closed condition.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import K1, KV, FiniteDistribution
from .errors import (
    GuardExceededError,
    InfeasibleError,
    NumericalError,
    UnboundedError,
    UncoverableError,
)

__all__ = [
    "STRICT_EPS",
    "LPResult",
    "lp_solve",
    "GameResult",
    "zero_sum",
    "MarginResult",
    "max_margin",
    "CoverFamily",
    "achievable_subsets",
    "verify_cover_family",
    "CoverResult",
    "fractional_cover",
    "greedy_cover",
    "exact_min_cover",
]

#: Margin slack standing in for strict inequalities over floats.
STRICT_EPS = 1e-9

_PIVOT_TOL = 1e-9
_FEAS_TOL = 1e-8
_GAP_TOL = 1e-7
_MAX_ITER = 50_000


@dataclass(frozen=True)
class LPResult:
    """Optimal value, primal point, and dual values per constraint row."""

    value: float
    x: np.ndarray
    y_ub: np.ndarray
    y_eq: np.ndarray


def _pivot(t: np.ndarray, row: int, col: int) -> None:
    t[row] /= t[row, col]
    for i in range(t.shape[0]):
        if i != row and t[i, col] != 0.0:
            t[i] -= t[i, col] * t[row]


def _run_simplex(t: np.ndarray, basis: list[int], allowed: np.ndarray) -> None:
    """Primal simplex iterations (maximization) with Bland's rule, in place.

    The last row of ``t`` holds reduced costs z - c, the last column the RHS.
    ``allowed[j]`` masks columns permitted to enter (used to pin artificials
    in phase 2).
    """
    m = t.shape[0] - 1
    for _ in range(_MAX_ITER):
        entering = -1
        for j in range(t.shape[1] - 1):
            if allowed[j] and t[-1, j] < -_PIVOT_TOL:
                entering = j
                break
        if entering < 0:
            return
        leaving = -1
        best_ratio = math.inf
        for i in range(m):
            coef = t[i, entering]
            if coef > _PIVOT_TOL:
                ratio = t[i, -1] / coef
                if ratio < best_ratio - 1e-12 or (
                    abs(ratio - best_ratio) <= 1e-12
                    and (leaving < 0 or basis[i] < basis[leaving])
                ):
                    best_ratio = ratio
                    leaving = i
        if leaving < 0:
            raise UnboundedError("objective is unbounded above")
        _pivot(t, leaving, entering)
        basis[leaving] = entering
    raise NumericalError("simplex did not terminate (iteration cap hit)")


def lp_solve(
    c: Sequence[float],
    a_ub: np.ndarray | None = None,
    b_ub: Sequence[float] | None = None,
    a_eq: np.ndarray | None = None,
    b_eq: Sequence[float] | None = None,
) -> LPResult:
    """Maximize c.x subject to a_ub x <= b_ub, a_eq x = b_eq, x >= 0.

    Two-phase dense simplex with Bland's anti-cycling rule. Returns the
    optimum with a primal point and dual values (y_ub >= 0 for the
    inequality rows, y_eq free). Infeasible programs raise
    :class:`InfeasibleError`, unbounded ones :class:`UnboundedError`; the
    primal/dual pair is self-checked (feasibility within 1e-8, duality gap
    within 1e-7 relative) and a failure raises :class:`NumericalError`.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    a_ub = np.zeros((0, n)) if a_ub is None else np.asarray(a_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    a_eq = np.zeros((0, n)) if a_eq is None else np.asarray(a_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    m_ub, m_eq = a_ub.shape[0], a_eq.shape[0]
    m = m_ub + m_eq

    # Equality form: scale rows so the RHS is non-negative; <= rows get a
    # slack column whose coefficient carries the row scaling.
    rows = np.vstack([a_ub, a_eq]) if m else np.zeros((0, n))
    rhs = np.concatenate([b_ub, b_eq])
    scale = np.where(rhs < 0, -1.0, 1.0)
    rows = rows * scale[:, None]
    rhs = rhs * scale

    slack = np.zeros((m, m_ub))
    for i in range(m_ub):
        slack[i, i] = scale[i]
    eq_mat = np.hstack([rows, slack]) if m else np.zeros((0, n + m_ub))
    n_total = n + m_ub

    # Natural basis where a +1 slack exists; artificials elsewhere.
    basis: list[int] = []
    art_cols: list[int] = []
    art_rows: list[int] = []
    for i in range(m):
        if i < m_ub and scale[i] > 0:
            basis.append(n + i)
        else:
            art_rows.append(i)
            basis.append(-1)  # filled below
    if art_rows:
        art = np.zeros((m, len(art_rows)))
        for j, i in enumerate(art_rows):
            art[i, j] = 1.0
            art_cols.append(n_total + j)
            basis[i] = n_total + j
        eq_mat = np.hstack([eq_mat, art])
    width = eq_mat.shape[1]

    tableau = np.zeros((m + 1, width + 1))
    tableau[:m, :width] = eq_mat
    tableau[:m, -1] = rhs
    allowed = np.ones(width, dtype=bool)
    row_ids = list(range(m))  # original row index per surviving tableau row

    def install_objective(cost: np.ndarray) -> None:
        tableau[-1, :width] = -cost
        tableau[-1, -1] = 0.0
        for i in range(m):
            cb = cost[basis[i]]
            if cb != 0.0:
                tableau[-1] += cb * tableau[i]

    if art_cols:
        phase1 = np.zeros(width)
        phase1[art_cols] = -1.0
        install_objective(phase1)
        _run_simplex(tableau, basis, allowed)
        if tableau[-1, -1] < -_FEAS_TOL:
            raise InfeasibleError(
                f"no feasible point (artificial residual {-tableau[-1, -1]:.3e})"
            )
        # Drive surviving artificials out of the basis; drop redundant rows.
        art_set = set(art_cols)
        drop: list[int] = []
        for i in range(m):
            if basis[i] in art_set:
                pivot_col = -1
                for j in range(width):
                    if j not in art_set and abs(tableau[i, j]) > _PIVOT_TOL:
                        pivot_col = j
                        break
                if pivot_col >= 0:
                    _pivot(tableau, i, pivot_col)
                    basis[i] = pivot_col
                else:
                    drop.append(i)
        if drop:
            keep = [i for i in range(m) if i not in drop]
            tableau = np.vstack([tableau[keep], tableau[-1:]])
            basis = [basis[i] for i in keep]
            row_ids = [row_ids[i] for i in keep]
            m = len(keep)
        allowed[art_cols] = False

    phase2 = np.zeros(width)
    phase2[:n] = c
    install_objective(phase2)
    _run_simplex(tableau, basis, allowed)

    x_full = np.zeros(width)
    for i in range(m):
        x_full[basis[i]] = tableau[i, -1]
    x = x_full[:n]

    # Duals from y = c_B B^{-1} over the surviving equality-form rows
    # (dropped redundant rows keep dual 0).
    y_scaled = np.zeros(m_ub + m_eq)
    if m:
        b_mat = eq_mat[np.ix_(row_ids, basis)]
        cb = phase2[basis]
        try:
            y_part = np.linalg.solve(b_mat.T, cb)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - degenerate basis
            raise NumericalError(f"dual extraction failed: {exc}") from exc
        for val, i in zip(y_part, row_ids):
            y_scaled[i] = val
    y = y_scaled * scale  # undo row scaling
    y_ub, y_eq = y[:m_ub], y[m_ub:]

    value = float(c @ x)
    _self_check(c, a_ub, b_ub, a_eq, b_eq, x, y_ub, y_eq, value)
    return LPResult(value=value, x=x, y_ub=y_ub, y_eq=y_eq)


def _self_check(c, a_ub, b_ub, a_eq, b_eq, x, y_ub, y_eq, value) -> None:
    scale_ref = max(1.0, float(np.max(np.abs(c))) if c.size else 1.0)
    if np.any(x < -_FEAS_TOL):
        raise NumericalError("primal point violates x >= 0")
    if a_ub.shape[0] and np.any(a_ub @ x - b_ub > _FEAS_TOL * 10):
        raise NumericalError("primal point violates an inequality row")
    if a_eq.shape[0] and np.any(np.abs(a_eq @ x - b_eq) > _FEAS_TOL * 10):
        raise NumericalError("primal point violates an equality row")
    if y_ub.size and np.any(y_ub < -_FEAS_TOL):
        raise NumericalError("dual point violates y >= 0")
    reduced = c - (y_ub @ a_ub if y_ub.size else 0.0) - (y_eq @ a_eq if y_eq.size else 0.0)
    if np.any(reduced > _FEAS_TOL * 10 * scale_ref):
        raise NumericalError("dual point violates feasibility")
    dual_value = float(y_ub @ b_ub if y_ub.size else 0.0) + float(
        y_eq @ b_eq if y_eq.size else 0.0
    )
    if abs(dual_value - value) > _GAP_TOL * max(1.0, abs(value)):
        raise NumericalError(f"duality gap {abs(dual_value - value):.3e} exceeds tolerance")


# ---------------------------------------------------------------------------
# zero-sum games
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GameResult:
    """Value and optimal mixed strategies of a finite zero-sum game.

    The row player maximizes, the column player minimizes the payoff
    ``matrix[i, j]``.
    """

    value: float
    row_strategy: np.ndarray
    col_strategy: np.ndarray


def zero_sum(matrix: np.ndarray) -> GameResult:
    """Solve max_x min_y x^T M y over mixed strategies.

    Uses the shift-to-positive reduction: with M' = M + shift > 0 the row
    player's value is 1/sum(u) for min sum(u) s.t. M'^T u >= 1, u >= 0.
    The optimal column strategy falls out of the dual. Self-checks both
    strategies against the reported value within 1e-7.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.size == 0:
        raise ValueError("payoff matrix must be 2-d and non-empty")
    shift = 1.0 - float(m.min())
    mp = m + shift
    n_rows, n_cols = m.shape
    # maximize -sum(u) s.t. -M'^T u <= -1
    res = lp_solve(
        c=-np.ones(n_rows),
        a_ub=-mp.T,
        b_ub=-np.ones(n_cols),
    )
    total = -res.value
    if total <= 0:
        raise NumericalError("zero-sum reduction produced a non-positive scale")
    value = 1.0 / total - shift
    row = res.x / res.x.sum()
    dual = np.clip(res.y_ub, 0.0, None)
    if dual.sum() <= 0:
        raise NumericalError("zero-sum dual strategy vanished")
    col = dual / dual.sum()
    worst_row = float(np.min(row @ m))
    worst_col = float(np.max(m @ col))
    if worst_row < value - 1e-7 or worst_col > value + 1e-7:
        raise NumericalError(
            f"game strategies fail the value check ({worst_row:.9f}, {value:.9f}, {worst_col:.9f})"
        )
    return GameResult(value=value, row_strategy=row, col_strategy=col)


# ---------------------------------------------------------------------------
# maximum-margin separation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MarginResult:
    """Best simultaneous margin of one signed query against a subset.

    ``value`` = max over phi in [-1,1]^X of min_D s_D . <phi, D - D0>;
    ``query`` attains it; ``mixture`` is the adversary's optimal mixture
    over the subset (a certificate: the L1 norm of the mixed difference
    equals the margin).
    """

    value: float
    query: np.ndarray
    mixture: np.ndarray


def max_margin(
    dists: Sequence[FiniteDistribution],
    d0: FiniteDistribution,
    signs: Sequence[int] | None = None,
) -> MarginResult:
    """Best worst-case signed margin achievable by a single [-1,1] query.

    For a single distribution this is ||D - D0||_1 with the sign query
    sign(D - D0). The empty subset returns +inf (no constraint to meet).
    """
    if signs is None:
        signs = [1] * len(dists)
    if len(signs) != len(dists):
        raise ValueError("signs length must match subset size")
    n = len(d0.domain)
    if not dists:
        return MarginResult(value=math.inf, query=np.zeros(n), mixture=np.zeros(0))
    g = np.array([s * (d.weights - d0.weights) for s, d in zip(signs, dists)])
    if len(dists) == 1:
        phi = np.where(g[0] >= 0, 1.0, -1.0)
        return MarginResult(value=float(np.abs(g[0]).sum()), query=phi, mixture=np.ones(1))
    k = len(dists)
    # Variables: u = phi + 1 in [0, 2] (n of them), then t >= 0.
    # Margin rows:  <u, g_D> - t >= sum(g_D)  =>  -<u, g_D> + t <= -sum(g_D)
    a_ub = np.zeros((k + n, n + 1))
    b_ub = np.zeros(k + n)
    a_ub[:k, :n] = -g
    a_ub[:k, n] = 1.0
    b_ub[:k] = -g.sum(axis=1)
    a_ub[k:, :n] = np.eye(n)
    b_ub[k:] = 2.0
    c = np.zeros(n + 1)
    c[n] = 1.0
    res = lp_solve(c, a_ub=a_ub, b_ub=b_ub)
    phi = np.clip(res.x[:n] - 1.0, -1.0, 1.0)
    margins = g @ phi
    value = float(res.value)
    if float(margins.min()) < value - 1e-8:
        raise NumericalError("margin certificate fails to reach the LP value")
    lam = np.clip(res.y_ub[:k], 0.0, None)
    lam = lam / lam.sum() if lam.sum() > 0 else np.full(k, 1.0 / k)
    return MarginResult(value=value, query=phi, mixture=lam)


# ---------------------------------------------------------------------------
# achievable subsets and covers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoverFamily:
    """Subsets of a ground family, each with a witnessing query.

    ``sets[i]`` is a frozenset of ground indices; ``witnesses[i]`` a query
    value vector that distinguishes every member from the center at margin
    strictly above tau (>= tau + STRICT_EPS). ``kappa`` records which
    discrimination operator the margins use.
    """

    ground_size: int
    sets: tuple
    witnesses: tuple
    tau: float
    kappa: str = K1

    def covering(self, index: int) -> list[int]:
        return [i for i, s in enumerate(self.sets) if index in s]

    def uncovered(self) -> list[int]:
        hit = set()
        for s in self.sets:
            hit |= s
        return [i for i in range(self.ground_size) if i not in hit]


def _kv_gap(d: FiniteDistribution, d0: FiniteDistribution, phi: np.ndarray) -> float:
    return abs(math.sqrt(max(d.expectation(phi), 0.0)) - math.sqrt(max(d0.expectation(phi), 0.0)))


def achievable_subsets(
    dists: Sequence[FiniteDistribution],
    d0: FiniteDistribution,
    tau: float,
    kappa: str = K1,
    guard: int = 20,
) -> CoverFamily:
    """All maximal subsets a single query distinguishes from the center.

    K1: exact. A subset S is achievable when some phi in [-1,1]^X has
    |E_D[phi] - E_{D0}[phi]| > tau for every D in S simultaneously; the
    enumeration walks signed subsets (each D may sit on either side of the
    margin) in index order, which visits every achievable signed set because
    achievability is closed under taking signed subsets. Worst case is
    exponential in |dists| — hence the guard.

    KV: heuristic family from binary-vertex witnesses phi in {0,1}^X
    (guarded by 2^|X|); the family under-approximates achievability, so
    dimension values derived from it are upper bounds.
    """
    m = len(dists)
    if kappa == K1:
        if m > guard:
            raise GuardExceededError(f"achievable_subsets: |dists| = {m} exceeds guard {guard}")
        threshold = tau + STRICT_EPS
        witnesses: dict[frozenset, np.ndarray] = {}
        # signed sets as tuples of (index, sign), grown in index order
        frontier: list[tuple[tuple, np.ndarray]] = []
        for i, d in enumerate(dists):
            res = max_margin([d], d0)
            if res.value >= threshold:
                frontier.append((((i, 1),), res.query))
        achievable_signed: list[tuple[tuple, np.ndarray]] = []
        while frontier:
            achievable_signed.extend(frontier)
            next_frontier = []
            for signed, _ in frontier:
                last = signed[-1][0]
                for j in range(last + 1, m):
                    for sign in (1, -1):
                        cand = signed + ((j, sign),)
                        sub = [dists[i] for i, _ in cand]
                        ss = [s for _, s in cand]
                        res = max_margin(sub, d0, ss)
                        if res.value >= threshold:
                            next_frontier.append((cand, res.query))
            frontier = next_frontier
        for signed, phi in achievable_signed:
            key = frozenset(i for i, _ in signed)
            if key not in witnesses or len(key) == 0:
                witnesses[key] = phi
        # keep only maximal subsets
        keys = sorted(witnesses, key=len, reverse=True)
        maximal: list[frozenset] = []
        for key in keys:
            if not any(key < other for other in maximal):
                maximal.append(key)
        maximal.sort(key=lambda s: (len(s), sorted(s)))
        return CoverFamily(
            ground_size=m,
            sets=tuple(maximal),
            witnesses=tuple(witnesses[s] for s in maximal),
            tau=tau,
            kappa=K1,
        )
    if kappa == KV:
        n = len(d0.domain)
        if n > 16:
            raise GuardExceededError(f"achievable_subsets KV: 2^{n} vertex queries exceed guard")
        threshold = tau + STRICT_EPS
        best: dict[frozenset, np.ndarray] = {}
        for bits in range(1, 2**n):
            phi = np.array([(bits >> i) & 1 for i in range(n)], dtype=float)
            covered = frozenset(
                i for i, d in enumerate(dists) if _kv_gap(d, d0, phi) >= threshold
            )
            if covered and covered not in best:
                best[covered] = phi
        keys = sorted(best, key=len, reverse=True)
        maximal = []
        for key in keys:
            if not any(key < other for other in maximal):
                maximal.append(key)
        maximal.sort(key=lambda s: (len(s), sorted(s)))
        return CoverFamily(
            ground_size=m,
            sets=tuple(maximal),
            witnesses=tuple(best[s] for s in maximal),
            tau=tau,
            kappa=KV,
        )
    raise ValueError(f"unknown kappa tag {kappa!r}")


def verify_cover_family(
    dists: Sequence[FiniteDistribution],
    d0: FiniteDistribution,
    family: CoverFamily,
) -> None:
    """Re-check every set's witness; raises NumericalError on failure."""
    for s, phi in zip(family.sets, family.witnesses):
        for i in s:
            if family.kappa == K1:
                gap = abs(dists[i].expectation(phi) - d0.expectation(phi))
            else:
                gap = _kv_gap(dists[i], d0, phi)
            if gap < family.tau + STRICT_EPS / 2:
                raise NumericalError(
                    f"witness for set {sorted(s)} fails on element {i} (gap {gap:.3e})"
                )


@dataclass(frozen=True)
class CoverResult:
    """Fractional cover optimum: value d, sampling measure Q over the sets,
    raw weights y (sum d), and the dual element weights mu (packing
    certificate: mu(S) <= 1 for every set, sum(mu) = d)."""

    value: float
    y: np.ndarray
    q: np.ndarray
    mu: np.ndarray


def fractional_cover(family: CoverFamily) -> CoverResult:
    """Minimum total weight over the family's sets covering every element once.

    Raises :class:`UncoverableError` (with indices) when some ground element
    lies in no set.
    """
    missing = family.uncovered()
    if missing:
        raise UncoverableError(
            f"elements {missing} lie in no achievable subset", tuple(missing)
        )
    m, k = family.ground_size, len(family.sets)
    if m == 0:
        return CoverResult(value=0.0, y=np.zeros(k), q=np.zeros(k), mu=np.zeros(0))
    a = np.zeros((m, k))
    for j, s in enumerate(family.sets):
        for i in s:
            a[i, j] = 1.0
    res = lp_solve(c=-np.ones(k), a_ub=-a, b_ub=-np.ones(m))
    y = np.clip(res.x, 0.0, None)
    value = float(y.sum())
    mu = np.clip(res.y_ub, 0.0, None)
    q = y / value if value > 0 else np.zeros(k)
    return CoverResult(value=value, y=y, q=q, mu=mu)


def greedy_cover(family: CoverFamily) -> list[int]:
    """Greedy integer cover (max new coverage, first index on ties)."""
    uncovered = set(range(family.ground_size))
    chosen: list[int] = []
    while uncovered:
        best_j, best_gain = -1, 0
        for j, s in enumerate(family.sets):
            gain = len(s & uncovered)
            if gain > best_gain:
                best_j, best_gain = j, gain
        if best_j < 0:
            raise UncoverableError(
                f"greedy cover stuck with {sorted(uncovered)} uncovered",
                tuple(sorted(uncovered)),
            )
        chosen.append(best_j)
        uncovered -= family.sets[best_j]
    return chosen


def exact_min_cover(family: CoverFamily) -> list[int]:
    """Smallest integer cover by branch and bound (greedy seed, pruning)."""
    missing = family.uncovered()
    if missing:
        raise UncoverableError(
            f"elements {missing} lie in no achievable subset", tuple(missing)
        )
    best = greedy_cover(family)
    sets = family.sets
    cover_of = [family.covering(i) for i in range(family.ground_size)]
    max_size = max((len(s) for s in sets), default=1)

    def recurse(uncovered: frozenset, chosen: list[int], best_list: list[int]) -> list[int]:
        if not uncovered:
            return list(chosen)
        lower = len(chosen) + math.ceil(len(uncovered) / max_size)
        if lower >= len(best_list):
            return best_list
        pivot = min(uncovered, key=lambda i: len(cover_of[i]))
        for j in cover_of[pivot]:
            chosen.append(j)
            best_list = recurse(uncovered - sets[j], chosen, best_list)
            chosen.pop()
        return best_list

    return recurse(frozenset(range(family.ground_size)), [], best)
