"""Multiplicative-weights machinery and oracle-driven solvers.

The solvers share one skeleton: maintain a candidate distribution D_t as a
multiplicative-weights mixture, ask distinguishing queries suggested by a
cover oracle, and either detect a discrepancy (update D_t) or commit to a
solution. Update counts are capped by ceil(36 * KL_bound / tau^2) (K1
margins; the square-root-scale variant uses gamma = tau^2/9 and budget
ceil(324 * KL_bound / tau^4)); exceeding the cap while every oracle answer
was valid is flagged as a theorem violation rather than silently retried.

Solvers:

- ``solve_search_universal``: search over a finite family. Deterministic
  mode queries every per-distribution witness; randomized mode samples
  ceil(d ln(1/delta')) witnesses per step from a fractional cover measure
  and finally draws the answer from a solution measure.
- ``solve_decision_sampled``: distinguish reference vs family with
  ceil(d ln(1/delta)) witnesses sampled once from the fractional cover.
- ``solve_verifiable``: accept a solution whose verify query measures at
  most theta + 2 tau / 3 (certifying D[phi_f] <= theta + tau), otherwise
  turn the failed verification into an update.
- ``solve_optimizing``: binary search over the threshold to width tau/4
  with verifiable probes at inner tolerance 3 tau / 4.
- ``learn_with_heavy_points``: the heavy-point PAC learner (label heavy
  points individually, then fall back to concepts that explain the
  remaining positive mass).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (
    K1,
    KV,
    FiniteDistribution,
    Measure,
    ProblemSpec,
    mixture,
)
from .errors import UncoverableError
from .games import achievable_subsets, fractional_cover
from .oracles import STAT, VROOT, OracleSession, Transcript

__all__ = [
    "MWState",
    "average_regret",
    "CoverStep",
    "margin_cover",
    "RunReport",
    "update_budget",
    "solve_search_universal",
    "solve_decision_sampled",
    "solve_verifiable",
    "solve_optimizing",
    "learn_with_heavy_points",
]


# ---------------------------------------------------------------------------
# multiplicative weights
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MWState:
    """Multiplicative-weights iterate: strictly positive weights summing to 1.

    The update is the exact rule w_i <- w_i (1 - gamma z_i), renormalized;
    with |z_i| <= 1 and 0 < gamma < 1 positivity is automatic.
    """

    weights: np.ndarray
    gamma: float
    step: int = 0

    def __post_init__(self):
        w = np.array(self.weights, dtype=float, copy=True)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if not (0.0 < self.gamma < 1.0):
            raise ValueError("gamma must lie strictly between 0 and 1")
        if np.any(w <= 0):
            raise ValueError("multiplicative weights must stay strictly positive")
        if abs(float(w.sum()) - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")

    @classmethod
    def start(cls, weights: Sequence[float], gamma: float) -> "MWState":
        w = np.asarray(weights, dtype=float)
        return cls(weights=w / w.sum(), gamma=gamma)

    def update(self, loss: Sequence[float]) -> "MWState":
        z = np.asarray(loss, dtype=float)
        if z.shape != self.weights.shape:
            raise ValueError("loss vector length mismatch")
        if np.any(np.abs(z) > 1.0 + 1e-12):
            raise ValueError("losses must lie in [-1, 1]")
        w = self.weights * (1.0 - self.gamma * z)
        return MWState(weights=w / w.sum(), gamma=self.gamma, step=self.step + 1)


def average_regret(weight_history: Sequence[np.ndarray], losses: Sequence[np.ndarray]) -> float:
    """(sum_t <w_t, z_t> - min_i sum_t z_t[i]) / T against the best point mass."""
    if len(weight_history) != len(losses) or not losses:
        raise ValueError("need one weight vector per loss vector")
    loss_mat = np.asarray(losses, dtype=float)
    incurred = float(sum(w @ z for w, z in zip(weight_history, loss_mat)))
    best = float(loss_mat.sum(axis=0).min())
    return (incurred - best) / len(losses)


def update_budget(kl_bound: float, tau: float, kappa: str = K1) -> int:
    """Update cap ceil(36 KL / tau^2) (K1) or ceil(324 KL / tau^4) (KV)."""
    if kappa == K1:
        return math.ceil(36.0 * kl_bound / tau**2)
    if kappa == KV:
        return math.ceil(324.0 * kl_bound / tau**4)
    raise ValueError(f"unknown kappa tag {kappa!r}")


# ---------------------------------------------------------------------------
# margins and witnesses against the current mixture
# ---------------------------------------------------------------------------


def _k1_witness(d: np.ndarray, t: np.ndarray) -> tuple[float, np.ndarray]:
    """Best signed query separating d from t: sign(d - t), margin = L1 gap."""
    diff = d - t
    phi = np.where(diff >= 0, 1.0, -1.0)
    return float(np.abs(diff).sum()), phi


def _kv_witness(d: np.ndarray, t: np.ndarray) -> tuple[float, np.ndarray]:
    """Best sqrt-scale gap over likelihood-ratio threshold sets.

    The maximizer of sqrt(D[phi]) - sqrt(T[phi]) over phi in [0,1]^X is a
    threshold set of the ratio d/t, so scanning prefixes of the ratio order
    (both directions) finds the best unit witness among 2|X| candidates.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(t > 0, d / np.where(t > 0, t, 1.0), np.where(d > 0, np.inf, 1.0))
    best_gap, best_phi = 0.0, np.zeros_like(d)
    for order in (np.argsort(-ratio, kind="stable"), np.argsort(ratio, kind="stable")):
        dc = np.cumsum(d[order])
        tc = np.cumsum(t[order])
        gaps = np.abs(np.sqrt(np.clip(dc, 0, None)) - np.sqrt(np.clip(tc, 0, None)))
        j = int(np.argmax(gaps))
        if gaps[j] > best_gap:
            best_gap = float(gaps[j])
            phi = np.zeros_like(d)
            phi[order[: j + 1]] = 1.0
            best_phi = phi
    return best_gap, best_phi


def _witness(kappa: str):
    return _k1_witness if kappa == K1 else _kv_witness


# ---------------------------------------------------------------------------
# cover oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoverStep:
    """What to do at the current mixture: a proposed solution index, the
    witness queries (with the distribution index each one targets), and —
    for randomized runs — a solution measure, a sampling measure over the
    queries, and the fractional cover value d."""

    solution_index: int | None
    queries: tuple
    targets: tuple
    unservable: tuple = ()
    solution_measure: Measure | None = None
    query_measure: np.ndarray | None = None
    d: float | None = None


def margin_cover(problem: ProblemSpec, tau: float, kappa: str = K1, randomized: bool = False):
    """The default cover oracle.

    At mixture D_t: distributions within margin tau are "close"; the
    proposed solution is the first one valid for every close distribution
    (falling back to best coverage). Every far distribution the proposal
    does not serve gets its maximum-margin witness, in index order. In
    randomized mode the far witnesses are additionally grouped into a
    fractional cover (via the achievable-subset family against D_t) so a
    solver can sample few of them.
    """
    witness_fn = _witness(kappa)
    dist_mat = [d.weights for d in problem.dists]

    def oracle(t_vec: np.ndarray) -> CoverStep:
        gaps = []
        for w in dist_mat:
            gap, phi = witness_fn(w, t_vec)
            gaps.append((gap, phi))
        close = [i for i, (gap, _) in enumerate(gaps) if gap <= tau]
        close_set = set(close)
        f_idx = None
        for fi in range(problem.n_solutions):
            if close_set <= set(problem.solved_dist_indices(fi)):
                f_idx = fi
                break
        unservable: tuple = ()
        if f_idx is None:
            overlaps = [
                len(close_set & set(problem.solved_dist_indices(fi)))
                for fi in range(problem.n_solutions)
            ]
            f_idx = int(np.argmax(overlaps))
            unservable = tuple(
                sorted(close_set - set(problem.solved_dist_indices(f_idx)))
            )
        served = set(problem.solved_dist_indices(f_idx))
        far_targets = [
            i for i in range(problem.n_dists) if i not in served and gaps[i][0] > tau
        ]
        queries = tuple(gaps[i][1] for i in far_targets)
        if not randomized:
            return CoverStep(
                solution_index=f_idx,
                queries=queries,
                targets=tuple(far_targets),
                unservable=unservable,
            )
        # randomized: fractional cover over the far distributions
        t_dist = FiniteDistribution(problem.domain, t_vec / t_vec.sum())
        if far_targets:
            family = achievable_subsets(
                [problem.dists[i] for i in far_targets], t_dist, tau, kappa=kappa
            )
            cover = fractional_cover(family)
            queries = tuple(family.witnesses)
            targets = tuple(tuple(sorted(far_targets[i] for i in s)) for s in family.sets)
            q_measure, d_value = cover.q, cover.value
        else:
            queries, targets, q_measure, d_value = (), (), np.zeros(0), 0.0
        return CoverStep(
            solution_index=f_idx,
            queries=queries,
            targets=targets,
            unservable=unservable,
            solution_measure=Measure.point_mass(problem.n_solutions, f_idx),
            query_measure=q_measure,
            d=d_value,
        )

    return oracle


# ---------------------------------------------------------------------------
# run reports
# ---------------------------------------------------------------------------

SOLVED = "solved"
STUCK = "stuck"
BUDGET_EXCEEDED = "budget_exceeded"


@dataclass
class RunReport:
    """Outcome of one solver run.

    ``theorem_violation`` is set when the run broke a proven guarantee
    (budget exhausted / no acceptable output) even though every oracle
    answer was valid.
    """

    outcome: str
    solution: object | None
    queries: int
    updates: int
    transcript: Transcript
    valid_answer_fraction: float
    theorem_violation: bool = False
    details: dict = field(default_factory=dict)

    def payload(self, seed=None) -> dict:
        out = {
            "outcome": self.outcome,
            "solution": self.solution,
            "queries": self.queries,
            "updates": self.updates,
            "seed": seed,
            "valid_answer_fraction": self.valid_answer_fraction,
            "theorem_violation": self.theorem_violation,
        }
        out.update(self.details)
        return out


def _check_session(session: OracleSession, kappa: str, tau_oracle: float) -> None:
    want = STAT if kappa == K1 else VROOT
    if session.spec.kind != want:
        raise ValueError(f"{kappa} solvers need a {want} oracle session")
    if session.spec.tau > tau_oracle + 1e-12:
        raise ValueError(
            f"oracle tolerance {session.spec.tau} is looser than required {tau_oracle}"
        )


def _gap(kappa: str, expected: float, answered: float) -> float:
    if kappa == K1:
        return abs(expected - answered)
    return abs(math.sqrt(max(expected, 0.0)) - math.sqrt(max(answered, 0.0)))


# ---------------------------------------------------------------------------
# universal search
# ---------------------------------------------------------------------------


def solve_search_universal(
    problem: ProblemSpec,
    tau: float,
    session: OracleSession,
    kappa: str = K1,
    mode: str = "det",
    delta: float | None = None,
    rng: np.random.Generator | None = None,
    cover_oracle=None,
    kl_bound: float | None = None,
    coefficient_simplex: bool = False,
) -> RunReport:
    """Multiplicative-weights search over a finite distribution family.

    Starts from the uniform mixture, queries witnesses against the current
    mixture at oracle tolerance tau/3 (sqrt scale: tau/3 with gamma tau^2/9),
    updates on any answer deviating by more than 2 tau / 3, and outputs the
    proposed solution once nothing triggers. ``mode="rand"`` needs ``delta``
    and ``rng``: each step samples ceil(d ln(T/delta)) witnesses from the
    cover measure and the final solution is drawn from the step's solution
    measure.

    In ``coefficient_simplex`` mode the weights live on the family's
    convex-combination coefficients instead of the domain simplex.
    """
    if mode not in ("det", "rand"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "rand" and (delta is None or rng is None):
        raise ValueError("randomized mode needs delta and rng")
    gamma = tau / 3.0 if kappa == K1 else tau**2 / 9.0
    _check_session(session, kappa, tau / 3.0)
    if kl_bound is None:
        kl_bound = math.log(problem.n_dists) if problem.n_dists > 1 else 1.0
    budget = update_budget(kl_bound, tau, kappa)
    if cover_oracle is None:
        cover_oracle = margin_cover(problem, tau, kappa=kappa, randomized=(mode == "rand"))
    dist_mat = np.array([d.weights for d in problem.dists])
    if coefficient_simplex:
        state = MWState.start(np.full(problem.n_dists, 1.0), gamma)
    else:
        state = MWState.start(mixture(list(problem.dists)).weights, gamma)
    updates = 0
    delta_step = None if delta is None else delta / max(budget, 1)
    while True:
        t_vec = state.weights @ dist_mat if coefficient_simplex else state.weights
        step = cover_oracle(t_vec)
        if mode == "det":
            chosen = list(range(len(step.queries)))
        else:
            if len(step.queries) == 0:
                chosen = []
            else:
                s = max(math.ceil(step.d * math.log(1.0 / delta_step)), 1)
                cdf = np.cumsum(step.query_measure)
                draws = np.minimum(
                    np.searchsorted(cdf, rng.random(s), side="right"), len(cdf) - 1
                )
                chosen = sorted(set(int(j) for j in draws))
        triggered = None
        for j in chosen:
            phi = step.queries[j]
            expected = float(t_vec @ phi)
            v = session.query(phi)
            if _gap(kappa, expected, v) > 2.0 * tau / 3.0:
                sign = 1.0 if expected > v else -1.0
                triggered = sign * phi
                break
        if triggered is None:
            f_idx = step.solution_index
            solution = None if f_idx is None else problem.solutions[f_idx]
            if mode == "rand" and step.solution_measure is not None:
                f_idx = int(
                    np.searchsorted(np.cumsum(step.solution_measure.weights), rng.random())
                )
                f_idx = min(f_idx, problem.n_solutions - 1)
                solution = problem.solutions[f_idx]
            details = {}
            if step.unservable:
                details["cover_incomplete"] = list(step.unservable)
            return RunReport(
                outcome=SOLVED,
                solution=solution,
                queries=session.query_count,
                updates=updates,
                transcript=session.transcript,
                valid_answer_fraction=session.transcript.valid_fraction,
                details=details,
            )
        if updates >= budget:
            valid = session.transcript.valid_fraction
            return RunReport(
                outcome=BUDGET_EXCEEDED,
                solution=None,
                queries=session.query_count,
                updates=updates,
                transcript=session.transcript,
                valid_answer_fraction=valid,
                theorem_violation=(valid == 1.0),
                details={"budget": budget},
            )
        loss = dist_mat @ triggered if coefficient_simplex else triggered
        state = state.update(loss)
        updates += 1


# ---------------------------------------------------------------------------
# decision by sampled witnesses
# ---------------------------------------------------------------------------


def decision_cover(problem: ProblemSpec, tau: float):
    """Precompute the (family, fractional cover) pair the decision solver
    samples from — reusable across trials on the same instance."""
    if problem.reference is None:
        raise ValueError("decision solving needs a reference distribution")
    family = achievable_subsets(list(problem.dists), problem.reference, tau, kappa=K1)
    missing = family.uncovered()
    if missing:
        raise UncoverableError(
            f"distributions {missing} are indistinguishable from the reference at radius {tau}",
            tuple(missing),
        )
    return family, fractional_cover(family)


def solve_decision_sampled(
    problem: ProblemSpec,
    tau: float,
    delta: float,
    session: OracleSession,
    rng: np.random.Generator,
    cover=None,
) -> RunReport:
    """Reference-vs-family decision with ceil(d ln(1/delta)) sampled witnesses.

    Builds the achievable family against the reference once (or reuses a
    precomputed ``decision_cover`` result), samples witness sets from the
    fractional cover measure, queries each witness at oracle tolerance
    tau/2, and reports "not-reference" iff some answer strays more than
    tau/2 from the reference's value.
    """
    if problem.reference is None:
        raise ValueError("decision solving needs a reference distribution")
    if session.spec.kind != STAT or session.spec.tau > tau / 2.0 + 1e-12:
        raise ValueError("decision solver needs a STAT oracle at tolerance tau/2")
    if not (0 < delta < 1):
        raise ValueError("delta must lie in (0, 1)")
    d0 = problem.reference
    family, cover = cover if cover is not None else decision_cover(problem, tau)
    s = max(math.ceil(cover.value * math.log(1.0 / delta)), 1)
    cdf = np.cumsum(cover.q)
    draws = np.minimum(np.searchsorted(cdf, rng.random(s), side="right"), len(cdf) - 1)
    verdict = "reference"
    for j in sorted(set(int(j) for j in draws)):
        phi = family.witnesses[j]
        v = session.query(phi)
        if abs(v - float(d0.weights @ phi)) > tau / 2.0:
            verdict = "not-reference"
            break
    return RunReport(
        outcome=SOLVED,
        solution=verdict,
        queries=session.query_count,
        updates=0,
        transcript=session.transcript,
        valid_answer_fraction=session.transcript.valid_fraction,
        details={"witness_budget": s, "cover_value": cover.value},
    )


# ---------------------------------------------------------------------------
# verifiable search
# ---------------------------------------------------------------------------


def solve_verifiable(
    problem: ProblemSpec,
    theta: float,
    tau: float,
    session: OracleSession,
    kl_bound: float | None = None,
) -> RunReport:
    """Search with verification: accept f when its verify query measures at
    most theta + 2 tau / 3 (certifying D[phi_f] <= theta + tau on valid
    answers).

    While the mixture has a solution passing the threshold, test it — a
    failed verification is itself an update direction. Otherwise fall back
    to distinguishing queries against the whole family. ``stuck`` means no
    threshold candidate and no triggering witness existed.
    """
    if problem.verify is None or problem.threshold is None:
        raise ValueError("solve_verifiable needs verify queries")
    _check_session(session, K1, tau / 3.0)
    gamma = tau / 3.0
    if kl_bound is None:
        kl_bound = math.log(problem.n_dists) if problem.n_dists > 1 else 1.0
    budget = update_budget(kl_bound, tau, K1)
    verify_mat = np.array(
        [problem.verify[f].values for f in problem.solutions]
    )  # (F, X)
    dist_mat = np.array([d.weights for d in problem.dists])
    state = MWState.start(mixture(list(problem.dists)).weights, gamma)
    updates = 0

    def finish(outcome, solution, extra=None):
        # STUCK is a legal outcome (the instance may simply not be verifiably
        # well-posed at this radius); only blowing the update budget on valid
        # answers contradicts a theorem.
        valid = session.transcript.valid_fraction
        return RunReport(
            outcome=outcome,
            solution=solution,
            queries=session.query_count,
            updates=updates,
            transcript=session.transcript,
            valid_answer_fraction=valid,
            theorem_violation=(outcome == BUDGET_EXCEEDED and valid == 1.0),
            details=extra or {},
        )

    while True:
        t_vec = state.weights
        vals = verify_mat @ t_vec
        candidates = np.flatnonzero(vals <= theta)
        triggered = None
        if candidates.size:
            fi = int(candidates[0])
            phi = verify_mat[fi]
            v = session.query(phi)
            if v <= theta + 2.0 * tau / 3.0:
                return finish(SOLVED, problem.solutions[fi], {"theta": theta})
            triggered = -phi  # mixture underestimates phi_f; push mass toward it
        else:
            for i in range(problem.n_dists):
                gap, phi = _k1_witness(dist_mat[i], t_vec)
                if gap <= tau:
                    continue
                expected = float(t_vec @ phi)
                v = session.query(phi)
                if abs(expected - v) > 2.0 * tau / 3.0:
                    triggered = phi if expected > v else -phi
                    break
            if triggered is None:
                return finish(STUCK, None, {"theta": theta})
        if updates >= budget:
            return finish(BUDGET_EXCEEDED, None, {"budget": budget, "theta": theta})
        state = state.update(triggered)
        updates += 1


def solve_optimizing(
    problem: ProblemSpec,
    eps: float,
    tau: float,
    session: OracleSession,
    kl_bound: float | None = None,
) -> RunReport:
    """Binary search on the verification threshold to width tau/4.

    Each probe runs the verifiable solver at inner tolerance 3 tau / 4, so a
    single STAT(tau/4) oracle session serves every probe. An accepting probe
    at theta certifies D[phi_f] <= theta + 3 tau / 4; a stuck probe certifies
    that no solution sits below theta - 3 tau / 4. The final solution is
    (eps + tau)-optimal whenever eps >= 3 tau / 4.
    """
    if problem.verify is None:
        raise ValueError("solve_optimizing needs verify queries")
    inner_tau = 3.0 * tau / 4.0
    _check_session(session, K1, tau / 4.0)
    lo, hi = 0.0, 1.0
    best_solution = None
    probes = 0
    total_updates = 0
    while hi - lo > tau / 4.0:
        mid = 0.5 * (lo + hi)
        report = solve_verifiable(problem, mid, inner_tau, session, kl_bound=kl_bound)
        probes += 1
        total_updates += report.updates
        if report.outcome == SOLVED:
            hi = mid
            best_solution = report.solution
        else:
            lo = mid
    if best_solution is None:
        report = solve_verifiable(problem, hi, inner_tau, session, kl_bound=kl_bound)
        probes += 1
        total_updates += report.updates
        if report.outcome == SOLVED:
            best_solution = report.solution
    valid = session.transcript.valid_fraction
    solved = best_solution is not None
    return RunReport(
        outcome=SOLVED if solved else STUCK,
        solution=best_solution,
        queries=session.query_count,
        updates=total_updates,
        transcript=session.transcript,
        valid_answer_fraction=valid,
        theorem_violation=(not solved and valid == 1.0),
        details={"theta_hat": hi, "probes": probes, "inner_tau": inner_tau},
    )


# ---------------------------------------------------------------------------
# heavy-point PAC learner
# ---------------------------------------------------------------------------


def learn_with_heavy_points(
    marginal: FiniteDistribution,
    concepts: Sequence[tuple],
    eps: float,
    session: OracleSession,
) -> RunReport:
    """Learn a {-1,+1} labeling over the marginal's domain to error eps.

    The oracle session runs over the lifted labeled joint at STAT tolerance
    at most eps^2/13. Points with marginal mass >= eps^2/12 (at most
    12/eps^2 of them) are labeled individually — the mass gap over eps^2/13
    makes each sign query conclusive. If the resulting hypothesis (negative
    elsewhere) already measures below 5 eps / 6 it is returned; otherwise
    the concepts carrying at least 2 eps / 3 positive marginal mass outside
    the heavy set (computable without queries, since the marginal is known)
    are tried in order, accepting the first whose disagreement measures at
    most eps / 2.

    ``concepts`` is a list of (concept_id, labels) with labels a +-1 vector
    over the marginal's domain. Returns a RunReport whose solution is
    (hypothesis labels over the marginal domain, via_concept_id_or_None).
    """
    if eps >= 1.0:
        labels = -np.ones(len(marginal.domain))
        return RunReport(
            outcome=SOLVED,
            solution=(labels, None),
            queries=0,
            updates=0,
            transcript=session.transcript,
            valid_answer_fraction=1.0,
            details={"note": "eps >= 1: the constant hypothesis is trivially accurate"},
        )
    if session.spec.kind != STAT or session.spec.tau > eps**2 / 13.0 + 1e-15:
        raise ValueError("the learner needs a STAT oracle at tolerance eps^2/13")
    joint_domain = session.dist.domain
    base = marginal.domain
    n = len(base)
    heavy = [i for i in range(n) if marginal.weights[i] >= eps**2 / 12.0]

    def lifted_index(z_idx: int, b: int) -> int:
        z = base.elements[z_idx]
        prefix = tuple(z) if isinstance(z, tuple) else (z,)
        return joint_domain.index_of(prefix + (b,))

    labels = -np.ones(n)
    for i in heavy:
        phi = np.zeros(len(joint_domain))
        phi[lifted_index(i, 1)] = 1.0
        phi[lifted_index(i, -1)] = -1.0
        v = session.query(phi)
        labels[i] = 1.0 if v > 0 else -1.0

    def disagreement_query(h: np.ndarray) -> np.ndarray:
        phi = np.zeros(len(joint_domain))
        for i in range(n):
            phi[lifted_index(i, -int(h[i]))] = 1.0
        return phi

    measured = session.query(disagreement_query(labels))
    if measured < 5.0 * eps / 6.0:
        return RunReport(
            outcome=SOLVED,
            solution=(labels, None),
            queries=session.query_count,
            updates=0,
            transcript=session.transcript,
            valid_answer_fraction=session.transcript.valid_fraction,
            details={"measured_error": measured, "heavy_points": len(heavy)},
        )
    heavy_set = set(heavy)
    candidates = []
    for concept_id, c_labels in concepts:
        c = np.asarray(c_labels, dtype=float)
        outside_pos = float(
            sum(
                marginal.weights[i]
                for i in range(n)
                if i not in heavy_set and c[i] == 1.0
            )
        )
        if outside_pos >= 2.0 * eps / 3.0:
            candidates.append((concept_id, c))
    for concept_id, c in candidates:
        h = labels.copy()
        for i in range(n):
            if i not in heavy_set:
                h[i] = c[i]
        measured_c = session.query(disagreement_query(h))
        if measured_c <= eps / 2.0:
            return RunReport(
                outcome=SOLVED,
                solution=(h, concept_id),
                queries=session.query_count,
                updates=0,
                transcript=session.transcript,
                valid_answer_fraction=session.transcript.valid_fraction,
                details={
                    "measured_error": measured_c,
                    "heavy_points": len(heavy),
                    "candidates": len(candidates),
                },
            )
    valid = session.transcript.valid_fraction
    return RunReport(
        outcome=STUCK,
        solution=(labels, None),
        queries=session.query_count,
        updates=0,
        transcript=session.transcript,
        valid_answer_fraction=valid,
        theorem_violation=(valid == 1.0),
        details={"candidates": len(candidates), "heavy_points": len(heavy)},
    )
