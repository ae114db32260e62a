"""Query-complexity dimensions of distribution families.

All dimensions here are built from one primitive: which subsets of the
family can a single query distinguish from a center distribution at radius
tau (``games.achievable_subsets``). On top of that:

- ``det_cover``: smallest integer cover of the family by achievable subsets
  (exact branch-and-bound or greedy).
- ``rsd_decision``: the fractional cover value. Computed twice — the primal
  covering LP and an independently-formulated hardest-measure LP
  (min_mu max_S mu(S), inverted) — and the two must agree to 1e-6; LP
  duality is what makes this a minimax identity. Distributions that no
  query distinguishes make the dimension infinite (reported as a sentinel
  with the witness indices).
- ``sd_decision``: the worst-subfamily integer ratio max_T |T| / max_S |S cap T|.
- ``rsd_search`` / ``rsd_verifiable`` / ``rsd_optimizing``: reductions of
  search-type problems to decision dimensions by removing distributions
  that a solution measure already serves, filtering candidate centers, or
  sweeping the verification threshold. Candidate centers are drawn from a
  finite list (uniform, family mixture, caller-supplied), so these report
  LOWER_BOUNDs of the suprema they approximate.
- ``crsd``: the zero-sum-game dimension 1 / min_mu max_sigma E_mu |<sigma, D - D0>|
  over sign queries sigma (exact for K1 within the domain guard).
- ``combined_relation_audit``: checks the provable bracket between crsd and
  rsd_decision at derived radii.
- ``rand_to_det``: extracts a deterministic witness cover from a fractional
  cover measure by sampling, with the standard ceil(d ln(1/delta)) budget.
- ``simple_lower_bound``: the one-line lower bound
  (beta - max_f mu(Z_f)) / kappa1_frac(mu, tau).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
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
from .errors import (
    GuardExceededError,
    NumericalError,
    TheoremViolationError,
    UncoverableError,
)
from .games import (
    STRICT_EPS,
    CoverFamily,
    achievable_subsets,
    exact_min_cover,
    fractional_cover,
    greedy_cover,
    lp_solve,
    zero_sum,
)
from .norms import EXACT, LOWER_BOUND, UPPER_BOUND, kappa1_frac, kbar2

__all__ = [
    "DimensionReport",
    "det_cover",
    "rsd_decision",
    "sd_decision",
    "rsd_search",
    "rsd_verifiable",
    "rsd_optimizing",
    "crsd",
    "combined_relation_audit",
    "rand_to_det",
    "simple_lower_bound",
]

_DUALITY_TOL = 1e-6


@dataclass(frozen=True)
class DimensionReport:
    """A dimension value with its kind tag, exactness, and certificate.

    ``value`` may be ``math.inf`` (serialized as the string "inf"); the
    certificate then names the indistinguishable distributions.
    """

    value: float
    kind: str
    exactness: str
    certificate: dict


def _family(dists, d0, tau, kappa) -> CoverFamily:
    return achievable_subsets(dists, d0, tau, kappa=kappa)


def det_cover(
    dists: Sequence[FiniteDistribution],
    d0: FiniteDistribution,
    tau: float,
    mode: str = "exact",
    kappa: str = K1,
) -> DimensionReport:
    """Smallest number of queries that pin down every family member.

    ``mode="exact"`` uses branch-and-bound over the achievable family,
    ``mode="greedy"`` the max-coverage heuristic (first index on ties).
    Raises :class:`UncoverableError` listing distributions no query
    distinguishes at radius tau.
    """
    family = _family(dists, d0, tau, kappa)
    missing = family.uncovered()
    if missing:
        raise UncoverableError(
            f"no query distinguishes distributions {missing} at radius {tau}",
            tuple(missing),
        )
    if mode == "exact":
        chosen = exact_min_cover(family)
    elif mode == "greedy":
        chosen = greedy_cover(family)
    else:
        raise ValueError(f"unknown det_cover mode {mode!r}")
    return DimensionReport(
        value=float(len(chosen)),
        kind=f"det-cover-{mode}",
        exactness=EXACT if (mode == "exact" and kappa == K1) else UPPER_BOUND,
        certificate={
            "sets": [sorted(family.sets[j]) for j in chosen],
            "witnesses": [family.witnesses[j] for j in chosen],
        },
    )


def _hardest_measure_lp(family: CoverFamily) -> tuple[float, np.ndarray]:
    """Independently computed min over probability measures of max_S mu(S)."""
    m, k = family.ground_size, len(family.sets)
    # variables: mu_1..mu_m, z ; maximize -z
    a_ub = np.zeros((k, m + 1))
    for j, s in enumerate(family.sets):
        for i in s:
            a_ub[j, i] = 1.0
        a_ub[j, m] = -1.0
    a_eq = np.zeros((1, m + 1))
    a_eq[0, :m] = 1.0
    c = np.zeros(m + 1)
    c[m] = -1.0
    res = lp_solve(c, a_ub=a_ub, b_ub=np.zeros(k), a_eq=a_eq, b_eq=np.ones(1))
    z = -res.value
    return z, np.clip(res.x[:m], 0.0, None)


def rsd_decision(
    dists: Sequence[FiniteDistribution],
    d0: FiniteDistribution,
    tau: float,
    kappa: str = K1,
) -> DimensionReport:
    """Fractional cover value of the achievable family (the minimax dimension).

    Computes the covering LP and, independently, the hardest-measure LP
    min_mu max_S mu(S); LP duality forces value = 1/(that minimum), and the
    two routes must agree within 1e-6 or a NumericalError is raised.

    An empty family (no distributions) reports 0; a distribution no query
    distinguishes reports value = inf with the witnesses.
    """
    exactness = EXACT if kappa == K1 else UPPER_BOUND
    if not dists:
        return DimensionReport(0.0, "rsd-decision", exactness, {"note": "empty family"})
    family = _family(dists, d0, tau, kappa)
    missing = family.uncovered()
    if missing:
        return DimensionReport(
            value=math.inf,
            kind="rsd-decision",
            exactness=exactness,
            certificate={"indistinguishable": list(missing)},
        )
    cover = fractional_cover(family)
    z, mu = _hardest_measure_lp(family)
    if z <= 0:
        raise NumericalError("hardest-measure LP returned a non-positive value")
    dual_value = 1.0 / z
    if abs(dual_value - cover.value) > _DUALITY_TOL * max(1.0, cover.value):
        raise NumericalError(
            f"primal cover {cover.value!r} and dual measure bound {dual_value!r} disagree"
        )
    return DimensionReport(
        value=cover.value,
        kind="rsd-decision",
        exactness=exactness,
        certificate={
            "sets": [sorted(s) for s in family.sets],
            "witnesses": list(family.witnesses),
            "cover_measure": cover.q,
            "cover_weights": cover.y,
            "hardest_measure": mu,
            "dual_value": dual_value,
        },
    )


def sd_decision(
    dists: Sequence[FiniteDistribution],
    d0: FiniteDistribution,
    tau: float,
    kappa: str = K1,
) -> DimensionReport:
    """max over subfamilies T of |T| / (largest achievable overlap with T).

    Exhaustive over subfamilies (guard |dists| <= 16). A distribution in no
    achievable subset makes the value infinite.
    """
    m = len(dists)
    if m > 16:
        raise GuardExceededError(f"sd_decision: 2^{m} subfamilies exceed the guard")
    if m == 0:
        return DimensionReport(0.0, "sd-decision", EXACT if kappa == K1 else LOWER_BOUND, {})
    family = _family(dists, d0, tau, kappa)
    missing = family.uncovered()
    if missing:
        return DimensionReport(
            value=math.inf,
            kind="sd-decision",
            exactness=EXACT if kappa == K1 else LOWER_BOUND,
            certificate={"indistinguishable": list(missing), "subfamily": list(missing)},
        )
    masks = [sum(1 << i for i in s) for s in family.sets]
    best_val, best_t = 0.0, 0
    for t in range(1, 1 << m):
        size = t.bit_count()
        overlap = max((mask & t).bit_count() for mask in masks)
        val = size / overlap
        if val > best_val + 1e-15:
            best_val, best_t = val, t
    subfamily = [i for i in range(m) if (best_t >> i) & 1]
    return DimensionReport(
        value=best_val,
        kind="sd-decision",
        exactness=EXACT if kappa == K1 else LOWER_BOUND,
        certificate={"subfamily": subfamily},
    )


def _default_centers(problem: ProblemSpec, extra=None):
    candidates = [
        ("uniform-domain", FiniteDistribution.uniform(problem.domain)),
        ("uniform-mixture", mixture(list(problem.dists))),
    ]
    for i, d in enumerate(extra or []):
        candidates.append((f"user-{i}", d))
    return candidates


def _default_solution_measures(problem: ProblemSpec):
    n = problem.n_solutions
    measures = [(f"point:{problem.solutions[i]!r}", Measure.point_mass(n, i)) for i in range(n)]
    if n <= 10:
        for bits in range(1, 1 << n):
            members = [i for i in range(n) if (bits >> i) & 1]
            if len(members) < 2:
                continue
            w = np.zeros(n)
            w[members] = 1.0 / len(members)
            measures.append((f"uniform:{members}", Measure(n, w)))
    elif n > 1:
        measures.append(("uniform:all", Measure.uniform(n)))
    return measures


def rsd_search(
    problem: ProblemSpec,
    tau: float,
    alpha: float = 1.0,
    d0_candidates: Sequence[FiniteDistribution] | None = None,
    solution_measures=None,
    kappa: str = K1,
) -> DimensionReport:
    """Search-problem dimension: the best center must still be hard after any
    solution measure removes the distributions it already serves.

    value = max over candidate centers of min over solution measures P of
    rsd_decision(dists minus {D : P(Z(D)) >= alpha}, center, tau). Candidate
    centers come from a finite default list (uniform over the domain, the
    family mixture) plus caller-supplied ones, so the report is a
    LOWER_BOUND of the true supremum over all centers.
    """
    if not (0 < alpha <= 1):
        raise ValueError("alpha must lie in (0, 1]")
    centers = _default_centers(problem, d0_candidates)
    measures = solution_measures or _default_solution_measures(problem)
    best_val, best_cert = -1.0, {}
    for tag, center in centers:
        worst_val, worst_cert = math.inf, {}
        for p_tag, p in measures:
            served = [
                i
                for i in range(problem.n_dists)
                if p.mass(problem.valid_solution_indices(i)) >= alpha - 1e-12
            ]
            remaining = [problem.dists[i] for i in range(problem.n_dists) if i not in served]
            if remaining:
                inner = rsd_decision(remaining, center, tau, kappa=kappa)
                val = inner.value
            else:
                val = 0.0
                inner = None
            if val < worst_val:
                worst_val = val
                worst_cert = {
                    "solution_measure": p_tag,
                    "removed": served,
                    "inner": None if inner is None else inner.certificate,
                }
            if worst_val == 0.0:
                break
        if worst_val > best_val:
            best_val = worst_val
            best_cert = {"center": tag, **worst_cert}
    return DimensionReport(
        value=best_val,
        kind="rsd-search",
        exactness=LOWER_BOUND,
        certificate=best_cert,
    )


def _verify_values(problem: ProblemSpec, dist: FiniteDistribution) -> np.ndarray:
    return np.array([dist.expectation(problem.verify[f]) for f in problem.solutions])


def rsd_verifiable(
    problem: ProblemSpec,
    theta: float,
    tau: float,
    d0_candidates: Sequence[FiniteDistribution] | None = None,
    kappa: str = K1,
) -> DimensionReport:
    """Dimension against centers on which every solution fails the threshold.

    Only candidate centers with D0[phi_f] > theta for every f are admitted;
    the value is the best rsd_decision over the full family against such a
    center (0 with a note when no candidate qualifies).
    """
    if problem.verify is None:
        raise ValueError("rsd_verifiable needs a problem with verify queries")
    centers = [
        (tag, d) for tag, d in _default_centers(problem, d0_candidates)
        if float(_verify_values(problem, d).min()) > theta
    ]
    if not centers:
        return DimensionReport(
            value=0.0,
            kind="rsd-verifiable",
            exactness=LOWER_BOUND,
            certificate={"note": "no candidate center lies above the threshold"},
        )
    best_val, best_cert = -1.0, {}
    for tag, center in centers:
        inner = rsd_decision(list(problem.dists), center, tau, kappa=kappa)
        if inner.value > best_val:
            best_val = inner.value
            best_cert = {"center": tag, "inner": inner.certificate}
    return DimensionReport(
        value=best_val,
        kind="rsd-verifiable",
        exactness=LOWER_BOUND,
        certificate=best_cert,
    )


def rsd_optimizing(
    problem: ProblemSpec,
    eps: float,
    tau: float,
    theta_grid: Sequence[float] | None = None,
    d0_candidates: Sequence[FiniteDistribution] | None = None,
    kappa: str = K1,
) -> DimensionReport:
    """Dimension of threshold optimization: sweep theta, keep distributions
    that have a theta-valid solution, and demand centers that fail even at
    theta + eps.

    value = max over theta in the grid and admitted centers of
    rsd_decision({D : min_f D[phi_f] <= theta}, center, tau).
    """
    if problem.verify is None:
        raise ValueError("rsd_optimizing needs a problem with verify queries")
    if theta_grid is None:
        theta_grid = np.linspace(0.0, 1.0, 21)
    centers = _default_centers(problem, d0_candidates)
    dist_mins = np.array(
        [float(_verify_values(problem, d).min()) for d in problem.dists]
    )
    best_val, best_cert = 0.0, {"note": "no theta/center combination applies"}
    for theta in theta_grid:
        keep = [i for i in range(problem.n_dists) if dist_mins[i] <= theta]
        if not keep:
            continue
        remaining = [problem.dists[i] for i in keep]
        for tag, center in centers:
            if float(_verify_values(problem, center).min()) <= theta + eps:
                continue
            inner = rsd_decision(remaining, center, tau, kappa=kappa)
            if inner.value > best_val:
                best_val = inner.value
                best_cert = {
                    "theta": float(theta),
                    "center": tag,
                    "kept": keep,
                    "inner": inner.certificate,
                }
    return DimensionReport(
        value=best_val,
        kind="rsd-optimizing",
        exactness=LOWER_BOUND,
        certificate=best_cert,
    )


def crsd(
    dists: Sequence[FiniteDistribution],
    d0: FiniteDistribution,
    kappa: str = K1,
) -> DimensionReport:
    """The zero-sum-game dimension 1 / inf_mu max_sigma E_{D~mu} |<sigma, D - D0>|.

    K1 (exact): sigma ranges over sign vectors; by symmetry only vectors
    with first coordinate +1 are enumerated (guard: |X| <= 16). The center
    must not belong to the family (the game value would be 0).

    KV (lower bound): the vertex-payoff game |sqrt(D[phi]) - sqrt(D0[phi])|
    picks the hardest measure mu*, and the reported value is
    1 / kbar2(mu*) — kbar2 upper-bounds the sqrt-scale norm, so inverting it
    keeps the bound on the honest side.
    """
    if not dists:
        raise ValueError("crsd of an empty family")
    for i, d in enumerate(dists):
        if d.close_to(d0):
            raise ValueError(f"center coincides with family member {i}; the game value is 0")
    n = len(d0.domain)
    if n > 16:
        raise GuardExceededError(f"crsd: 2^{n} sign rows exceed the guard")
    cols = np.arange(n)
    diff = np.array([d.weights - d0.weights for d in dists])  # (m, n)
    if kappa == K1:
        sigmas = ((np.arange(1 << (n - 1))[:, None] >> cols) & 1) * 2.0 - 1.0
        sigmas[:, n - 1] = 1.0  # fix the last coordinate; |<sigma, g>| is sign-symmetric
        payoff = np.abs(sigmas @ diff.T)  # (2^(n-1), m)
        game = zero_sum(payoff)
        value = game.value
        if value <= 1e-12:
            raise NumericalError("crsd game value vanished despite distinct center")
        return DimensionReport(
            value=1.0 / value,
            kind="crsd",
            exactness=EXACT,
            certificate={
                "game_value": value,
                "hardest_measure": game.col_strategy,
                "query_mixture": game.row_strategy,
            },
        )
    if kappa == KV:
        vertices = ((np.arange(1 << n)[:, None] >> cols) & 1).astype(float)
        d_mat = np.array([d.weights for d in dists])
        dv = np.sqrt(np.clip(vertices @ d_mat.T, 0.0, None))
        zv = np.sqrt(np.clip(vertices @ d0.weights, 0.0, None))
        payoff = np.abs(dv - zv[:, None])
        game = zero_sum(payoff)
        mu = Measure(len(dists), game.col_strategy / game.col_strategy.sum())
        upper = kbar2(mu, list(dists), d0)
        if upper.value <= 1e-12:
            raise NumericalError("kbar2 upper bound vanished despite distinct center")
        return DimensionReport(
            value=1.0 / upper.value,
            kind="crsd",
            exactness=LOWER_BOUND,
            certificate={
                "hardest_measure": mu.weights,
                "vertex_game_value": game.value,
                "kbar2_at_measure": upper.value,
            },
        )
    raise ValueError(f"unknown kappa tag {kappa!r}")


def combined_relation_audit(
    dists: Sequence[FiniteDistribution],
    d0: FiniteDistribution,
) -> dict:
    """Check the provable bracket between the game dimension and the cover dimension.

    With d = crsd(dists, d0): rsd_decision at tau = 1/(3d) must be at most 3d
    (up to 1e-6 of LP tolerance), while at tau in {1/(2d), 1/d} it must
    exceed d*tau strictly (an infinite dimension counts as exceeding).
    Returns a report dict with one entry per check and an overall flag.
    """
    if not dists:
        return {"crsd": 0.0, "checks": [], "pass": True, "note": "empty family"}
    d = crsd(dists, d0).value
    report = {"crsd": d, "checks": [], "pass": True}
    tau_low = 1.0 / (3.0 * d)
    low = rsd_decision(dists, d0, tau_low)
    ok = low.value <= 3.0 * d + 1e-6
    report["checks"].append(
        {"tau": tau_low, "rsd": low.value, "bound": 3.0 * d, "relation": "<=", "ok": ok}
    )
    report["pass"] &= ok
    for denom in (2.0, 1.0):
        tau = 1.0 / (denom * d)
        r = rsd_decision(dists, d0, min(tau, 2.0))
        ok = r.value > d * tau
        report["checks"].append(
            {"tau": tau, "rsd": r.value, "bound": d * tau, "relation": ">", "ok": ok}
        )
        report["pass"] &= ok
    report["pass"] = bool(report["pass"])
    return report


def rand_to_det(
    family: CoverFamily,
    q: np.ndarray,
    d: float,
    mu: Measure,
    delta: float,
    rng: np.random.Generator,
    max_attempts: int = 100,
) -> dict:
    """Sample a deterministic witness set from a fractional cover measure.

    Draws s = ceil(d * ln(1/delta)) sets i.i.d. from Q per attempt and
    accepts when the mu-mass left uncovered is strictly below delta. With
    delta = 1/|family| and uniform mu this forces a full cover. Raises
    :class:`TheoremViolationError` after ``max_attempts`` failures.
    """
    if not (0 < delta < 1):
        raise ValueError("delta must lie in (0, 1)")
    if mu.size != family.ground_size:
        raise ValueError("mu must weight the family's ground set")
    s = math.ceil(d * math.log(1.0 / delta))
    s = max(s, 1)
    cdf = np.cumsum(q)
    for attempt in range(1, max_attempts + 1):
        draws = np.minimum(np.searchsorted(cdf, rng.random(s), side="right"), len(q) - 1)
        covered = set()
        for j in draws:
            covered |= family.sets[int(j)]
        uncovered = [i for i in range(family.ground_size) if i not in covered]
        mass = mu.mass(uncovered) if uncovered else 0.0
        if mass < delta:
            return {
                "witness_sets": sorted(set(int(j) for j in draws)),
                "samples": s,
                "attempts": attempt,
                "uncovered": uncovered,
                "uncovered_mass": mass,
            }
    raise TheoremViolationError(
        f"no d*ln(1/delta) sample of the cover measure reached uncovered mass < {delta} "
        f"in {max_attempts} attempts"
    )


def simple_lower_bound(
    problem: ProblemSpec,
    mu: Measure,
    d0: FiniteDistribution,
    tau: float,
    beta: float,
) -> DimensionReport:
    """The one-line query lower bound (beta - max_f mu(Z_f)) / kappa1_frac.

    mu weights the problem's distributions; beta is the target success
    probability. A zero discrimination fraction makes the bound infinite
    when the numerator is positive (and vacuous, 0, otherwise).
    """
    if mu.size != problem.n_dists:
        raise ValueError("mu must weight the problem's distributions")
    best_f = max(
        range(problem.n_solutions),
        key=lambda fi: mu.mass(problem.solved_dist_indices(fi)),
        default=None,
    )
    mu_f = 0.0 if best_f is None else mu.mass(problem.solved_dist_indices(best_f))
    frac = kappa1_frac(mu, list(problem.dists), d0, tau)
    numerator = beta - mu_f
    if numerator <= 0:
        value = 0.0
    elif frac.value <= 0:
        value = math.inf
    else:
        value = numerator / frac.value
    return DimensionReport(
        value=value,
        kind="simple-lower-bound",
        exactness=LOWER_BOUND,
        certificate={
            "numerator": numerator,
            "best_solution_mass": mu_f,
            "kappa1_frac": frac.value,
            "frac_certificate": frac.certificate,
        },
    )
