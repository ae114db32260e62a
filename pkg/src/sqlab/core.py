"""Finite domains, distributions, queries, measures and problem instances.

Everything downstream (oracles, norms, dimensions, solvers) works over a
finite domain X with distributions represented as dense weight vectors.
Conventions used throughout the package:

- A *query* is a function phi: X -> R with a declared range, either
  ``SIGNED`` ([-1, 1]) or ``UNIT`` ([0, 1]).
- ``likelihood_hat(D, D0)`` is the centered likelihood ratio
  Dhat(x) = D(x)/D0(x) - 1 on the support of D0 (and 0 off it), so that
  E_{D0}[Dhat] = 0 and E_D[phi] - E_{D0}[phi] = E_{D0}[phi * Dhat].
- Labeled domains (used by PAC-style problems) have elements whose last
  component is a label in {-1, +1}; ``pac_lift`` builds them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainMismatchError, SupportError

__all__ = [
    "SIGNED",
    "UNIT",
    "K1",
    "KV",
    "DECISION",
    "SEARCH",
    "VERIFIABLE",
    "OPTIMIZING",
    "PAC",
    "WEIGHT_ATOL",
    "FiniteDomain",
    "FiniteDistribution",
    "QueryFn",
    "Measure",
    "ProblemSpec",
    "expectation",
    "mixture",
    "kl_divergence",
    "kl_radius_upper",
    "likelihood_hat",
    "bayes_error",
    "pac_lift",
    "is_labeled_domain",
]

#: Probability vectors must sum to 1 within this absolute tolerance.
WEIGHT_ATOL = 1e-12
#: Query values may stick out of their declared range by at most this much.
RANGE_ATOL = 1e-12

SIGNED = "signed"
UNIT = "unit"

#: Discrimination-operator tags: K1 = signed queries / L1-style margins,
#: KV = unit queries compared on the square-root scale.
K1 = "k1"
KV = "kv"

DECISION = "decision"
SEARCH = "search"
VERIFIABLE = "verifiable"
OPTIMIZING = "optimizing"
PAC = "pac"

PROBLEM_KINDS = (DECISION, SEARCH, VERIFIABLE, OPTIMIZING, PAC)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FiniteDomain:
    """An ordered finite ground set.

    Elements are hashable identifiers (strings, ints, or tuples); the order
    is significant because distributions and queries store weight/value
    vectors indexed by it.
    """

    elements: tuple

    def __post_init__(self):
        elements = tuple(self.elements)
        object.__setattr__(self, "elements", elements)
        index = {}
        for i, el in enumerate(elements):
            if el in index:
                raise DomainMismatchError(f"duplicate domain element: {el!r}")
            index[el] = i
        object.__setattr__(self, "_index", index)
        if not elements:
            raise DomainMismatchError("domain must be non-empty")

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def index_of(self, element) -> int:
        try:
            return self._index[element]
        except KeyError:
            raise DomainMismatchError(f"element {element!r} not in domain") from None

    def __contains__(self, element) -> bool:
        return element in self._index


def _check_same_domain(a, b) -> None:
    if a.domain is not b.domain and a.domain != b.domain:
        raise DomainMismatchError("objects live on different domains")


@dataclass(frozen=True, eq=False)
class FiniteDistribution:
    """A probability distribution over a :class:`FiniteDomain`.

    Weights are non-negative and sum to 1 within ``WEIGHT_ATOL``. The weight
    vector is stored read-only; treat instances as immutable values.
    """

    domain: FiniteDomain
    weights: np.ndarray

    def __post_init__(self):
        w = _readonly(self.weights)
        object.__setattr__(self, "weights", w)
        if w.shape != (len(self.domain),):
            raise DomainMismatchError(
                f"weight vector has shape {w.shape}, domain has {len(self.domain)} elements"
            )
        if np.any(w < 0):
            raise ValueError("distribution weights must be non-negative")
        total = float(w.sum())
        if abs(total - 1.0) > WEIGHT_ATOL:
            raise ValueError(f"weights sum to {total!r}, not 1 (tolerance {WEIGHT_ATOL})")

    @classmethod
    def uniform(cls, domain: FiniteDomain) -> "FiniteDistribution":
        n = len(domain)
        return cls(domain, np.full(n, 1.0 / n))

    @classmethod
    def from_mapping(cls, domain: FiniteDomain, mapping: Mapping) -> "FiniteDistribution":
        w = np.zeros(len(domain))
        for el, p in mapping.items():
            w[domain.index_of(el)] = p
        return cls(domain, w)

    def weight_of(self, element) -> float:
        return float(self.weights[self.domain.index_of(element)])

    @property
    def support_indices(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)

    def expectation(self, query) -> float:
        """E_D[phi] for a QueryFn or a raw value vector on the same domain."""
        if isinstance(query, QueryFn):
            _check_same_domain(self, query)
            values = query.values
        else:
            values = np.asarray(query, dtype=float)
            if values.shape != self.weights.shape:
                raise DomainMismatchError("value vector length does not match domain")
        return float(self.weights @ values)

    def close_to(self, other: "FiniteDistribution", atol: float = 1e-12) -> bool:
        return self.domain == other.domain and bool(
            np.max(np.abs(self.weights - other.weights)) <= atol
        )

    def sample_indices(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` i.i.d. element indices."""
        cdf = np.cumsum(self.weights)
        r = rng.random(size)
        return np.minimum(np.searchsorted(cdf, r, side="right"), len(self.domain) - 1)


@dataclass(frozen=True, eq=False)
class QueryFn:
    """A query phi: X -> R with a declared range tag (SIGNED or UNIT)."""

    domain: FiniteDomain
    values: np.ndarray
    range_tag: str = SIGNED

    def __post_init__(self):
        v = _readonly(self.values)
        object.__setattr__(self, "values", v)
        if v.shape != (len(self.domain),):
            raise DomainMismatchError("query value vector length does not match domain")
        if self.range_tag not in (SIGNED, UNIT):
            raise ValueError(f"unknown range tag {self.range_tag!r}")
        lo = -1.0 if self.range_tag == SIGNED else 0.0
        if np.any(v < lo - RANGE_ATOL) or np.any(v > 1.0 + RANGE_ATOL):
            raise ValueError(f"query values leave the declared {self.range_tag} range")

    @classmethod
    def from_callable(cls, domain: FiniteDomain, fn: Callable, range_tag: str = SIGNED) -> "QueryFn":
        return cls(domain, np.array([fn(el) for el in domain.elements], dtype=float), range_tag)

    @classmethod
    def indicator(cls, domain: FiniteDomain, members: Iterable) -> "QueryFn":
        """0/1 indicator of a subset (UNIT range)."""
        member_set = set(members)
        vals = np.array([1.0 if el in member_set else 0.0 for el in domain.elements])
        return cls(domain, vals, UNIT)

    def negate(self) -> "QueryFn":
        if self.range_tag == UNIT:
            return QueryFn(self.domain, 1.0 - self.values, UNIT)
        return QueryFn(self.domain, -self.values, SIGNED)


@dataclass(frozen=True, eq=False)
class Measure:
    """A probability measure over an indexed ground list of size ``size``.

    Used both for measures over distribution classes (discrimination
    fractions, game strategies) and over solution sets.
    """

    size: int
    weights: np.ndarray

    def __post_init__(self):
        w = _readonly(self.weights)
        object.__setattr__(self, "weights", w)
        if w.shape != (self.size,):
            raise ValueError("measure weight vector has wrong length")
        if np.any(w < 0):
            raise ValueError("measure weights must be non-negative")
        if abs(float(w.sum()) - 1.0) > WEIGHT_ATOL:
            raise ValueError("measure weights must sum to 1")

    @classmethod
    def uniform(cls, size: int) -> "Measure":
        return cls(size, np.full(size, 1.0 / size))

    @classmethod
    def point_mass(cls, size: int, index: int) -> "Measure":
        w = np.zeros(size)
        w[index] = 1.0
        return cls(size, w)

    @classmethod
    def from_weights(cls, weights: Sequence[float]) -> "Measure":
        w = np.asarray(weights, dtype=float)
        return cls(len(w), w)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)

    def mass(self, indices: Iterable[int]) -> float:
        idx = np.fromiter(indices, dtype=int)
        if idx.size == 0:
            return 0.0
        return float(self.weights[idx].sum())

    def conditioned_on(self, indices: Iterable[int]) -> "Measure":
        """The measure restricted to ``indices`` and renormalized."""
        w = np.zeros(self.size)
        idx = np.fromiter(indices, dtype=int)
        w[idx] = self.weights[idx]
        total = w.sum()
        if total <= 0:
            raise ValueError("restriction has zero mass")
        return Measure(self.size, w / total)


# ---------------------------------------------------------------------------
# operations on distributions
# ---------------------------------------------------------------------------


def expectation(dist: FiniteDistribution, query) -> float:
    return dist.expectation(query)


def mixture(dists: Sequence[FiniteDistribution], coeffs: Sequence[float] | None = None) -> FiniteDistribution:
    """The convex combination sum_i c_i D_i (uniform coefficients by default)."""
    if not dists:
        raise ValueError("mixture of an empty family")
    domain = dists[0].domain
    for d in dists[1:]:
        _check_same_domain(dists[0], d)
    if coeffs is None:
        c = np.full(len(dists), 1.0 / len(dists))
    else:
        c = np.asarray(coeffs, dtype=float)
        if c.shape != (len(dists),):
            raise ValueError("coefficient vector length does not match family size")
        if np.any(c < 0) or abs(float(c.sum()) - 1.0) > WEIGHT_ATOL:
            raise ValueError("mixture coefficients must be a probability vector")
    w = np.zeros(len(domain))
    for ci, d in zip(c, dists):
        w += ci * d.weights
    # guard against float drift before the constructor's sum check
    w /= w.sum()
    return FiniteDistribution(domain, w)


def kl_divergence(d: FiniteDistribution, e: FiniteDistribution) -> float:
    """KL(D || E) in nats; raises SupportError if D's support leaves E's."""
    _check_same_domain(d, e)
    dw, ew = d.weights, e.weights
    bad = np.flatnonzero((dw > 0) & (ew == 0))
    if bad.size:
        offenders = [d.domain.elements[i] for i in bad[:8]]
        raise SupportError(
            f"KL is infinite: {bad.size} point(s) carry D-mass but no E-mass, e.g. {offenders}"
        )
    mask = dw > 0
    return float(np.sum(dw[mask] * np.log(dw[mask] / ew[mask])))


def kl_radius_upper(dists: Sequence[FiniteDistribution]) -> tuple[float, FiniteDistribution]:
    """An upper bound on the KL radius of a family, with its witness center.

    Uses the uniform mixture as the center, so the returned value is
    max_D KL(D || mixture) <= ln |family|. This is an upper bound on the
    true radius inf_center max_D KL(D || center).
    """
    center = mixture(dists)
    value = max(kl_divergence(d, center) for d in dists)
    return value, center


def likelihood_hat(d: FiniteDistribution, d0: FiniteDistribution) -> np.ndarray:
    """Centered likelihood ratio Dhat = D/D0 - 1 on supp(D0), 0 elsewhere.

    Requires supp(D) <= supp(D0). Satisfies E_{D0}[Dhat] = 0 and, for any
    query phi, E_D[phi] - E_{D0}[phi] = E_{D0}[phi * Dhat].
    """
    _check_same_domain(d, d0)
    dw, zw = d.weights, d0.weights
    bad = np.flatnonzero((dw > 0) & (zw == 0))
    if bad.size:
        offenders = [d.domain.elements[i] for i in bad[:8]]
        raise SupportError(f"support of D leaves support of the center at {offenders}")
    out = np.zeros(len(d.domain))
    mask = zw > 0
    out[mask] = dw[mask] / zw[mask] - 1.0
    return out


def is_labeled_domain(domain: FiniteDomain) -> bool:
    """True when every element is a tuple whose last component is a +-1 label."""
    for el in domain.elements:
        if not (isinstance(el, tuple) and len(el) >= 2 and el[-1] in (-1, 1)):
            return False
    return True


def _split_labeled(element):
    base = element[:-1]
    if len(base) == 1:
        base = base[0]
    return base, element[-1]


def bayes_error(d0: FiniteDistribution) -> float:
    """min_h Pr_{(z,b)~D0}[h(z) != b] for a distribution on a labeled domain.

    Equals sum_z min(D0(z,+1), D0(z,-1)); always in [0, 1/2].
    """
    if not is_labeled_domain(d0.domain):
        raise DomainMismatchError("bayes_error needs a labeled domain (elements end in +-1)")
    pos: dict = {}
    neg: dict = {}
    for el, w in zip(d0.domain.elements, d0.weights):
        base, label = _split_labeled(el)
        (pos if label == 1 else neg)[base] = (pos if label == 1 else neg).get(base, 0.0) + float(w)
    total = 0.0
    for base in set(pos) | set(neg):
        total += min(pos.get(base, 0.0), neg.get(base, 0.0))
    return total


def pac_lift(marginal: FiniteDistribution, target) -> FiniteDistribution:
    """Lift a marginal P on Z and a target f: Z -> {-1,+1} to a labeled joint.

    The lifted distribution puts weight P(z) on (z, f(z)) and 0 on
    (z, -f(z)). The labeled domain lists, for each z in order, first
    (z, -1) then (z, +1); tuple-valued z is flattened so Line-style points
    (z1, z2) become (z1, z2, b).
    """
    if callable(target):
        f = target
    else:
        table = dict(target)
        f = table.__getitem__
    elements = []
    weights = []
    for z, w in zip(marginal.domain.elements, marginal.weights):
        label = f(z)
        if label not in (-1, 1):
            raise ValueError(f"target must be +-1 valued, got {label!r} at {z!r}")
        prefix = tuple(z) if isinstance(z, tuple) else (z,)
        for b in (-1, 1):
            elements.append(prefix + (b,))
            weights.append(float(w) if b == label else 0.0)
    return FiniteDistribution(FiniteDomain(tuple(elements)), np.array(weights))


# ---------------------------------------------------------------------------
# problem instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """A distribution-family problem instance.

    ``kind`` is one of DECISION / SEARCH / VERIFIABLE / OPTIMIZING / PAC.
    ``validity[f_index, d_index]`` says whether solution f is acceptable for
    distribution d. For VERIFIABLE / PAC / OPTIMIZING kinds every solution f
    has a UNIT-range verify query phi_f and validity is tied to the
    threshold: valid iff D[phi_f] <= threshold (for PAC the threshold is the
    accuracy eps).
    """

    kind: str
    domain: FiniteDomain
    dists: tuple
    solutions: tuple
    validity: np.ndarray
    reference: FiniteDistribution | None = None
    verify: Mapping | None = None
    threshold: float | None = None
    eps: float | None = None

    def __post_init__(self):
        if self.kind not in PROBLEM_KINDS:
            raise ValueError(f"unknown problem kind {self.kind!r}")
        dists = tuple(self.dists)
        object.__setattr__(self, "dists", dists)
        solutions = tuple(self.solutions)
        object.__setattr__(self, "solutions", solutions)
        if not dists:
            raise ValueError("problem needs at least one distribution")
        for d in dists:
            if d.domain != self.domain:
                raise DomainMismatchError("all distributions must live on the problem domain")
        if self.reference is not None and self.reference.domain != self.domain:
            raise DomainMismatchError("reference must live on the problem domain")
        v = np.array(self.validity, dtype=bool, copy=True)
        v.setflags(write=False)
        object.__setattr__(self, "validity", v)
        if v.shape != (len(solutions), len(dists)):
            raise ValueError(
                f"validity matrix shape {v.shape} != (solutions={len(solutions)}, dists={len(dists)})"
            )
        if self.kind == DECISION and self.reference is None:
            raise ValueError("decision problems need a reference distribution")
        if self.kind in (VERIFIABLE, PAC, OPTIMIZING):
            if self.verify is None or self.threshold is None:
                raise ValueError(f"{self.kind} problems need verify queries and a threshold")
            for f in solutions:
                if f not in self.verify:
                    raise ValueError(f"solution {f!r} has no verify query")
                q = self.verify[f]
                if q.range_tag != UNIT:
                    raise ValueError("verify queries must have UNIT range")
                if q.domain != self.domain:
                    raise DomainMismatchError("verify query domain mismatch")
            # validity must agree with the threshold semantics
            for fi, f in enumerate(solutions):
                vals = np.array([d.expectation(self.verify[f]) for d in dists])
                expected = vals <= self.threshold + 1e-12
                if not np.array_equal(expected, v[fi]):
                    raise ValueError(
                        f"validity row for solution {f!r} disagrees with threshold semantics"
                    )

    # -- convenience views -------------------------------------------------

    @property
    def n_dists(self) -> int:
        return len(self.dists)

    @property
    def n_solutions(self) -> int:
        return len(self.solutions)

    def solution_index(self, f) -> int:
        try:
            return self.solutions.index(f)
        except ValueError:
            raise KeyError(f"unknown solution {f!r}") from None

    def valid_solution_indices(self, dist_index: int) -> np.ndarray:
        """Indices of solutions acceptable for dists[dist_index] (the set Z(D))."""
        return np.flatnonzero(self.validity[:, dist_index])

    def solved_dist_indices(self, solution_index: int) -> np.ndarray:
        """Indices of distributions for which this solution is acceptable (Z_f)."""
        return np.flatnonzero(self.validity[solution_index, :])

    @classmethod
    def with_threshold_validity(
        cls,
        kind: str,
        domain: FiniteDomain,
        dists: Sequence[FiniteDistribution],
        solutions: Sequence,
        verify: Mapping,
        threshold: float,
        reference: FiniteDistribution | None = None,
        eps: float | None = None,
    ) -> "ProblemSpec":
        """Build a spec whose validity matrix is derived from the threshold rule."""
        v = np.zeros((len(solutions), len(dists)), dtype=bool)
        for fi, f in enumerate(solutions):
            vals = np.array([d.expectation(verify[f]) for d in dists])
            v[fi] = vals <= threshold + 1e-12
        return cls(
            kind=kind,
            domain=domain,
            dists=tuple(dists),
            solutions=tuple(solutions),
            validity=v,
            reference=reference,
            verify=dict(verify),
            threshold=threshold,
            eps=eps,
        )
