"""Statistical-query oracle simulation.

An :class:`OracleSpec` fixes the oracle kind and its tolerance parameter; an
:class:`AnswerStrategy` decides how answers are produced (exact values,
empirical means over k samples, answers from a fixed reference distribution,
or adversarial answers pinned to the tolerance boundary). A
:class:`OracleSession` binds spec, strategy, and the true distribution, and
records every exchange in a :class:`Transcript` together with a validity
flag checked against the true distribution.

Oracle kinds:

- STAT(tau): queries phi: X -> [-1,1]; any answer within tau of E_D[phi] is
  valid.
- VSTAT(n): queries phi: X -> [0,1]; valid within max(1/n, sqrt(p/n)) of
  p = E_D[phi]. The classical tolerance max(1/n, sqrt(p(1-p)/n)) sits behind
  ``vstat_strict=True``; the default is the slightly weaker form, which is
  what the conversions below are calibrated for.
- VROOT(tau): queries phi: X -> [0,1]; valid when |sqrt(v) - sqrt(p)| <= tau
  (answers below 0 are never valid).
- ONE_STAT(b): evaluates a {0,..,2^b - 1}-valued query on one fresh sample.

``bridge_pair`` / ``bridge_value`` implement the two tolerance conversions
between VSTAT and VROOT: a VROOT(tau) query can be served by a VSTAT(1/tau^2)
answer, and a VSTAT(n) query by a VROOT(1/(3 sqrt(n))) answer, validity
preserved in both directions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from .core import SIGNED, UNIT, FiniteDistribution, QueryFn
from .errors import SqlabError

__all__ = [
    "STAT",
    "VSTAT",
    "VROOT",
    "ONE_STAT",
    "OracleSpec",
    "stat",
    "vstat",
    "vroot",
    "one_stat_spec",
    "tolerance",
    "validate",
    "AnswerStrategy",
    "exact_answers",
    "sampled_answers",
    "reference_answers",
    "edge_answers",
    "answer",
    "one_stat",
    "TranscriptEntry",
    "Transcript",
    "OracleSession",
    "bridge_pair",
    "bridge_value",
]

STAT = "stat"
VSTAT = "vstat"
VROOT = "vroot"
ONE_STAT = "onestat"

#: Absolute slack when checking validity, so answers computed to sit exactly
#: on the tolerance boundary do not flip invalid through float rounding.
VALIDITY_ATOL = 1e-12


@dataclass(frozen=True)
class OracleSpec:
    """Oracle kind plus its tolerance parameter."""

    kind: str
    tau: float | None = None
    n: float | None = None
    bits: int | None = None
    vstat_strict: bool = False

    def __post_init__(self):
        if self.kind == STAT:
            if self.tau is None or not (0 < self.tau <= 2):
                raise ValueError("STAT needs a tolerance tau in (0, 2]")
        elif self.kind == VSTAT:
            if self.n is None or self.n < 1:
                raise ValueError("VSTAT needs a sample-size parameter n >= 1")
        elif self.kind == VROOT:
            if self.tau is None or not (0 < self.tau <= 1):
                raise ValueError("VROOT needs a tolerance tau in (0, 1]")
        elif self.kind == ONE_STAT:
            if self.bits is None or self.bits < 1:
                raise ValueError("ONE_STAT needs a positive bit width")
        else:
            raise ValueError(f"unknown oracle kind {self.kind!r}")

    @property
    def param(self) -> float:
        """The single tolerance parameter recorded in transcripts."""
        if self.kind == STAT or self.kind == VROOT:
            return float(self.tau)
        if self.kind == VSTAT:
            return float(self.n)
        return float(self.bits)


def stat(tau: float) -> OracleSpec:
    return OracleSpec(kind=STAT, tau=tau)


def vstat(n: float, strict: bool = False) -> OracleSpec:
    return OracleSpec(kind=VSTAT, n=n, vstat_strict=strict)


def vroot(tau: float) -> OracleSpec:
    return OracleSpec(kind=VROOT, tau=tau)


def one_stat_spec(bits: int) -> OracleSpec:
    return OracleSpec(kind=ONE_STAT, bits=bits)


def tolerance(spec: OracleSpec, p: float) -> float:
    """The allowed answer deviation at true value p (sqrt scale for VROOT)."""
    if spec.kind == STAT:
        return float(spec.tau)
    if spec.kind == VSTAT:
        if spec.vstat_strict:
            return max(1.0 / spec.n, math.sqrt(max(p * (1.0 - p), 0.0) / spec.n))
        return max(1.0 / spec.n, math.sqrt(max(p, 0.0) / spec.n))
    if spec.kind == VROOT:
        return float(spec.tau)
    raise ValueError(f"tolerance undefined for oracle kind {spec.kind!r}")


def validate(spec: OracleSpec, p: float, v: float) -> bool:
    """Is answer v valid for a query with true value p?"""
    if spec.kind == VROOT:
        if v < 0:
            return False
        return abs(math.sqrt(v) - math.sqrt(max(p, 0.0))) <= spec.tau + VALIDITY_ATOL
    return abs(v - p) <= tolerance(spec, p) + VALIDITY_ATOL


# ---------------------------------------------------------------------------
# answer strategies
# ---------------------------------------------------------------------------

EXACT_MODE = "exact"
SAMPLED_MODE = "sampled"
REFERENCE_MODE = "reference"
EDGE_MODE = "edge"


@dataclass(frozen=True)
class AnswerStrategy:
    """How oracle answers are produced.

    - exact: the true expectation.
    - sampled: an empirical mean over ``samples`` fresh draws.
    - reference: expectations under a fixed other distribution (the classic
      adversary for decision problems — answers are valid until a query
      actually distinguishes).
    - edge: the true value pushed exactly to the tolerance boundary in
      ``direction`` (worst answers that are still valid).
    """

    mode: str
    samples: int | None = None
    reference: FiniteDistribution | None = None
    direction: int = 1

    def __post_init__(self):
        if self.mode not in (EXACT_MODE, SAMPLED_MODE, REFERENCE_MODE, EDGE_MODE):
            raise ValueError(f"unknown strategy mode {self.mode!r}")
        if self.mode == SAMPLED_MODE and (self.samples is None or self.samples < 1):
            raise ValueError("sampled strategy needs a positive sample count")
        if self.mode == REFERENCE_MODE and self.reference is None:
            raise ValueError("reference strategy needs a distribution")
        if self.mode == EDGE_MODE and self.direction not in (-1, 1):
            raise ValueError("edge strategy direction must be +-1")


def exact_answers() -> AnswerStrategy:
    return AnswerStrategy(mode=EXACT_MODE)


def sampled_answers(samples: int) -> AnswerStrategy:
    return AnswerStrategy(mode=SAMPLED_MODE, samples=samples)


def reference_answers(reference: FiniteDistribution) -> AnswerStrategy:
    return AnswerStrategy(mode=REFERENCE_MODE, reference=reference)


def edge_answers(direction: int = 1) -> AnswerStrategy:
    return AnswerStrategy(mode=EDGE_MODE, direction=direction)


def _query_values(dist: FiniteDistribution, query) -> np.ndarray:
    if isinstance(query, QueryFn):
        if query.domain != dist.domain:
            raise SqlabError("query and distribution domains differ")
        return query.values
    values = np.asarray(query, dtype=float)
    if values.shape != dist.weights.shape:
        raise SqlabError("query vector length does not match the domain")
    return values


def _check_range(spec: OracleSpec, query) -> None:
    if spec.kind in (VSTAT, VROOT):
        if isinstance(query, QueryFn):
            if query.range_tag != UNIT:
                raise ValueError(f"{spec.kind} queries must have UNIT range")
        else:
            v = np.asarray(query, dtype=float)
            if np.any(v < -1e-12) or np.any(v > 1 + 1e-12):
                raise ValueError(f"{spec.kind} queries must take values in [0,1]")
    elif spec.kind == STAT:
        v = query.values if isinstance(query, QueryFn) else np.asarray(query, dtype=float)
        if np.any(v < -1 - 1e-12) or np.any(v > 1 + 1e-12):
            raise ValueError("STAT queries must take values in [-1,1]")


def answer(
    spec: OracleSpec,
    strategy: AnswerStrategy,
    dist: FiniteDistribution,
    query,
    rng: np.random.Generator | None = None,
) -> float:
    """One oracle answer (no transcript; see OracleSession for bookkeeping)."""
    _check_range(spec, query)
    values = _query_values(dist, query)
    p = float(dist.weights @ values)
    if strategy.mode == EXACT_MODE:
        return p
    if strategy.mode == SAMPLED_MODE:
        if rng is None:
            raise ValueError("sampled answers need an rng")
        idx = dist.sample_indices(rng, strategy.samples)
        return float(values[idx].mean())
    if strategy.mode == REFERENCE_MODE:
        return float(strategy.reference.weights @ values)
    # edge: push exactly to the boundary, staying valid
    if spec.kind == VROOT:
        root = math.sqrt(max(p, 0.0)) + strategy.direction * spec.tau
        return max(root, 0.0) ** 2
    return p + strategy.direction * tolerance(spec, p)


def one_stat(
    dist: FiniteDistribution,
    values: Sequence[int],
    bits: int,
    rng: np.random.Generator,
) -> int:
    """Evaluate a {0,..,2^b-1}-valued query on one fresh sample from D."""
    vals = np.asarray(values)
    if vals.shape != dist.weights.shape:
        raise SqlabError("query vector length does not match the domain")
    if np.any(vals < 0) or np.any(vals >= (1 << bits)) or not np.issubdtype(vals.dtype, np.integer):
        raise ValueError(f"one-sample query values must be integers in [0, 2^{bits})")
    i = int(dist.sample_indices(rng, 1)[0])
    return int(vals[i])


# ---------------------------------------------------------------------------
# transcripts and sessions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TranscriptEntry:
    index: int
    kind: str
    param: float
    value: float
    valid: bool
    true_value: float


@dataclass
class Transcript:
    """Ordered record of oracle exchanges; __len__ is the query count."""

    entries: list = field(default_factory=list)

    def append(self, entry: TranscriptEntry) -> None:
        if entry.index != len(self.entries):
            raise ValueError("transcript entries must be appended in order")
        self.entries.append(entry)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def valid_fraction(self) -> float:
        if not self.entries:
            return 1.0
        return sum(1 for e in self.entries if e.valid) / len(self.entries)

    def to_jsonl(self, fp: IO[str] | str) -> None:
        """One JSON object per line: {index, kind, param, value, valid}."""
        lines = [
            json.dumps(
                {
                    "index": e.index,
                    "kind": e.kind,
                    "param": e.param,
                    "value": e.value,
                    "valid": e.valid,
                }
            )
            for e in self.entries
        ]
        payload = "\n".join(lines) + ("\n" if lines else "")
        if isinstance(fp, str):
            with open(fp, "w") as handle:
                handle.write(payload)
        else:
            fp.write(payload)


class OracleSession:
    """An oracle bound to one true distribution, strategy, and transcript.

    The session knows the true distribution in order to flag each answer's
    validity; solvers only ever see the answers.
    """

    def __init__(
        self,
        spec: OracleSpec,
        strategy: AnswerStrategy,
        dist: FiniteDistribution,
        rng: np.random.Generator | None = None,
    ):
        self.spec = spec
        self.strategy = strategy
        self.dist = dist
        self.rng = rng
        self.transcript = Transcript()
        self.samples_used = 0

    def query(self, query) -> float:
        values = _query_values(self.dist, query)
        p = float(self.dist.weights @ values)
        v = answer(self.spec, self.strategy, self.dist, query, self.rng)
        if self.strategy.mode == SAMPLED_MODE:
            self.samples_used += self.strategy.samples
        self.transcript.append(
            TranscriptEntry(
                index=len(self.transcript),
                kind=self.spec.kind,
                param=self.spec.param,
                value=v,
                valid=validate(self.spec, p, v),
                true_value=p,
            )
        )
        return v

    def one_sample(self, values: Sequence[int]) -> int:
        if self.spec.kind != ONE_STAT:
            raise ValueError("one_sample needs a ONE_STAT oracle spec")
        if self.rng is None:
            raise ValueError("ONE_STAT needs an rng")
        out = one_stat(self.dist, values, self.spec.bits, self.rng)
        self.samples_used += 1
        self.transcript.append(
            TranscriptEntry(
                index=len(self.transcript),
                kind=ONE_STAT,
                param=float(self.spec.bits),
                value=float(out),
                valid=True,
                true_value=float("nan"),
            )
        )
        return out

    @property
    def query_count(self) -> int:
        return len(self.transcript)


# ---------------------------------------------------------------------------
# the VSTAT <-> VROOT bridge
# ---------------------------------------------------------------------------


def bridge_pair(query_spec: OracleSpec) -> OracleSpec:
    """The backend oracle spec that can serve ``query_spec``'s queries.

    VROOT(tau) queries are served by VSTAT(1/tau^2) answers; VSTAT(n)
    queries by VROOT(1/(3 sqrt(n))) answers.
    """
    if query_spec.kind == VROOT:
        return vstat(1.0 / query_spec.tau**2)
    if query_spec.kind == VSTAT:
        return vroot(1.0 / (3.0 * math.sqrt(query_spec.n)))
    raise ValueError("bridge connects only VSTAT and VROOT specs")


def _anchored(a: float, b: float) -> bool:
    return abs(a - b) <= 1e-9 * max(1.0, abs(a), abs(b))


def bridge_value(query_spec: OracleSpec, backend_spec: OracleSpec, value: float) -> float:
    """Pass a backend answer through to the query side, checking the pairing.

    Any backend-valid answer is query-valid after this conversion:

    - |v - p| <= max(tau^2, sqrt(p) tau)  implies  |sqrt(v) - sqrt(p)| <= tau
      (answers are clipped at 0 first; clipping can only shrink |v - p|), and
    - |sqrt(v) - sqrt(p)| <= tau/3        implies  |v - p| <= max(tau^2, sqrt(p) tau)
      with tau = 1/sqrt(n).
    """
    expected = bridge_pair(query_spec)
    if backend_spec.kind != expected.kind:
        raise ValueError(
            f"backend kind {backend_spec.kind!r} cannot serve {query_spec.kind!r} queries"
        )
    if expected.kind == VSTAT and not _anchored(backend_spec.n, expected.n):
        raise ValueError("backend VSTAT parameter is not 1/tau^2 of the VROOT query")
    if expected.kind == VROOT and not _anchored(backend_spec.tau, expected.tau):
        raise ValueError("backend VROOT tolerance is not 1/(3 sqrt(n)) of the VSTAT query")
    if query_spec.kind == VROOT:
        return max(value, 0.0)
    return value
