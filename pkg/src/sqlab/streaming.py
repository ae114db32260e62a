"""Streaming search: the universal solver driven by raw samples.

Instead of an oracle, the solver sees a stream of samples from the unknown
distribution. Each witness expectation is replaced by an empirical mean of
n_est fresh samples, where

    n_est = ceil((9 / (2 tau^2)) * ln(2 / delta')),
    delta' = delta * tau^2 / (36 * R_KL * q),

(Hoeffding at accuracy tau/3, confidence delta', union-bounded over the at
most ceil(36 R_KL / tau^2) * q estimates a run can make; q = |family| and
R_KL = ln q bounds the KL radius from the uniform mixture).

The state that must persist across stream items is tiny: the update history
— one (distribution index, sign) pair per multiplicative-weights update,
at ceil(log2 q) + 1 bits each — plus a single reused sample counter of
ceil(log2(n_est + 1)) bits. The mixture itself is scratch: it is a
deterministic replay of the history (``replay_weights`` reproduces it
bit-for-bit), so it is charged to peak (working) memory, not to the
persistent budget. The per-run ledger records

    persistent_bits <= T * (ceil(log2 q) + 1) + counter_width,
    samples         <= T * q * n_est,

and the peak adds the 64-bit-per-cell mixture vector, one accumulator, a
sample register, and the witness loop index.
"""

from __future__ import annotations

import math

import numpy as np

from .core import K1, FiniteDistribution, ProblemSpec, mixture
from .errors import StreamExhaustedError
from .solvers import BUDGET_EXCEEDED, SOLVED, margin_cover

__all__ = [
    "SampleStream",
    "stream_requirements",
    "replay_weights",
    "stream_solve",
]


class SampleStream:
    """A capped source of i.i.d. samples (domain indices) from a distribution.

    ``draw_block`` raises StreamExhaustedError once the cap would be
    exceeded — running dry is a different failure mode than answering
    wrongly, and is reported as such.
    """

    def __init__(self, dist: FiniteDistribution, rng: np.random.Generator, limit: int | None = None):
        self.dist = dist
        self.rng = rng
        self.limit = limit
        self.drawn = 0

    def draw_block(self, n: int) -> np.ndarray:
        if self.limit is not None and self.drawn + n > self.limit:
            raise StreamExhaustedError(
                f"stream capped at {self.limit} samples; {self.drawn} drawn, {n} more requested"
            )
        self.drawn += n
        return self.dist.sample_indices(self.rng, n)


def stream_requirements(problem: ProblemSpec, tau: float, delta: float, kl_bound: float | None = None) -> dict:
    """Budgets and widths for a streaming run on this family."""
    q = problem.n_dists
    r_kl = kl_bound if kl_bound is not None else (math.log(q) if q > 1 else 1.0)
    t_budget = math.ceil(36.0 * r_kl / tau**2)
    delta_prime = delta * tau**2 / (36.0 * r_kl * q)
    n_est = math.ceil((9.0 / (2.0 * tau**2)) * math.log(2.0 / delta_prime))
    index_bits = math.ceil(math.log2(q)) if q > 1 else 0
    counter_width = math.ceil(math.log2(n_est + 1))
    return {
        "q": q,
        "r_kl": r_kl,
        "t_budget": t_budget,
        "delta_prime": delta_prime,
        "n_est": n_est,
        "index_bits": index_bits,
        "counter_width": counter_width,
        "persistent_bound": t_budget * (index_bits + 1) + counter_width,
        "samples_bound": t_budget * q * n_est,
    }


def _mw_apply(weights: np.ndarray, phi: np.ndarray, sign: float, gamma: float) -> np.ndarray:
    w = weights * (1.0 - gamma * sign * phi)
    return w / w.sum()


def replay_weights(problem: ProblemSpec, tau: float, history) -> np.ndarray:
    """Recompute the mixture from the persistent history alone.

    Each entry is (distribution index, sign); the witness is the sign
    pattern of (that distribution - current mixture), so the whole
    trajectory is a deterministic function of the history. The streaming
    solver's incremental mixture must match this bit-for-bit, which is what
    licenses charging the mixture to scratch rather than persistent memory.
    """
    gamma = tau / 3.0
    w = mixture(list(problem.dists)).weights.copy()
    for target, sign in history:
        diff = problem.dists[target].weights - w
        phi = np.where(diff >= 0, 1.0, -1.0)
        w = _mw_apply(w, phi, sign, gamma)
    return w


def stream_solve(
    problem: ProblemSpec,
    tau: float,
    delta: float,
    stream: SampleStream,
    kl_bound: float | None = None,
) -> dict:
    """Run the sample-driven universal search and account for every bit.

    Returns a report with the outcome ("solved" / "budget_exceeded"), the
    solution, the persistent history, and a memory/sample ledger
    {persistent_bits, peak_bits, samples, persistent_bound, samples_bound,
    within_bound}. StreamExhaustedError propagates when the stream runs dry.
    """
    req = stream_requirements(problem, tau, delta, kl_bound)
    gamma = tau / 3.0
    cover = margin_cover(problem, tau, kappa=K1, randomized=False)
    n_x = len(problem.domain)
    weights = mixture(list(problem.dists)).weights.copy()
    history: list[tuple[int, int]] = []
    estimates = 0
    outcome = None
    solution = None
    details: dict = {}
    while True:
        step = cover(weights)
        triggered = False
        for phi, target in zip(step.queries, step.targets):
            draws = stream.draw_block(req["n_est"])
            est = float(np.mean(phi[draws]))
            estimates += 1
            if abs(float(weights @ phi) - est) > 2.0 * tau / 3.0:
                sign = 1.0 if float(weights @ phi) > est else -1.0
                history.append((int(target), int(sign)))
                weights = _mw_apply(weights, phi, sign, gamma)
                triggered = True
                break
        if not triggered:
            outcome = SOLVED
            f_idx = step.solution_index
            solution = None if f_idx is None else problem.solutions[f_idx]
            if step.unservable:
                details["cover_incomplete"] = list(step.unservable)
            break
        if len(history) >= req["t_budget"]:
            outcome = BUDGET_EXCEEDED
            break
    persistent_bits = len(history) * (req["index_bits"] + 1) + req["counter_width"]
    # scratch: the replayable mixture vector, one accumulator, the sample
    # register, and the witness loop index
    peak_bits = persistent_bits + 64 * n_x + 64
    peak_bits += math.ceil(math.log2(n_x)) if n_x > 1 else 0
    peak_bits += math.ceil(math.log2(problem.n_dists + 1))
    ledger = {
        "persistent_bits": persistent_bits,
        "peak_bits": peak_bits,
        "samples": stream.drawn,
        "estimates": estimates,
        "n_est": req["n_est"],
        "persistent_bound": req["persistent_bound"],
        "samples_bound": req["samples_bound"],
        "within_bound": (
            persistent_bits <= req["persistent_bound"]
            and stream.drawn <= req["samples_bound"]
        ),
    }
    return {
        "outcome": outcome,
        "solution": solution,
        "updates": len(history),
        "history": history,
        "ledger": ledger,
        **details,
    }
