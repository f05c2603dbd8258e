"""Online-to-batch conversion: hypothesis selection and risk bounds.

The online pass leaves T hypotheses behind (the weights entering each round).
``select_penalized`` picks the one minimizing empirical suffix risk plus a
confidence penalty; ``conversion_rhs`` turns the average online loss into a
bound on the selected hypothesis's risk; ``coverage_experiment`` measures how
often that bound fails against fresh test draws.

All losses here are bounded maps from margins into [0, 1]; out-of-range values
are rejected rather than clamped. Logarithms are natural.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .bounds import BoundForm, l1_bound, l2_bound
from .engine import _require_canonical, run_primal
from .losses import ABS_TOL, AdmissibleLoss


def zero_one_loss(margins):
    """1 where the margin is non-positive, 0 elsewhere.

    On traces from the non-positive-score rule, the online zero-one losses
    are exactly the update indicators, so their average is M_T / T.
    """
    return np.where(np.asarray(margins, dtype=float) <= 0.0, 1.0, 0.0)


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of penalized suffix-risk selection (indices are 1-based)."""

    chosen_index: int
    suffix_risk: float
    penalty: float
    objective_per_index: np.ndarray

    def __post_init__(self):
        obj = np.asarray(self.objective_per_index, dtype=float).copy()
        obj.flags.writeable = False
        object.__setattr__(self, "objective_per_index", obj)


@dataclass(frozen=True)
class GeneralizationReport:
    """A risk bound's right-hand side, with an optional empirical check."""

    bound_name: str
    rhs: float
    empirical_online_loss: float
    test_error_estimate: float | None = None
    holds: bool | None = None


class GeneralizationKind(str, Enum):
    L1 = "l1_gen"
    L2 = "l2_gen"


def _check_delta(delta: float) -> float:
    if not (np.isfinite(delta) and 0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    return float(delta)


def _check_bounded(values: np.ndarray, what: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{what} must be finite")
    if np.any(values < -ABS_TOL) or np.any(values > 1.0 + ABS_TOL):
        lo, hi = float(values.min()), float(values.max())
        raise ValueError(f"{what} must lie in [0, 1], observed range [{lo}, {hi}]")
    return np.clip(values, 0.0, 1.0)


def penalty_terms(rounds: int, delta: float) -> np.ndarray:
    """Confidence penalty sqrt(log(T(T+1)/delta) / (2 (T-i+1))) for i=1..T."""
    delta = _check_delta(delta)
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    log_term = np.log(rounds * (rounds + 1) / delta)
    suffix_len = np.arange(rounds, 0, -1, dtype=float)
    return np.sqrt(log_term / (2.0 * suffix_len))


def penalized_argmin(loss_matrix, delta: float) -> tuple[int, np.ndarray]:
    """Penalized suffix-risk argmin over a precomputed loss matrix.

    ``loss_matrix[i-1, t-1]`` is the loss of the hypothesis entering round i
    on example t; only entries with t >= i participate. Returns the 1-based
    minimizing index (smallest on ties) and the per-index objectives.
    """
    L = _check_bounded(loss_matrix, "loss matrix")
    if L.ndim != 2 or L.shape[0] != L.shape[1] or L.shape[0] == 0:
        raise ValueError(f"loss matrix must be square and non-empty, got {L.shape}")
    T = L.shape[0]
    csum = np.cumsum(L, axis=1)
    totals = csum[:, -1]
    skipped = np.concatenate(([0.0], csum[np.arange(1, T), np.arange(T - 1)]))
    suffix_sums = totals - skipped
    suffix_len = np.arange(T, 0, -1, dtype=float)
    objectives = suffix_sums / suffix_len + penalty_terms(T, delta)
    chosen = int(np.argmin(objectives)) + 1
    return chosen, objectives


def select_penalized(trace, stream, loss, delta: float) -> SelectionResult:
    """Pick the online hypothesis minimizing suffix risk plus penalty.

    ``loss`` maps margins to [0, 1] elementwise (for example ``zero_one_loss``).
    The hypothesis entering round i is scored on examples i..T.
    """
    weights = trace.weights_before()
    margins = stream.y[None, :] * (weights @ stream.X.T)
    L = _check_bounded(loss(margins), "selection losses")
    chosen, objectives = penalized_argmin(L, delta)
    T = len(stream)
    penalties = penalty_terms(T, delta)
    return SelectionResult(
        chosen_index=chosen,
        suffix_risk=float(objectives[chosen - 1] - penalties[chosen - 1]),
        penalty=float(penalties[chosen - 1]),
        objective_per_index=objectives,
    )


def conversion_rhs(trace, stream, loss, delta: float) -> GeneralizationReport:
    """Risk bound from the run's own online losses.

    rhs = (average loss of the round-t hypothesis on example t)
          + 6 sqrt(log(2 (T+1) / delta) / T).
    """
    delta = _check_delta(delta)
    T = trace.rounds
    online_margins = np.array([r.label * r.score for r in trace.per_round])
    online = _check_bounded(loss(online_margins), "online losses")
    empirical = float(online.mean())
    rhs = empirical + 6.0 * float(np.sqrt(np.log(2.0 * (T + 1) / delta) / T))
    return GeneralizationReport(
        bound_name="cbcg",
        rhs=rhs,
        empirical_online_loss=empirical,
    )


def generalization_bound_rhs(
    trace,
    stream,
    kind: GeneralizationKind | str,
    u,
    delta: float,
    loss: AdmissibleLoss | None = None,
    rho: float | None = None,
) -> GeneralizationReport:
    """Witness-based risk bound: scaled mistake bound plus confidence term.

    ``kind="l1_gen"`` divides the general loss-sum bound (requires ``loss``)
    by T; ``kind="l2_gen"`` divides the 2-norm hinge bound (requires ``rho``).
    Both add ``6 sqrt(log(2 (T+1)/delta) / T)``.
    """
    _require_canonical(trace)
    delta = _check_delta(delta)
    kind = GeneralizationKind(kind)
    T = trace.rounds
    if kind is GeneralizationKind.L1:
        if loss is None:
            raise ValueError("l1_gen requires an admissible loss")
        mistake_term = l1_bound(trace, stream, loss, u, BoundForm.GENERAL).value / T
    else:
        if rho is None:
            raise ValueError("l2_gen requires rho")
        mistake_term = l2_bound(trace, stream, rho, u, BoundForm.FIRST).value / T
    additive = 6.0 * float(np.sqrt(np.log(2.0 * (T + 1) / delta) / T))
    return GeneralizationReport(
        bound_name=kind.value,
        rhs=float(mistake_term + additive),
        empirical_online_loss=trace.mistake_count / T,
    )


@dataclass(frozen=True)
class TrialRecord:
    rhs: float
    test_error: float
    violated: bool


@dataclass(frozen=True)
class CoverageResult:
    violation_fraction: float
    records: tuple[TrialRecord, ...]

    @property
    def trials(self) -> int:
        return len(self.records)


def coverage_experiment(
    spec,
    rounds: int,
    delta: float,
    trials: int,
    test_size: int,
    seed: int = 0,
) -> CoverageResult:
    """Estimate how often the conversion bound fails on fresh data.

    Each trial draws ``rounds + test_size`` examples i.i.d. from the generator
    distribution (seeded with ``seed + trial``), trains on the first part,
    selects a hypothesis with the penalized zero-one rule, and compares its
    test error against ``conversion_rhs``. Returns the violated fraction.
    """
    from .data import generate  # local import; data generation is optional elsewhere

    delta = _check_delta(delta)
    if rounds < 1 or test_size < 1 or trials < 1:
        raise ValueError("rounds, test_size, and trials must all be at least 1")
    records = []
    for trial in range(trials):
        drawn, _ = generate(replace(spec, count=rounds + test_size, seed=seed + trial))
        train = drawn[:rounds]
        test = drawn[rounds:]
        trace = run_primal(train)
        selection = select_penalized(trace, train, zero_one_loss, delta)
        w = trace.per_round[selection.chosen_index - 1].weight_before
        test_margins = test.y * (test.X @ w)
        test_error = float(np.mean(zero_one_loss(test_margins)))
        rhs = conversion_rhs(trace, train, zero_one_loss, delta).rhs
        records.append(TrialRecord(rhs=rhs, test_error=test_error, violated=test_error > rhs))
    fraction = sum(r.violated for r in records) / trials
    return CoverageResult(violation_fraction=fraction, records=tuple(records))
