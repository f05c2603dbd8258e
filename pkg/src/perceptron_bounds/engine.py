"""Single-pass online perceptron with a replayable trace.

The engine processes a stream once, in order. At round t it scores the example
with the current weights, then applies the configured update rule:

* ``NON_POSITIVE_SCORE``: update whenever ``label * score <= 0`` (score
  comparisons against zero are exact). This is the default and the only rule
  the bound evaluators accept.
* ``STRICT_SIGN_MISMATCH``: update whenever the predicted label differs from
  the true label. Score 0 predicts +1.

On update the weights move by ``eta * label * features``. The trace records
everything needed to replay or audit the run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import TracePreconditionError
from .stream import Stream


class UpdateRule(str, Enum):
    NON_POSITIVE_SCORE = "non_positive_score"
    STRICT_SIGN_MISMATCH = "strict_sign_mismatch"


def predicted_label(score: float) -> int:
    """Label implied by a score; ties at exactly 0 predict +1."""
    return 1 if score >= 0 else -1


@dataclass(frozen=True)
class PerceptronConfig:
    """Run settings: step size, initial weights, and update rule."""

    eta: float = 1.0
    w0: np.ndarray | None = None
    update_rule: UpdateRule = UpdateRule.NON_POSITIVE_SCORE

    def __post_init__(self):
        if not (np.isfinite(self.eta) and self.eta > 0):
            raise ValueError(f"eta must be a positive real, got {self.eta!r}")
        if self.w0 is not None:
            w0 = np.asarray(self.w0, dtype=float)
            if w0.ndim != 1 or not np.all(np.isfinite(w0)):
                raise ValueError("w0 must be a finite 1-D vector")
            w0 = w0.copy()
            w0.flags.writeable = False
            object.__setattr__(self, "w0", w0)
        object.__setattr__(self, "update_rule", UpdateRule(self.update_rule))


@dataclass(frozen=True)
class RoundRecord:
    """State observed at one round, before any update."""

    weight_before: np.ndarray
    score: float
    predicted: int
    updated: bool
    label: int
    feature_sq_norm: float


@dataclass(frozen=True)
class RunTrace:
    """Complete record of one online pass.

    ``update_rounds`` are 1-based round indices; ``sq_norm_sum`` is the sum of
    squared feature norms over update rounds only, while ``radius`` is the max
    feature norm over the whole stream.
    """

    per_round: tuple[RoundRecord, ...]
    update_rounds: tuple[int, ...]
    final_weights: np.ndarray
    mistake_count: int
    radius: float
    sq_norm_sum: float
    eta: float = 1.0
    w0: np.ndarray = field(default=None)
    update_rule: UpdateRule = UpdateRule.NON_POSITIVE_SCORE

    @property
    def rounds(self) -> int:
        return len(self.per_round)

    def weights_before(self) -> np.ndarray:
        """Stacked (T, N) matrix of the hypothesis entering each round."""
        return np.stack([r.weight_before for r in self.per_round])

    def update_indices(self) -> np.ndarray:
        """0-based array view of ``update_rounds`` for feature indexing."""
        return np.asarray(self.update_rounds, dtype=np.int64) - 1


def run_primal(stream: Stream, config: PerceptronConfig | None = None) -> RunTrace:
    """Run one online pass over ``stream`` and return its trace.

    Parameters
    ----------
    stream : Stream
        Non-empty sequence of labeled examples, processed in order.
    config : PerceptronConfig, optional
        Step size, initial weights, and update rule. Defaults to eta=1,
        zero initial weights, NON_POSITIVE_SCORE.
    """
    if config is None:
        config = PerceptronConfig()
    X, y = stream.X, stream.y
    n = stream.dim
    if config.w0 is None:
        w = np.zeros(n)
        w0 = np.zeros(n)
        w0.flags.writeable = False
    else:
        if config.w0.shape[0] != n:
            raise ValueError(
                f"w0 has dimension {config.w0.shape[0]}, stream has {n}"
            )
        w = config.w0.copy()
        w0 = config.w0
    strict = config.update_rule is UpdateRule.STRICT_SIGN_MISMATCH
    eta = config.eta

    records = []
    update_rounds = []
    sq_norm_sum = 0.0
    sq_norms = np.einsum("ij,ij->i", X, X)
    for t in range(len(stream)):
        x = X[t]
        label = int(y[t])
        score = float(w @ x)
        pred = predicted_label(score)
        if strict:
            updated = pred != label
        else:
            updated = label * score <= 0
        wb = w.copy()
        wb.flags.writeable = False
        records.append(
            RoundRecord(
                weight_before=wb,
                score=score,
                predicted=pred,
                updated=updated,
                label=label,
                feature_sq_norm=float(sq_norms[t]),
            )
        )
        if updated:
            update_rounds.append(t + 1)
            sq_norm_sum += float(sq_norms[t])
            w = w + (eta * label) * x

    w.flags.writeable = False
    return RunTrace(
        per_round=tuple(records),
        update_rounds=tuple(update_rounds),
        final_weights=w,
        mistake_count=len(update_rounds),
        radius=float(np.sqrt(sq_norms.max())),
        sq_norm_sum=sq_norm_sum,
        eta=eta,
        w0=w0,
        update_rule=config.update_rule,
    )


@dataclass(frozen=True)
class UpdateIdentityStats:
    """Norm diagnostics of the aggregated update vector.

    ``aggregate_norm`` is the norm of the summed signed updates, which equals
    the final weight norm when eta=1 and w0=0. ``norm_budget`` is the square
    root of the summed squared feature norms over update rounds and always
    dominates ``aggregate_norm``. ``expansion_sum`` accumulates the per-update
    growth ``2*label*score + ||x||^2`` and equals ``final_sq_norm`` exactly.
    """

    aggregate_norm: float
    norm_budget: float
    final_sq_norm: float
    expansion_sum: float


def update_identity_stats(trace: RunTrace) -> UpdateIdentityStats:
    """Diagnostics relating update geometry to final weight growth.

    Only traces produced with eta=1, w0=0, and the NON_POSITIVE_SCORE rule
    are accepted; other settings raise TracePreconditionError.
    """
    _require_canonical(trace)
    final_sq = float(trace.final_weights @ trace.final_weights)
    expansion = 0.0
    for r in trace.per_round:
        if r.updated:
            expansion += 2.0 * r.label * r.score + r.feature_sq_norm
    return UpdateIdentityStats(
        aggregate_norm=float(np.linalg.norm(trace.final_weights)),
        norm_budget=float(np.sqrt(trace.sq_norm_sum)),
        final_sq_norm=final_sq,
        expansion_sum=expansion,
    )


def _require_canonical(trace) -> None:
    """Reject traces outside the certified regime (eta=1, w0=0, non-positive-score)."""
    rule = getattr(trace, "update_rule", None)
    if rule is not UpdateRule.NON_POSITIVE_SCORE:
        raise TracePreconditionError(
            f"trace uses update rule {rule!r}; only non_positive_score is covered"
        )
    eta = getattr(trace, "eta", None)
    if eta is not None and eta != 1.0:
        raise TracePreconditionError(f"trace uses eta={eta}; only eta=1 is covered")
    w0 = getattr(trace, "w0", None)
    if w0 is not None and np.any(w0 != 0):
        raise TracePreconditionError("trace starts from nonzero weights; only w0=0 is covered")
