"""Kernel families and the dual (kernelized) perceptron engine.

The dual engine never materializes weight vectors. Its hypothesis is a list of
update-round examples with integer counts, scored as

    score(x) = sum_s alpha_s * label_s * K(x_s, x)

Prediction at round t only sees updates from rounds before t. For the linear
kernel the run reproduces the primal engine's decisions exactly. The quantity
``kernel_trace`` sums K(x_t, x_t) over update rounds and plays the role the
squared-norm sum plays for primal traces.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .engine import UpdateRule, predicted_label
from .stream import LabeledExample, Stream


class KernelFamily(str, Enum):
    LINEAR = "linear"
    POLYNOMIAL = "polynomial"
    RBF = "rbf"


@dataclass(frozen=True)
class KernelSpec:
    """A positive semidefinite kernel: linear, polynomial, or Gaussian RBF.

    Polynomial kernels compute ``(x . z + offset)^degree`` with offset >= 0 and
    integer degree >= 1. RBF kernels compute ``exp(-||x - z||^2 / (2 width^2))``
    with width > 0, so their diagonal is identically 1.
    """

    family: KernelFamily = KernelFamily.LINEAR
    offset: float = 0.0
    degree: int = 1
    width: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily(self.family))
        if self.family is KernelFamily.POLYNOMIAL:
            if not (np.isfinite(self.offset) and self.offset >= 0):
                raise ValueError(f"polynomial offset must be >= 0, got {self.offset!r}")
            if int(self.degree) != self.degree or self.degree < 1:
                raise ValueError(f"polynomial degree must be an integer >= 1, got {self.degree!r}")
            object.__setattr__(self, "degree", int(self.degree))
        if self.family is KernelFamily.RBF and not (np.isfinite(self.width) and self.width > 0):
            raise ValueError(f"rbf width must be > 0, got {self.width!r}")

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls(KernelFamily.LINEAR)

    @classmethod
    def polynomial(cls, offset: float = 0.0, degree: int = 2) -> "KernelSpec":
        return cls(KernelFamily.POLYNOMIAL, offset=offset, degree=degree)

    @classmethod
    def rbf(cls, width: float = 1.0) -> "KernelSpec":
        return cls(KernelFamily.RBF, width=width)

    def gram(self, A: np.ndarray, B: np.ndarray | None = None) -> np.ndarray:
        """Kernel matrix K[i, j] = K(A[i], B[j]); B defaults to A."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = A if B is None else np.atleast_2d(np.asarray(B, dtype=float))
        if self.family is KernelFamily.LINEAR:
            return A @ B.T
        if self.family is KernelFamily.POLYNOMIAL:
            return (A @ B.T + self.offset) ** self.degree
        sq = (
            np.einsum("ij,ij->i", A, A)[:, None]
            + np.einsum("ij,ij->i", B, B)[None, :]
            - 2.0 * (A @ B.T)
        )
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-sq / (2.0 * self.width**2))

    def diag(self, A: np.ndarray) -> np.ndarray:
        """K(x, x) for each row of A."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        sq = np.einsum("ij,ij->i", A, A)
        if self.family is KernelFamily.LINEAR:
            return sq
        if self.family is KernelFamily.POLYNOMIAL:
            return (sq + self.offset) ** self.degree
        return np.ones(A.shape[0])

    def describe(self) -> str:
        if self.family is KernelFamily.LINEAR:
            return "linear"
        if self.family is KernelFamily.POLYNOMIAL:
            return f"polynomial(offset={self.offset}, degree={self.degree})"
        return f"rbf(width={self.width})"


@dataclass(frozen=True)
class DualHypothesis:
    """Kernel expansion over support examples with integer update counts."""

    examples: tuple[LabeledExample, ...]
    alphas: tuple[int, ...]
    kernel: KernelSpec

    def __post_init__(self):
        if len(self.examples) != len(self.alphas):
            raise ValueError("examples and alphas must align")
        if any(int(a) != a or a < 0 for a in self.alphas):
            raise ValueError("alphas must be non-negative integers")
        object.__setattr__(self, "alphas", tuple(int(a) for a in self.alphas))

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if not self.examples:
            return np.zeros(X.shape[0])
        S = np.stack([ex.features for ex in self.examples])
        coef = np.array([a * ex.label for a, ex in zip(self.alphas, self.examples)], dtype=float)
        return self.kernel.gram(X, S) @ coef

    def score(self, x: np.ndarray) -> float:
        return float(self.decision_function(np.atleast_2d(x))[0])


@dataclass(frozen=True)
class KernelRound:
    """State observed at one dual round, before any update."""

    score: float
    predicted: int
    updated: bool
    label: int
    self_similarity: float


@dataclass(frozen=True)
class KernelTrace:
    """Complete record of one kernelized online pass."""

    per_round: tuple[KernelRound, ...]
    update_rounds: tuple[int, ...]
    support: DualHypothesis
    mistake_count: int
    kernel_trace: float
    radius: float
    kernel: KernelSpec
    update_rule: UpdateRule = UpdateRule.NON_POSITIVE_SCORE

    @property
    def rounds(self) -> int:
        return len(self.per_round)

    @property
    def sq_norm_sum(self) -> float:
        """Feature-space analogue of the primal squared-norm sum."""
        return self.kernel_trace

    def update_indices(self) -> np.ndarray:
        return np.asarray(self.update_rounds, dtype=np.int64) - 1

    def hypothesis_at(self, round_index: int) -> DualHypothesis:
        """Dual hypothesis entering 1-based round ``round_index``."""
        if not 1 <= round_index <= self.rounds + 1:
            raise ValueError(f"round index out of range: {round_index}")
        keep = [i for i, t in enumerate(self.update_rounds) if t < round_index]
        return DualHypothesis(
            examples=tuple(self.support.examples[i] for i in keep),
            alphas=tuple(self.support.alphas[i] for i in keep),
            kernel=self.kernel,
        )


def run_kernel(
    stream: Stream,
    kernel: KernelSpec,
    update_rule: UpdateRule = UpdateRule.NON_POSITIVE_SCORE,
) -> KernelTrace:
    """Run one kernelized online pass over ``stream``.

    Scores accumulate over the support built so far, in update order. The
    default rule matches the primal engine, updating on label*score <= 0.
    """
    X, y = stream.X, stream.y
    strict = UpdateRule(update_rule) is UpdateRule.STRICT_SIGN_MISMATCH
    diag = kernel.diag(X)

    records = []
    update_rounds: list[int] = []
    support_idx: list[int] = []
    coef: list[float] = []  # alpha_s * label_s, in update order
    kernel_trace = 0.0
    for t in range(len(stream)):
        if support_idx:
            k_row = kernel.gram(X[t][None, :], X[support_idx])[0]
            score = float(k_row @ np.asarray(coef))
        else:
            score = 0.0
        label = int(y[t])
        pred = predicted_label(score)
        updated = (pred != label) if strict else (label * score <= 0)
        records.append(
            KernelRound(
                score=score,
                predicted=pred,
                updated=updated,
                label=label,
                self_similarity=float(diag[t]),
            )
        )
        if updated:
            update_rounds.append(t + 1)
            support_idx.append(t)
            coef.append(float(label))
            kernel_trace += float(diag[t])

    support = DualHypothesis(
        examples=tuple(stream[i] for i in support_idx),
        alphas=tuple(1 for _ in support_idx),
        kernel=kernel,
    )
    return KernelTrace(
        per_round=tuple(records),
        update_rounds=tuple(update_rounds),
        support=support,
        mistake_count=len(update_rounds),
        kernel_trace=kernel_trace,
        radius=float(np.sqrt(diag.max())),
        kernel=kernel,
        update_rule=UpdateRule(update_rule),
    )
