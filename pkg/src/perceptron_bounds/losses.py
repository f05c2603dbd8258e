"""Margin losses with certified admissibility data.

An admissible loss is convex, non-negative, strictly positive at 0, and
Lipschitz with constant ``gamma`` on its declared domain. The bound evaluators
consume the triple (evaluate, gamma, phi0); ``check_admissibility`` verifies
all four conditions numerically on a grid.

Built-in constructors:

* ``make_hinge(rho)``: max(0, 1 - x/rho), globally (1/rho)-Lipschitz, phi0 = 1.
* ``make_squared_hinge(rho, radius)``: max(0, 1 - x/rho)^2 on |x| <= radius.
  Its slope magnitude peaks at -radius, so the exact domain Lipschitz constant
  is 2*(rho + radius)/rho^2; that is what gets stored.
* ``make_huber(delta, offset)``: Huber penalty of (offset - x), delta-Lipschitz
  everywhere, positive at 0 for any offset != 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InfeasibleWitnessError

REL_TOL = 1e-9
ABS_TOL = 1e-12
FEASIBILITY_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class AdmissibleLoss:
    """A margin loss bundled with its admissibility certificate data.

    ``domain`` is the closed interval on which ``gamma`` is claimed; infinite
    endpoints mean the claim is global. ``derivative`` is an optional
    subgradient selection used by the bound optimizer.
    """

    name: str
    gamma: float
    phi0: float
    evaluate: Callable
    derivative: Callable | None = None
    domain: tuple[float, float] = (-np.inf, np.inf)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"gamma must be a positive real, got {self.gamma!r}")
        if not (np.isfinite(self.phi0) and self.phi0 > 0):
            raise ValueError(f"phi0 must be strictly positive, got {self.phi0!r}")
        lo, hi = self.domain
        if not lo < hi:
            raise ValueError(f"domain must be a non-empty interval, got {self.domain!r}")


def make_hinge(rho: float) -> AdmissibleLoss:
    """Hinge loss at margin scale rho: max(0, 1 - x/rho)."""
    if not (np.isfinite(rho) and rho > 0):
        raise ValueError(f"rho must be a positive real, got {rho!r}")

    def evaluate(x):
        return np.maximum(0.0, 1.0 - np.asarray(x, dtype=float) / rho)

    def derivative(x):
        # subgradient 0 at the kink x == rho
        x = np.asarray(x, dtype=float)
        return np.where(x < rho, -1.0 / rho, 0.0)

    return AdmissibleLoss(
        name="hinge",
        gamma=1.0 / rho,
        phi0=1.0,
        evaluate=evaluate,
        derivative=derivative,
        params={"rho": rho},
    )


def make_squared_hinge(rho: float, radius: float) -> AdmissibleLoss:
    """Squared hinge max(0, 1 - x/rho)^2, certified on |x| <= radius."""
    if not (np.isfinite(rho) and rho > 0):
        raise ValueError(f"rho must be a positive real, got {rho!r}")
    if not (np.isfinite(radius) and radius > 0):
        raise ValueError(f"radius must be a positive real, got {radius!r}")

    def evaluate(x):
        h = np.maximum(0.0, 1.0 - np.asarray(x, dtype=float) / rho)
        return h * h

    def derivative(x):
        h = np.maximum(0.0, 1.0 - np.asarray(x, dtype=float) / rho)
        return -2.0 * h / rho

    # exact max slope on [-radius, radius], attained at -radius
    gamma = 2.0 * (rho + radius) / rho**2
    return AdmissibleLoss(
        name="squared_hinge",
        gamma=gamma,
        phi0=1.0,
        evaluate=evaluate,
        derivative=derivative,
        domain=(-radius, radius),
        params={"rho": rho, "radius": radius},
    )


def make_huber(delta: float, offset: float = 1.0) -> AdmissibleLoss:
    """Huber penalty of (offset - x): quadratic near zero, linear in the tails."""
    if not (np.isfinite(delta) and delta > 0):
        raise ValueError(f"delta must be a positive real, got {delta!r}")
    if not np.isfinite(offset):
        raise ValueError(f"offset must be finite, got {offset!r}")

    def _huber(z):
        z = np.asarray(z, dtype=float)
        az = np.abs(z)
        return np.where(az <= delta, 0.5 * z * z, delta * (az - 0.5 * delta))

    def evaluate(x):
        return _huber(offset - np.asarray(x, dtype=float))

    def derivative(x):
        z = offset - np.asarray(x, dtype=float)
        return -np.clip(z, -delta, delta)

    phi0 = float(_huber(offset))
    if phi0 <= 0:
        raise ValueError("offset 0 makes the loss vanish at the origin; pick offset != 0")
    return AdmissibleLoss(
        name="huber",
        gamma=delta,
        phi0=phi0,
        evaluate=evaluate,
        derivative=derivative,
        params={"delta": delta, "offset": offset},
    )


@dataclass(frozen=True)
class ConditionResult:
    """Outcome of one admissibility condition on the check grid."""

    name: str
    passed: bool
    worst: float
    witness: tuple | None = None


@dataclass(frozen=True)
class AdmissibilityReport:
    """Per-condition verdicts from a grid check."""

    convex: ConditionResult
    non_negative: ConditionResult
    positive_at_zero: ConditionResult
    lipschitz: ConditionResult
    domain: tuple[float, float]
    grid_size: int

    @property
    def passed(self) -> bool:
        return all(
            c.passed
            for c in (self.convex, self.non_negative, self.positive_at_zero, self.lipschitz)
        )

    def failures(self) -> list[str]:
        return [
            c.name
            for c in (self.convex, self.non_negative, self.positive_at_zero, self.lipschitz)
            if not c.passed
        ]


def check_admissibility(
    loss: AdmissibleLoss,
    domain: tuple[float, float],
    grid_size: int = 1001,
) -> AdmissibilityReport:
    """Verify the four admissibility conditions on an evenly spaced grid.

    Midpoint convexity and difference quotients are checked over all grid
    pairs; quotients must not exceed ``loss.gamma`` beyond a 1e-9 relative
    slack. The positivity-at-zero condition evaluates the loss at 0 directly,
    whether or not 0 lies on the grid.
    """
    lo, hi = float(domain[0]), float(domain[1])
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ValueError(f"domain must be a finite non-empty interval, got {domain!r}")
    if grid_size < 3:
        raise ValueError("grid_size must be at least 3")

    grid = np.linspace(lo, hi, grid_size)
    vals = np.asarray(loss.evaluate(grid), dtype=float)
    if vals.shape != grid.shape or not np.all(np.isfinite(vals)):
        raise ValueError("loss evaluation must be finite and elementwise over the grid")

    # non-negativity
    min_idx = int(np.argmin(vals))
    non_negative = ConditionResult(
        name="non_negative",
        passed=bool(vals[min_idx] >= -ABS_TOL),
        worst=float(vals[min_idx]),
        witness=(float(grid[min_idx]),),
    )

    # strict positivity at the origin
    at_zero = float(np.asarray(loss.evaluate(0.0), dtype=float))
    positive_at_zero = ConditionResult(
        name="positive_at_zero",
        passed=bool(at_zero > 0.0),
        worst=at_zero,
        witness=(0.0,),
    )

    # midpoint convexity over all grid pairs
    mids = loss.evaluate((grid[:, None] + grid[None, :]) / 2.0)
    chord = (vals[:, None] + vals[None, :]) / 2.0
    gap = np.asarray(mids, dtype=float) - chord
    allow = REL_TOL * np.maximum(1.0, np.abs(chord)) + ABS_TOL
    viol = gap - allow
    worst_idx = np.unravel_index(int(np.argmax(viol)), viol.shape)
    convex = ConditionResult(
        name="convex",
        passed=bool(viol[worst_idx] <= 0.0),
        worst=float(gap[worst_idx]),
        witness=(float(grid[worst_idx[0]]), float(grid[worst_idx[1]])),
    )

    # difference quotients against gamma
    dv = np.abs(vals[:, None] - vals[None, :])
    dx = np.abs(grid[:, None] - grid[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        quot = np.where(dx > 0, dv / np.where(dx > 0, dx, 1.0), 0.0)
    q_idx = np.unravel_index(int(np.argmax(quot)), quot.shape)
    worst_q = float(quot[q_idx])
    lipschitz = ConditionResult(
        name="lipschitz",
        passed=bool(worst_q <= loss.gamma * (1.0 + REL_TOL) + ABS_TOL),
        worst=worst_q,
        witness=(float(grid[q_idx[0]]), float(grid[q_idx[1]])),
    )

    return AdmissibilityReport(
        convex=convex,
        non_negative=non_negative,
        positive_at_zero=positive_at_zero,
        lipschitz=lipschitz,
        domain=(lo, hi),
        grid_size=grid_size,
    )


@dataclass(frozen=True)
class LossVector:
    """Per-update-round loss values of a witness, with both norms."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1:
            raise ValueError("values must be 1-D")
        if vals.size and (not np.all(np.isfinite(vals)) or np.any(vals < 0)):
            raise ValueError("loss values must be finite and non-negative")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def l1(self) -> float:
        return float(self.values.sum())

    @property
    def l2(self) -> float:
        return float(np.sqrt((self.values * self.values).sum()))


def witness_margins(trace, stream, u) -> tuple[np.ndarray, float]:
    """Margins of witness ``u`` on update rounds, plus the witness norm.

    For primal traces ``u`` is a weight vector and margins are
    ``label * (u . x)``. For kernel traces ``u`` is a coefficient vector over
    update rounds: the witness is ``sum_j u_j phi(x_j)`` in feature space, its
    norm comes from the Gram matrix, and margins use kernel scores.
    """
    idx = trace.update_indices()
    y_upd = stream.y[idx]
    if hasattr(trace, "kernel"):
        beta = np.asarray(u, dtype=float)
        if beta.shape != (len(idx),):
            raise ValueError(
                f"kernel witness must have one coefficient per update round "
                f"({len(idx)}), got shape {beta.shape}"
            )
        gram = trace.kernel.gram(stream.X[idx])
        norm = float(np.sqrt(max(0.0, beta @ gram @ beta)))
        margins = y_upd * (gram @ beta)
    else:
        u = np.asarray(u, dtype=float)
        if u.shape != (stream.dim,):
            raise ValueError(f"witness must have shape ({stream.dim},), got {u.shape}")
        norm = float(np.linalg.norm(u))
        margins = y_upd * (stream.X[idx] @ u)
    return margins, norm


def require_feasible(norm: float) -> None:
    if not norm <= 1.0 + FEASIBILITY_SLACK:
        raise InfeasibleWitnessError(
            f"witness norm {norm} exceeds the unit ball (slack {FEASIBILITY_SLACK})"
        )


def loss_vector(loss: AdmissibleLoss, u, trace, stream) -> LossVector:
    """Loss values of witness ``u`` at each update round, in round order."""
    margins, norm = witness_margins(trace, stream, u)
    require_feasible(norm)
    values = np.asarray(loss.evaluate(margins), dtype=float)
    return LossVector(values=values)
