"""Mistake-bound evaluators and the witness optimizer.

Every evaluator consumes a trace produced with eta=1, zero initial weights,
and the non-positive-score update rule (anything else is refused), plus the
stream it came from and a feasible witness. Each returns a BoundReport whose
``value`` provably dominates the observed mistake count:

* ``novikoff_bound``: (radius/rho)^2 for a witness separating every stream
  point at normalized margin rho.
* ``l1_bound``: loss-sum form ``||L||_1/phi0 + (gamma/phi0) sqrt(sum ||x||^2)``
  or the radius form ``(gamma r/phi0 + sqrt(||L||_1/phi0))^2`` for any
  admissible loss.
* ``l2_bound``: hinge-specific forms built from ``||L||_2``.

Kernel traces are accepted everywhere: the witness is then a coefficient
vector over update rounds, its norm is taken in feature space via the Gram
matrix, and ``kernel_trace`` substitutes the squared-norm sum.

``optimize_bound`` searches for a small bound value with a projected
subgradient descent on the witness inside the unit ball, across a grid of
scale parameters. Any iterate it evaluates is a feasible witness, so the
returned value is a certified bound regardless of convergence.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .engine import _require_canonical
from .errors import InfeasibleWitnessError
from .losses import (
    ABS_TOL,
    REL_TOL,
    AdmissibleLoss,
    make_hinge,
    make_huber,
    make_squared_hinge,
    require_feasible,
    witness_margins,
)

L1_BOUND_NAMES = (
    "l1_general",
    "l1_general_radius",
    "l1_hinge",
    "l1_hinge_radius",
    "l1_sq_hinge",
    "l1_sq_hinge_radius",
)
L2_BOUND_NAMES = ("l2_first", "l2_radius")
BOUND_NAMES = ("novikoff",) + L1_BOUND_NAMES + L2_BOUND_NAMES


class BoundForm(str, Enum):
    GENERAL = "general"
    FIRST = "first"
    RADIUS = "radius"


class Regime(str, Enum):
    L2_TIGHTER = "L2Tighter"
    L1_TIGHTER = "L1Tighter"
    MIXED = "Mixed"


@dataclass(frozen=True)
class BoundReport:
    """One certified bound evaluation."""

    bound_name: str
    value: float
    witness_u: np.ndarray
    witness_scale: float
    mistake_count: int
    valid: bool

    def __post_init__(self):
        u = np.asarray(self.witness_u, dtype=float).copy()
        u.flags.writeable = False
        object.__setattr__(self, "witness_u", u)


@dataclass(frozen=True)
class NormComparison:
    """Hinge loss-vector norms of one witness and the implied regime."""

    l1: float
    l2_squared: float
    regime: Regime


def _dominates(value: float, mistakes: int) -> bool:
    return value >= mistakes - (REL_TOL * mistakes + ABS_TOL)


@lru_cache(maxsize=1024)
def _probe_loss(loss: AdmissibleLoss, lo: float, hi: float) -> None:
    """Cheap admissibility screen; raises on clear violations."""
    grid = np.linspace(lo, hi, 9)
    vals = np.asarray(loss.evaluate(grid), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"loss {loss.name!r} is not finite on [{lo}, {hi}]")
    if np.any(vals < -ABS_TOL):
        raise ValueError(f"loss {loss.name!r} takes negative values; not admissible")
    at_zero = float(np.asarray(loss.evaluate(0.0), dtype=float))
    if not at_zero > 0.0:
        raise ValueError(f"loss {loss.name!r} vanishes at 0; not admissible")
    if abs(at_zero - loss.phi0) > REL_TOL * max(1.0, abs(loss.phi0)) + ABS_TOL:
        raise ValueError(
            f"loss {loss.name!r} declares phi0={loss.phi0} but evaluates to {at_zero} at 0"
        )
    mids = np.asarray(loss.evaluate((grid[:, None] + grid[None, :]) / 2.0), dtype=float)
    chord = (vals[:, None] + vals[None, :]) / 2.0
    if np.any(mids > chord + REL_TOL * np.maximum(1.0, np.abs(chord)) + ABS_TOL):
        raise ValueError(f"loss {loss.name!r} fails midpoint convexity; not admissible")
    dv = np.abs(vals[:, None] - vals[None, :])
    dx = np.abs(grid[:, None] - grid[None, :])
    limit = loss.gamma * (1.0 + REL_TOL) * dx + ABS_TOL
    if np.any(dv > limit):
        raise ValueError(
            f"loss {loss.name!r} exceeds its Lipschitz constant {loss.gamma} on [{lo}, {hi}]"
        )


def _screen_loss(loss: AdmissibleLoss, radius: float) -> None:
    """Reject losses that are clearly inadmissible or uncertified on the data range."""
    lo, hi = loss.domain
    margin_tol = REL_TOL * radius + ABS_TOL
    if lo > -radius + margin_tol or hi < radius - margin_tol:
        raise ValueError(
            f"loss {loss.name!r} is certified on [{lo}, {hi}] but witness margins "
            f"range over [-{radius}, {radius}]"
        )
    probe_lo = max(lo, -2.0 * radius - 1.0)
    probe_hi = min(hi, 2.0 * radius + 1.0)
    if not probe_lo < probe_hi:
        probe_lo, probe_hi = -radius, radius
    _probe_loss(loss, float(probe_lo), float(probe_hi))


def _l1_name(loss: AdmissibleLoss, form: BoundForm) -> str:
    base = {"hinge": "l1_hinge", "squared_hinge": "l1_sq_hinge"}.get(loss.name, "l1_general")
    return base + ("_radius" if form is BoundForm.RADIUS else "")


def _l1_value(l1: float, loss: AdmissibleLoss, sq_norm_sum: float, radius: float, form: BoundForm) -> float:
    if form is BoundForm.GENERAL:
        return l1 / loss.phi0 + (loss.gamma / loss.phi0) * float(np.sqrt(sq_norm_sum))
    return (loss.gamma * radius / loss.phi0 + float(np.sqrt(l1 / loss.phi0))) ** 2


def _l2_value(l2: float, rho: float, sq_norm_sum: float, radius: float, form: BoundForm) -> float:
    if form is BoundForm.FIRST:
        return (l2 / 2.0 + float(np.sqrt(l2 * l2 / 4.0 + np.sqrt(sq_norm_sum) / rho))) ** 2
    return (radius / rho + l2) ** 2


def novikoff_bound(trace, stream, v, rho: float) -> BoundReport:
    """Separability bound (radius/rho)^2 for a witness with margin rho.

    ``v`` may be any non-zero vector (a coefficient vector over update rounds
    for kernel traces); margins are normalized by its norm and must reach
    ``rho`` on every stream point, else an InfeasibleWitnessError names the
    first violating round.
    """
    _require_canonical(trace)
    if not (np.isfinite(rho) and rho > 0):
        raise ValueError(f"rho must be a positive real, got {rho!r}")
    v = np.asarray(v, dtype=float)
    if hasattr(trace, "kernel"):
        idx = trace.update_indices()
        if v.shape != (len(idx),):
            raise ValueError(
                f"kernel witness must have one coefficient per update round "
                f"({len(idx)}), got shape {v.shape}"
            )
        gram_ii = trace.kernel.gram(stream.X[idx])
        norm = float(np.sqrt(max(0.0, v @ gram_ii @ v)))
        if norm <= 0:
            raise ValueError("witness must be non-zero")
        margins = stream.y * (trace.kernel.gram(stream.X, stream.X[idx]) @ v) / norm
        witness = v / norm
    else:
        norm = float(np.linalg.norm(v))
        if norm <= 0:
            raise ValueError("witness must be non-zero")
        margins = stream.y * (stream.X @ v) / norm
        witness = v / norm

    floor = rho * (1.0 - REL_TOL) - ABS_TOL
    bad = np.nonzero(margins < floor)[0]
    if bad.size:
        t = int(bad[0]) + 1
        raise InfeasibleWitnessError(
            f"margin assumption fails at round {t}: normalized margin "
            f"{float(margins[bad[0]])} < rho {rho}"
        )
    value = (trace.radius / rho) ** 2
    return BoundReport(
        bound_name="novikoff",
        value=float(value),
        witness_u=witness,
        witness_scale=float(rho),
        mistake_count=trace.mistake_count,
        valid=_dominates(float(value), trace.mistake_count),
    )


def l1_bound(trace, stream, loss: AdmissibleLoss, u, form: BoundForm = BoundForm.GENERAL) -> BoundReport:
    """Loss-sum mistake bound for any admissible loss.

    ``form=GENERAL`` evaluates ``||L||_1/phi0 + (gamma/phi0) sqrt(sum ||x||^2)``;
    ``form=RADIUS`` evaluates ``(gamma r / phi0 + sqrt(||L||_1/phi0))^2``.
    """
    _require_canonical(trace)
    form = BoundForm(form)
    if form is BoundForm.FIRST:
        raise ValueError("l1_bound accepts forms 'general' and 'radius'")
    _screen_loss(loss, trace.radius)
    margins, norm = witness_margins(trace, stream, u)
    require_feasible(norm)
    l1 = float(np.sum(loss.evaluate(margins))) if margins.size else 0.0
    value = _l1_value(l1, loss, trace.sq_norm_sum, trace.radius, form)
    scale = float(loss.params.get("rho", loss.gamma))
    return BoundReport(
        bound_name=_l1_name(loss, form),
        value=float(value),
        witness_u=np.asarray(u, dtype=float),
        witness_scale=scale,
        mistake_count=trace.mistake_count,
        valid=_dominates(float(value), trace.mistake_count),
    )


def l2_bound(trace, stream, rho: float, u, form: BoundForm = BoundForm.FIRST) -> BoundReport:
    """Hinge-specific mistake bound built from the loss-vector 2-norm.

    ``form=FIRST`` evaluates
    ``(||L||_2/2 + sqrt(||L||_2^2/4 + sqrt(sum ||x||^2)/rho))^2``;
    ``form=RADIUS`` evaluates ``(r/rho + ||L||_2)^2``.
    """
    _require_canonical(trace)
    form = BoundForm(form)
    if form is BoundForm.GENERAL:
        raise ValueError("l2_bound accepts forms 'first' and 'radius'")
    if not (np.isfinite(rho) and rho > 0):
        raise ValueError(f"rho must be a positive real, got {rho!r}")
    loss = make_hinge(rho)
    margins, norm = witness_margins(trace, stream, u)
    require_feasible(norm)
    vals = np.asarray(loss.evaluate(margins), dtype=float)
    l2 = float(np.sqrt(np.sum(vals * vals))) if vals.size else 0.0
    value = _l2_value(l2, rho, trace.sq_norm_sum, trace.radius, form)
    return BoundReport(
        bound_name="l2_first" if form is BoundForm.FIRST else "l2_radius",
        value=float(value),
        witness_u=np.asarray(u, dtype=float),
        witness_scale=float(rho),
        mistake_count=trace.mistake_count,
        valid=_dominates(float(value), trace.mistake_count),
    )


def compare_norms(trace, stream, rho: float, u) -> NormComparison:
    """Classify which norm form is tighter for this witness's hinge losses.

    Elementwise, ``v^2 <= v`` iff ``v <= 1`` and ``v^2 >= v`` iff ``v >= 1 or
    v == 0``; the regime is L2Tighter when every per-round loss satisfies the
    former, L1Tighter when every one satisfies the latter, Mixed otherwise.
    """
    _require_canonical(trace)
    if not (np.isfinite(rho) and rho > 0):
        raise ValueError(f"rho must be a positive real, got {rho!r}")
    loss = make_hinge(rho)
    margins, norm = witness_margins(trace, stream, u)
    require_feasible(norm)
    vals = np.asarray(loss.evaluate(margins), dtype=float)
    l1 = float(vals.sum())
    l2_sq = float(np.sum(vals * vals))
    if np.all(vals <= 1.0):
        regime = Regime.L2_TIGHTER
    elif np.all((vals >= 1.0) | (vals == 0.0)):
        regime = Regime.L1_TIGHTER
    else:
        regime = Regime.MIXED
    return NormComparison(l1=l1, l2_squared=l2_sq, regime=regime)


def _loss_derivative(loss: AdmissibleLoss, margins: np.ndarray) -> np.ndarray:
    if loss.derivative is not None:
        return np.asarray(loss.derivative(margins), dtype=float)
    h = 1e-6 * np.maximum(1.0, np.abs(margins))
    lo = np.asarray(loss.evaluate(margins - h), dtype=float)
    hi = np.asarray(loss.evaluate(margins + h), dtype=float)
    return (hi - lo) / (2.0 * h)


def optimize_bound(
    trace,
    stream,
    bound_name: str,
    loss_family=None,
    rho_grid=None,
    iters: int = 200,
    seed: int = 0,
) -> BoundReport:
    """Search for a small bound value over scales and unit-ball witnesses.

    For each scale in ``rho_grid`` (default: 25 log-spaced points spanning
    [0.01 r, 100 r]) a projected subgradient descent runs from two starts, the
    normalized final weights and a random unit vector, with step 1/sqrt(k).
    The best value over every evaluated iterate and scale wins; ties prefer
    the smaller scale. The report always re-evaluates through the public
    bound, so it is certified even if the descent never converged.

    ``loss_family`` maps a grid scale to an AdmissibleLoss. It defaults to the
    family named by ``bound_name`` (hinge, squared hinge with the trace
    radius, or Huber with the scale as its slope cap for the general names)
    and must be omitted for the l2 bounds, which fix the hinge loss.
    """
    _require_canonical(trace)
    if bound_name == "novikoff":
        raise ValueError("novikoff is a feasibility check, not an optimizable objective")
    if bound_name not in L1_BOUND_NAMES + L2_BOUND_NAMES:
        raise ValueError(f"unknown bound name {bound_name!r}")
    is_l2 = bound_name in L2_BOUND_NAMES
    if is_l2 and loss_family is not None:
        raise ValueError("the l2 bounds fix the hinge loss; drop loss_family")
    form = BoundForm.RADIUS if bound_name.endswith("_radius") else (
        BoundForm.FIRST if is_l2 else BoundForm.GENERAL
    )
    if loss_family is None and not is_l2:
        if bound_name.startswith("l1_hinge"):
            loss_family = make_hinge
        elif bound_name.startswith("l1_sq_hinge"):
            loss_family = lambda rho: make_squared_hinge(rho, trace.radius)
        else:
            loss_family = make_huber

    radius = trace.radius
    if not radius > 0:
        raise ValueError("trace radius must be positive")
    if rho_grid is None:
        rho_grid = np.geomspace(1e-2 * radius, 1e2 * radius, 25)
    rho_grid = np.sort(np.asarray(rho_grid, dtype=float))
    if rho_grid.size == 0 or not np.all(np.isfinite(rho_grid)) or np.any(rho_grid <= 0):
        raise ValueError("rho_grid must contain positive finite scales")
    # ascending grid plus strict improvement comparisons break ties toward smaller scales
    if iters < 0:
        raise ValueError("iters must be non-negative")

    idx = trace.update_indices()
    y_upd = stream.y[idx].astype(float)
    kernelized = hasattr(trace, "kernel")
    if kernelized:
        feats = trace.kernel.gram(stream.X[idx])  # margins = y * (G beta)
        dim = len(idx)
        warm = y_upd.copy()
    else:
        feats = stream.X[idx]
        dim = stream.dim
        warm = np.asarray(trace.final_weights, dtype=float).copy()

    def w_norm(u):
        if kernelized:
            return float(np.sqrt(max(0.0, u @ feats @ u)))
        return float(np.linalg.norm(u))

    def project(u):
        n = w_norm(u)
        return u / n if n > 1.0 else u

    def margins_of(u):
        if idx.size == 0:
            return np.zeros(0)
        return y_upd * (feats @ u)

    warm = project(warm)

    rng = np.random.default_rng(seed)
    best = None  # (value, rho_pos, u, loss_or_rho)
    for rho_pos, rho in enumerate(rho_grid):
        rho = float(rho)
        if is_l2:
            loss = make_hinge(rho)
        else:
            loss = loss_family(rho)
            _screen_loss(loss, radius)

        def value_of(margins):
            vals = np.asarray(loss.evaluate(margins), dtype=float)
            if is_l2:
                l2 = float(np.sqrt(np.sum(vals * vals))) if vals.size else 0.0
                return _l2_value(l2, rho, trace.sq_norm_sum, radius, form)
            l1 = float(vals.sum()) if vals.size else 0.0
            return _l1_value(l1, loss, trace.sq_norm_sum, radius, form)

        def subgrad(margins):
            deriv = _loss_derivative(loss, margins)
            if is_l2:
                vals = np.asarray(loss.evaluate(margins), dtype=float)
                coef = 2.0 * vals * deriv * y_upd
            else:
                coef = deriv * y_upd
            return feats.T @ coef

        start_random = rng.standard_normal(dim)
        n0 = w_norm(start_random)
        start_random = start_random / n0 if n0 > 1e-30 else np.zeros(dim)
        for u in (warm.copy(), start_random):
            val = value_of(margins_of(u))
            if best is None or val < best[0]:
                best = (val, rho_pos, u.copy(), rho)
            for k in range(1, iters + 1):
                g = subgrad(margins_of(u))
                g_norm = np.linalg.norm(g)
                if g_norm <= 1e-30:
                    break
                u = project(u - (1.0 / (np.sqrt(k) * max(1.0, g_norm))) * g)
                val = value_of(margins_of(u))
                if val < best[0]:
                    best = (val, rho_pos, u.copy(), rho)

    _, _, u_best, rho_best = best
    if is_l2:
        return l2_bound(trace, stream, rho_best, u_best, form)
    return l1_bound(trace, stream, loss_family(rho_best), u_best, form)
