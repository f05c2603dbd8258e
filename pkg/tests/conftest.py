"""Shared fixtures and independent reference oracles.

The oracles here recompute expected values with plain Python loops, on purpose
not sharing any code path with the package, so that tests compare two
independent derivations.
"""

import math

import numpy as np
import pytest

from perceptron_bounds import Stream


def reference_run(X, y, eta=1.0, w0=None, strict=False):
    """Plain-loop perceptron oracle.

    Returns (update_rounds 1-based, final weights, per-round scores).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    w = np.zeros(X.shape[1]) if w0 is None else np.asarray(w0, dtype=float).copy()
    updates = []
    scores = []
    for t in range(len(y)):
        s = float(np.dot(w, X[t]))
        scores.append(s)
        if strict:
            predicted = 1 if s >= 0 else -1
            fire = predicted != y[t]
        else:
            fire = y[t] * s <= 0
        if fire:
            updates.append(t + 1)
            w = w + (eta * y[t]) * X[t]
    return updates, w, scores


def reference_l1_general(margins, loss_values, gamma, phi0, sq_norm_sum):
    return sum(loss_values) / phi0 + (gamma / phi0) * math.sqrt(sq_norm_sum)


def brute_force_selection(loss_matrix, delta):
    """Exhaustive penalized argmin; loss_matrix[i-1][t-1] = loss of h_i on x_t."""
    T = len(loss_matrix)
    best_i, best_obj = None, None
    objectives = []
    for i in range(1, T + 1):
        n = T - i + 1
        suffix = [loss_matrix[i - 1][t - 1] for t in range(i, T + 1)]
        obj = sum(suffix) / n + math.sqrt(math.log(T * (T + 1) / delta) / (2 * n))
        objectives.append(obj)
        if best_obj is None or obj < best_obj:
            best_i, best_obj = i, obj
    return best_i, objectives


ACCEPTANCE_RESULTS = []


def record_criterion(number, description, passed, detail=""):
    """Collect one acceptance-criterion outcome for the terminal summary."""
    ACCEPTANCE_RESULTS.append((number, description, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number, description, passed, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        line = f"[criterion {number:2d}] {status} - {description}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture
def sep1d_stream():
    """Separable 1-D stream of points +-2; the perceptron updates once."""
    return Stream(np.array([[2.0], [-2.0], [2.0], [-2.0]]),
                  np.array([1, -1, 1, -1]))


@pytest.fixture
def contradictory_stream():
    """One repeated unit point with alternating labels; every round updates."""
    return Stream(np.ones((4, 1)), np.array([1, -1, 1, -1]))


@pytest.fixture
def triangle_stream():
    """2-D stream {(1,0,+1), (0,1,+1), (-1,0,-1)}; updates at rounds 1 and 2."""
    return Stream(np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]),
                  np.array([1, 1, -1]))
