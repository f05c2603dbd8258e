"""Acceptance gate: ten end-to-end criteria certifying the whole package.

Each test exercises one criterion at its stated tolerance and budget and
records one PASS/FAIL line, printed in the pytest terminal summary. The
sweep corpus (criteria 1 and 3) is generated once per module.

Honesty rule: these tests certify claimed inequalities against actually
observed mistake counts; none of them loosens a tolerance to force green.
"""

from __future__ import annotations

import dataclasses
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import brute_force_selection, record_criterion
from perceptron_bounds import (
    AdmissibleLoss,
    BoundForm,
    GeneratorKind,
    GeneratorSpec,
    KernelSpec,
    PerceptronConfig,
    Regime,
    Stream,
    check_admissibility,
    compare_norms,
    conversion_rhs,
    coverage_experiment,
    generate,
    l1_bound,
    l2_bound,
    loss_vector,
    make_hinge,
    make_huber,
    make_squared_hinge,
    novikoff_bound,
    penalized_argmin,
    penalty_terms,
    run_kernel,
    run_primal,
    update_identity_stats,
    zero_one_loss,
)

REL = 1e-9
ABS = 1e-12


@contextmanager
def criterion(number, description):
    """Record one acceptance outcome; re-raise on failure so pytest reports it."""
    info = {}
    try:
        yield info
    except BaseException:
        record_criterion(number, description, False, info.get("note", ""))
        raise
    record_criterion(number, description, True, info.get("note", ""))


def _corpus_spec(rng, index):
    """One dataset spec for the sweep corpus: mixed kinds, sizes, radii."""
    dim = int(rng.integers(1, 11))
    count = int(rng.integers(10, 201))
    radius = float(rng.uniform(0.5, 3.0))
    seed = 10_000 + index
    kind_slot = index % 4
    if kind_slot == 0:
        return GeneratorSpec(
            kind=GeneratorKind.SEPARABLE_MARGIN,
            dim=dim,
            count=count,
            radius=radius,
            planted_margin=radius * float(rng.uniform(0.05, 0.5)),
            seed=seed,
        )
    if kind_slot in (1, 2):
        return GeneratorSpec(
            kind=GeneratorKind.LABEL_NOISE,
            dim=dim,
            count=count,
            radius=radius,
            planted_margin=radius * float(rng.uniform(0.05, 0.5)),
            flip_prob=0.05 if kind_slot == 1 else 0.2,
            seed=seed,
        )
    return GeneratorSpec(
        kind=GeneratorKind.CONTRADICTORY,
        dim=dim,
        count=count,
        radius=radius,
        seed=seed,
    )


@pytest.fixture(scope="module")
def sweep_corpus():
    rng = np.random.default_rng(20240817)
    corpus = []
    for i in range(1000):
        spec = _corpus_spec(rng, i)
        data = generate(spec)
        trace = run_primal(data.stream)
        corpus.append((spec, data, trace))
    return corpus


def test_criterion_01_soundness_sweep(sweep_corpus):
    desc = "all certified bounds dominate observed mistakes (1000 datasets x 50 witnesses)"
    with criterion(1, desc) as info:
        start = time.perf_counter()
        rng = np.random.default_rng(777)
        evaluations = 0
        novikoff_evals = 0
        violations = []
        for spec, data, trace in sweep_corpus:
            stream = data.stream
            X = stream.X
            y = stream.y
            r = trace.radius
            dim = X.shape[1]
            for _ in range(50):
                direction = rng.standard_normal(dim)
                norm = float(np.linalg.norm(direction))
                if norm == 0.0:
                    continue
                u = direction / norm
                rho = r * 10.0 ** float(rng.uniform(-2.0, 2.0))
                losses = (
                    make_hinge(rho),
                    make_squared_hinge(rho, r),
                    make_huber(rho),
                )
                reports = []
                for loss in losses:
                    reports.append(l1_bound(trace, stream, loss, u, BoundForm.GENERAL))
                    reports.append(l1_bound(trace, stream, loss, u, BoundForm.RADIUS))
                reports.append(l2_bound(trace, stream, rho, u, BoundForm.FIRST))
                reports.append(l2_bound(trace, stream, rho, u, BoundForm.RADIUS))
                margins = y * (X @ u)
                if float(margins.min()) >= rho * (1.0 - 1e-9):
                    reports.append(novikoff_bound(trace, stream, u, rho))
                    novikoff_evals += 1
                for report in reports:
                    evaluations += 1
                    if not report.valid:
                        violations.append((spec.seed, report.bound_name, report.value, trace.mistake_count))
            if data.planted is not None and spec.kind is GeneratorKind.SEPARABLE_MARGIN:
                report = novikoff_bound(trace, stream, data.planted, spec.planted_margin)
                evaluations += 1
                novikoff_evals += 1
                if not report.valid:
                    violations.append((spec.seed, report.bound_name, report.value, trace.mistake_count))
        elapsed = time.perf_counter() - start
        info["note"] = (
            f"{evaluations} evaluations ({novikoff_evals} novikoff-feasible), "
            f"{len(violations)} violations, {elapsed:.1f}s"
        )
        assert violations == [], f"unsound bounds: {violations[:5]}"
        assert novikoff_evals >= 250, "novikoff path under-exercised"
        assert elapsed < 60.0, f"sweep exceeded 60s budget: {elapsed:.1f}s"


def test_criterion_02_novikoff_certification():
    desc = "separable runs respect (radius/margin)^2 and the planted witness certifies"
    with criterion(2, desc) as info:
        rng = np.random.default_rng(4242)
        worst_slack = math.inf
        for i in range(100):
            radius = float(rng.uniform(0.5, 3.0))
            spec = GeneratorSpec(
                kind=GeneratorKind.SEPARABLE_MARGIN,
                dim=int(rng.integers(1, 9)),
                count=int(rng.integers(20, 151)),
                radius=radius,
                planted_margin=radius * float(rng.uniform(0.05, 0.5)),
                seed=60_000 + i,
            )
            data = generate(spec)
            trace = run_primal(data.stream)
            budget = (spec.radius / spec.planted_margin) ** 2
            assert trace.mistake_count <= budget + 1e-9
            report = novikoff_bound(trace, data.stream, data.planted, spec.planted_margin)
            assert report.bound_name == "novikoff"
            assert report.valid
            assert report.value >= trace.mistake_count - (1e-9 * trace.mistake_count + 1e-12)
            worst_slack = min(worst_slack, budget - trace.mistake_count)
        # 1-D equality case: points at +/-2 with witness margin 2 give
        # mistake count 1 = (radius/margin)^2 exactly.
        stream = Stream(np.array([[2.0], [-2.0], [2.0], [-2.0]]), np.array([1, -1, 1, -1]))
        trace = run_primal(stream)
        report = novikoff_bound(trace, stream, np.array([1.0]), 2.0)
        assert trace.mistake_count == 1
        assert report.value == pytest.approx(1.0, rel=REL)
        info["note"] = f"100 planted datasets, min budget slack {worst_slack:.3f}, 1-D equality exact"


def test_criterion_03_update_identity_diagnostics(sweep_corpus):
    desc = "weight-growth identities hold on every sweep trace"
    with criterion(3, desc) as info:
        checked = 0
        for _, _, trace in sweep_corpus:
            stats = update_identity_stats(trace)
            assert stats.aggregate_norm <= stats.norm_budget * (1.0 + 1e-9) + 1e-12
            assert stats.final_sq_norm == pytest.approx(stats.expansion_sum, rel=1e-9, abs=1e-12)
            checked += 1
        info["note"] = f"{checked} traces, aggregate<=budget and exact expansion on all"


def test_criterion_04_kernel_agreement(sweep_corpus):
    desc = "linear kernel reproduces primal runs; rbf kernel trace equals mistakes"
    with criterion(4, desc) as info:
        linear = KernelSpec("linear")
        rbf = KernelSpec("rbf", width=1.5)
        for _, data, trace in sweep_corpus[:100]:
            ktrace = run_kernel(data.stream, linear)
            assert ktrace.update_rounds == trace.update_rounds
            assert ktrace.mistake_count == trace.mistake_count
            kernel_preds = [rec.predicted for rec in ktrace.per_round]
            primal_preds = [rec.predicted for rec in trace.per_round]
            assert kernel_preds == primal_preds
            rtrace = run_kernel(data.stream, rbf)
            assert rtrace.kernel_trace == pytest.approx(rtrace.mistake_count, rel=1e-9)
        info["note"] = "100 datasets: identical update rounds/predictions; rbf trace == mistakes"


def test_criterion_05_step_size_invariance(sweep_corpus):
    desc = "learning rate never changes update rounds or predictions"
    with criterion(5, desc) as info:
        for _, data, base in sweep_corpus[:100]:
            base_preds = [rec.predicted for rec in base.per_round]
            for eta in (0.5, 3.0):
                scaled = run_primal(data.stream, PerceptronConfig(eta=eta))
                assert scaled.update_rounds == base.update_rounds
                assert [rec.predicted for rec in scaled.per_round] == base_preds
                np.testing.assert_allclose(
                    scaled.final_weights,
                    eta * base.final_weights,
                    rtol=1e-9,
                    atol=1e-12,
                )
        info["note"] = "100 datasets x eta in {0.5, 1, 3}: identical rounds, scaled weights"


def test_criterion_06_admissibility_suite():
    desc = "hinge/squared-hinge certify on [-2r, 2r]; signed and understated losses fail"
    with criterion(6, desc) as info:
        combos = 0
        for rho in (0.25, 1.0, 3.0):
            for r in (0.5, 1.0, 2.0):
                domain = (-2.0 * r, 2.0 * r)
                hinge = make_hinge(rho)
                assert hinge.gamma == pytest.approx(1.0 / rho, rel=REL)
                hinge_report = check_admissibility(hinge, domain)
                assert hinge_report.passed, hinge_report.failures()

                sq = make_squared_hinge(rho, 2.0 * r)
                assert sq.gamma == pytest.approx(2.0 * (rho + 2.0 * r) / rho**2, rel=REL)
                sq_report = check_admissibility(sq, domain)
                assert sq_report.passed, sq_report.failures()

                # A Lipschitz constant that ignores the steep negative end of
                # the squared hinge must be caught by the checker.
                understated = dataclasses.replace(
                    make_squared_hinge(rho, r), gamma=2.0 * r / rho**2
                )
                bad_report = check_admissibility(understated, (-r, r))
                assert not bad_report.passed
                assert "lipschitz" in bad_report.failures()

                signed = AdmissibleLoss(
                    name="signed_margin",
                    gamma=1.0,
                    phi0=1.0,
                    evaluate=lambda m: np.asarray(m, dtype=float),
                    derivative=lambda m: np.ones_like(np.asarray(m, dtype=float)),
                    domain=domain,
                    params={},
                )
                signed_report = check_admissibility(signed, domain)
                assert not signed_report.passed
                assert "non_negative" in signed_report.failures()
                combos += 1
        info["note"] = f"{combos} (rho, r) combos; understated constants rejected on all"


def test_criterion_07_selection_oracle():
    desc = "penalized selection matches brute force on 500 matrices incl. ties"
    with criterion(7, desc) as info:
        rng = np.random.default_rng(2025)
        tie_matrices = 0
        for i in range(500):
            rounds = int(rng.integers(1, 51))
            if i % 5 == 0:
                values = rng.integers(0, 3, size=(rounds, rounds)) / 2.0
                tie_matrices += 1
            else:
                values = rng.uniform(0.0, 1.0, size=(rounds, rounds))
            chosen, objectives = penalized_argmin(values, 0.1)
            want_i, want_obj = brute_force_selection(values.tolist(), 0.1)
            assert chosen == want_i
            np.testing.assert_allclose(objectives, want_obj, rtol=1e-12, atol=0.0)
        # Engineered exact tie: adjust the second row until both objectives
        # are bitwise equal, then the earlier index must win.
        pens = penalty_terms(2, 0.5)
        a = 0.5
        b = a + pens[0] - pens[1]
        for _ in range(16):
            if b + pens[1] == a + pens[0]:
                break
            b = math.nextafter(b, a + pens[0] - pens[1] + 1.0)
        matrix = np.array([[a, a], [0.0, b]])
        chosen, objectives = penalized_argmin(matrix, 0.5)
        assert objectives[0] == objectives[1]
        assert chosen == 1
        info["note"] = f"500 matrices ({tie_matrices} tie-prone) + bitwise tie -> earliest index"


def test_criterion_08_coverage_experiment():
    desc = "conversion bound holds with frequency >= 1 - delta over fresh draws"
    with criterion(8, desc) as info:
        start = time.perf_counter()
        spec = GeneratorSpec(
            kind=GeneratorKind.LABEL_NOISE,
            dim=5,
            count=200,
            radius=1.0,
            planted_margin=0.2,
            flip_prob=0.05,
            seed=99,
        )
        result = coverage_experiment(spec, rounds=200, delta=0.1, trials=200, test_size=5000, seed=99)
        elapsed = time.perf_counter() - start
        assert len(result.records) == 200
        recomputed = sum(1 for rec in result.records if rec.violated) / 200.0
        assert result.violation_fraction == pytest.approx(recomputed, abs=0.0)
        for rec in result.records:
            assert rec.violated == (rec.test_error > rec.rhs)
            assert 0.0 <= rec.test_error <= 1.0
        assert result.violation_fraction <= 0.16
        assert elapsed < 120.0, f"coverage exceeded 2min budget: {elapsed:.1f}s"
        mean_rhs = float(np.mean([rec.rhs for rec in result.records]))
        info["note"] = (
            f"200 trials, violation fraction {result.violation_fraction:.3f}, "
            f"mean rhs {mean_rhs:.3f}, {elapsed:.1f}s"
        )


def test_criterion_09_norm_regimes():
    desc = "norm comparison classifies small-loss and large-loss streams correctly"
    with criterion(9, desc) as info:
        stream = Stream(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([1, 1]))
        trace = run_primal(stream)
        assert trace.update_rounds == (1, 2)
        hinge = make_hinge(1.0)

        small_u = np.array([0.5, 0.5])
        small_losses = loss_vector(hinge, small_u, trace, stream).values
        assert np.all(np.asarray(small_losses) <= 1.0)
        small = compare_norms(trace, stream, 1.0, small_u)
        assert small.regime is Regime.L2_TIGHTER
        assert small.l2_squared <= small.l1 + ABS

        big_u = np.array([-0.5, -0.5])
        big_losses = loss_vector(hinge, big_u, trace, stream).values
        assert np.all(np.asarray(big_losses) >= 1.0)
        big = compare_norms(trace, stream, 1.0, big_u)
        assert big.regime is Regime.L1_TIGHTER
        assert big.l2_squared >= big.l1 - ABS

        mixed_u = np.array([0.5, -0.5])
        mixed = compare_norms(trace, stream, 1.0, mixed_u)
        assert mixed.regime is Regime.MIXED
        info["note"] = (
            f"small losses -> {small.regime.value} (l2^2 {small.l2_squared:.3f} <= l1 {small.l1:.3f}); "
            f"large losses -> {big.regime.value} (l2^2 {big.l2_squared:.3f} >= l1 {big.l1:.3f})"
        )


def test_criterion_10_worked_values():
    desc = "frozen worked values reproduce hand oracles to 1e-6"
    with criterion(10, desc) as info:
        checks = []

        # 1-D separable stream: one mistake, all three bound families equal 1.
        sep = Stream(np.array([[2.0], [-2.0], [2.0], [-2.0]]), np.array([1, -1, 1, -1]))
        sep_trace = run_primal(sep)
        u1 = np.array([1.0])
        checks.append(("sep mistakes", sep_trace.mistake_count, 1))
        checks.append(("novikoff", novikoff_bound(sep_trace, sep, u1, 2.0).value, (2.0 / 2.0) ** 2))
        checks.append(
            ("l1 hinge sep", l1_bound(sep_trace, sep, make_hinge(2.0), u1).value, 0.0 + 0.5 * 2.0)
        )
        checks.append(
            ("l2 first sep", l2_bound(sep_trace, sep, 2.0, u1).value, (0.0 + math.sqrt(0.0 + 2.0 / 2.0)) ** 2)
        )

        # Contradictory four-round stream at x = 1: hinge losses (0,2,0,2).
        contra = Stream(np.ones((4, 1)), np.array([1, -1, 1, -1]))
        contra_trace = run_primal(contra)
        checks.append(("contra mistakes", contra_trace.mistake_count, 4))
        checks.append(
            ("l1 hinge contra", l1_bound(contra_trace, contra, make_hinge(1.0), u1).value, 4.0 + 1.0 * math.sqrt(4.0))
        )
        l2_norm = math.sqrt(0.0 + 4.0 + 0.0 + 4.0)
        first = (l2_norm / 2.0 + math.sqrt(l2_norm**2 / 4.0 + math.sqrt(4.0) / 1.0)) ** 2
        checks.append(("l2 first contra", l2_bound(contra_trace, contra, 1.0, u1).value, first))
        radius_form = (1.0 / 1.0 + l2_norm) ** 2
        checks.append(
            ("l2 radius contra", l2_bound(contra_trace, contra, 1.0, u1, BoundForm.RADIUS).value, radius_form)
        )

        # Selection penalties for two rounds at delta = 0.5: ln(2*3/0.5) = ln 12.
        pens = penalty_terms(2, 0.5)
        checks.append(("penalty i=1", float(pens[0]), math.sqrt(math.log(12.0) / 4.0)))
        checks.append(("penalty i=2", float(pens[1]), math.sqrt(math.log(12.0) / 2.0)))

        # Conversion bound on the 100-round stream with exactly 10 update rounds.
        X = np.zeros((100, 2))
        y = np.empty(100, dtype=int)
        X[:9, 0] = 1.0
        y[:9] = [1, -1, 1, -1, 1, -1, 1, -1, 1]
        X[9, 1] = 1.0
        y[9] = -1
        X[10:, 0] = 1.0
        y[10:] = 1
        conv_stream = Stream(X, y)
        conv_trace = run_primal(conv_stream)
        checks.append(("conversion mistakes", conv_trace.mistake_count, 10))
        conv = conversion_rhs(conv_trace, conv_stream, zero_one_loss, 0.05)
        checks.append(("conversion rhs", conv.rhs, 0.1 + 6.0 * math.sqrt(math.log(4040.0) / 100.0)))

        for label, got, want in checks:
            assert got == pytest.approx(want, abs=1e-6), f"{label}: got {got!r}, want {want!r}"
        info["note"] = f"{len(checks)} frozen values, max |error| within 1e-6"
