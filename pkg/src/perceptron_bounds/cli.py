"""Command-line front end: train, certify bounds, run coverage experiments.

Subcommands
-----------
run     one online pass, trace summary
bounds  evaluate or optimize mistake bounds against the actual mistake count
o2b     penalized selection + conversion-bound coverage on fresh draws

Exit codes: 0 success / all bounds valid, 1 some bound invalid, 2 usage error,
3 infeasible witness, 4 data file missing or malformed.

Datasets come from ``--data FILE`` (CSV or sparse ``idx:val`` text) or from the
generator mini-language ``--gen kind:key=value,...`` where kind is one of
``sep`` (margin-separated ball), ``noise`` (separable plus label flips), or
``contradictory`` (one repeated point with alternating labels), and keys are
``N`` (dimension), ``T`` (examples), ``r`` (radius), ``rho`` (planted margin),
``p`` (flip probability), ``seed``. Example: ``sep:N=2,T=50,r=1,rho=0.2,seed=7``.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from .bounds import (
    BoundForm,
    l1_bound,
    l2_bound,
    novikoff_bound,
    optimize_bound,
)
from .data import FileFormat, GeneratorKind, GeneratorSpec, generate, load
from .engine import PerceptronConfig, UpdateRule, run_primal
from .errors import DataParseError, GenerationError, InfeasibleWitnessError
from .kernels import KernelSpec, run_kernel
from .losses import make_hinge, make_huber, make_squared_hinge
from .online_to_batch import (
    conversion_rhs,
    coverage_experiment,
    select_penalized,
    zero_one_loss,
)
from .report import ReportDocument, dataset_digest
from .stream import Stream

EXIT_OK = 0
EXIT_INVALID_BOUND = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_PARSE = 4

_GEN_KINDS = {
    "sep": GeneratorKind.SEPARABLE_MARGIN,
    "separable": GeneratorKind.SEPARABLE_MARGIN,
    "separable_margin": GeneratorKind.SEPARABLE_MARGIN,
    "noise": GeneratorKind.LABEL_NOISE,
    "label_noise": GeneratorKind.LABEL_NOISE,
    "contradictory": GeneratorKind.CONTRADICTORY,
}

_BOUND_CHOICES = (
    "novikoff", "l1_general", "l1_radius",
    "l1_hinge", "l1_hinge_radius", "l1_sq_hinge", "l1_sq_hinge_radius",
    "l1_general_radius", "l2_first", "l2_radius", "all",
)


def parse_gen_spec(text: str, default_seed: int | None = None) -> GeneratorSpec:
    """Parse ``kind:key=value,...`` into a GeneratorSpec."""
    kind_token, _, rest = text.partition(":")
    kind = _GEN_KINDS.get(kind_token.strip().lower())
    if kind is None:
        raise ValueError(f"unknown generator kind {kind_token!r} "
                         f"(expected one of {sorted(set(_GEN_KINDS))})")
    keys = {
        "N": "dim", "dim": "dim",
        "T": "count", "count": "count",
        "r": "radius", "radius": "radius",
        "rho": "planted_margin", "margin": "planted_margin",
        "p": "flip_prob", "flip": "flip_prob",
        "seed": "seed",
    }
    fields: dict = {"kind": kind, "dim": 1, "count": 10}
    if default_seed is not None:
        fields["seed"] = int(default_seed)
    if rest.strip():
        for item in rest.split(","):
            key, eq, value = item.partition("=")
            key = key.strip()
            if not eq or key not in keys:
                raise ValueError(f"bad generator option {item!r}")
            dest = keys[key]
            fields[dest] = int(value) if dest in ("dim", "count", "seed") else float(value)
    if kind is not GeneratorKind.CONTRADICTORY and "planted_margin" not in fields:
        fields["planted_margin"] = 0.1 * fields.get("radius", 1.0)
    return GeneratorSpec(**fields)


def parse_kernel_spec(text: str) -> KernelSpec:
    """Parse ``linear`` / ``poly:degree=3,offset=1`` / ``rbf:width=0.5``."""
    name, _, rest = text.partition(":")
    name = name.strip().lower()
    options: dict = {}
    if rest.strip():
        for item in rest.split(","):
            key, eq, value = item.partition("=")
            if not eq:
                raise ValueError(f"bad kernel option {item!r}")
            options[key.strip()] = value
    if name == "linear":
        if options:
            raise ValueError("linear kernel takes no options")
        return KernelSpec.linear()
    if name in ("poly", "polynomial"):
        return KernelSpec.polynomial(
            offset=float(options.pop("offset", 0.0)),
            degree=int(options.pop("degree", 2)),
        )
    if name == "rbf":
        return KernelSpec.rbf(width=float(options.pop("width", 1.0)))
    raise ValueError(f"unknown kernel {name!r}")


def parse_witness(text: str) -> tuple[np.ndarray, float]:
    """Parse an inline ``u=v1;v2;...,rho=x`` witness or a JSON file path.

    The JSON form is ``{"u": [...], "rho": ...}``.
    """
    if "=" not in text:
        with open(text, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        return np.asarray(doc["u"], dtype=float), float(doc["rho"])
    u = None
    rho = None
    for item in text.split(","):
        key, _, value = item.partition("=")
        key = key.strip()
        if key == "u":
            u = np.array([float(tok) for tok in value.replace(";", " ").split()])
        elif key == "rho":
            rho = float(value)
        else:
            raise ValueError(f"bad witness option {item!r}")
    if u is None or rho is None:
        raise ValueError("witness needs both u=... and rho=...")
    return u, rho


def parse_rho_grid(text: str) -> np.ndarray:
    """Parse ``lo:hi:num`` (log-spaced) or a comma-separated list of scales."""
    if ":" in text:
        lo, hi, num = text.split(":")
        return np.geomspace(float(lo), float(hi), int(num))
    return np.array([float(tok) for tok in text.split(",")])


def _detect_format(path: str) -> FileFormat:
    return FileFormat.CSV if path.lower().endswith(".csv") else FileFormat.SPARSE


def _load_dataset(args, parser):
    """Resolve --data/--gen into (stream, dataset_info, planted, spec)."""
    if (args.data is None) == (args.gen is None):
        parser.error("exactly one of --data / --gen is required")
    if args.data is not None:
        fmt = FileFormat(args.format) if args.format else _detect_format(args.data)
        stream = load(args.data, fmt)
        info = {"source": args.data, "format": fmt.value}
        planted = None
        spec = None
    else:
        try:
            spec = parse_gen_spec(args.gen, default_seed=args.seed)
        except ValueError as exc:
            parser.error(str(exc))
        try:
            data = generate(spec)
        except GenerationError as exc:
            print(f"error: {exc}", file=sys.stderr)
            raise SystemExit(EXIT_USAGE)
        stream = data.stream
        planted = data.planted
        info = {"source": f"gen:{spec.kind.value}", "generator": {
            "kind": spec.kind.value, "dim": spec.dim, "count": spec.count,
            "radius": spec.radius, "planted_margin": spec.planted_margin,
            "flip_prob": spec.flip_prob, "seed": spec.seed,
        }}
    info.update(digest=dataset_digest(stream), count=len(stream), dim=stream.dim)
    return stream, info, planted, spec


def _run_trace(args, stream):
    """One online pass, primal by default, kernelized when --kernel is given."""
    kernel = parse_kernel_spec(args.kernel) if getattr(args, "kernel", None) else None
    rule = UpdateRule(args.rule)
    if kernel is not None:
        trace = run_kernel(stream, kernel, rule)
    else:
        config = PerceptronConfig(eta=getattr(args, "eta", 1.0), update_rule=rule)
        trace = run_primal(stream, config)
    return trace, kernel


def _trace_summary(trace, kernel) -> dict:
    info = {
        "rounds": trace.rounds,
        "mistake_count": trace.mistake_count,
        "update_rounds": list(trace.update_rounds),
        "radius": trace.radius,
        "sq_norm_sum": trace.sq_norm_sum,
        "update_rule": getattr(getattr(trace, "update_rule", None), "value", ""),
    }
    if kernel is not None:
        info["kernel"] = kernel.describe()
        info["kernel_trace"] = trace.kernel_trace
    else:
        info["eta"] = trace.eta
        info["final_weights"] = trace.final_weights
    return info


def _bound_row(report) -> dict:
    return {
        "bound_name": report.bound_name,
        "value": report.value,
        "mistakes": report.mistake_count,
        "valid": report.valid,
        "scale": report.witness_scale,
        "witness_u": report.witness_u,
    }


_L1_BY_LOSS = {"hinge": "l1_hinge", "sqhinge": "l1_sq_hinge", "huber": "l1_general"}


def _loss_at_scale(loss_name: str, rho: float, radius: float):
    if loss_name == "hinge":
        return make_hinge(rho)
    if loss_name == "sqhinge":
        return make_squared_hinge(rho, radius)
    return make_huber(rho)


def _expand_bound_names(bound: str, loss_name: str, separable_planted: bool) -> list[str]:
    if bound == "all":
        names = [
            "l1_hinge", "l1_hinge_radius",
            "l1_sq_hinge", "l1_sq_hinge_radius",
            "l1_general", "l1_general_radius",
            "l2_first", "l2_radius",
        ]
        if separable_planted:
            names.append("novikoff")
        return names
    if bound == "l1_general":
        return [_L1_BY_LOSS[loss_name]]
    if bound == "l1_radius":
        return [_L1_BY_LOSS[loss_name] + "_radius"]
    return [bound]


def _evaluate_at_witness(name: str, trace, stream, loss_name: str, u, rho):
    if name == "novikoff":
        return novikoff_bound(trace, stream, u, rho)
    form = BoundForm.RADIUS if name.endswith("_radius") else BoundForm.GENERAL
    if name.startswith("l2"):
        form = BoundForm.RADIUS if name == "l2_radius" else BoundForm.FIRST
        return l2_bound(trace, stream, rho, u, form)
    if name.startswith("l1_hinge"):
        loss = make_hinge(rho)
    elif name.startswith("l1_sq_hinge"):
        loss = make_squared_hinge(rho, trace.radius)
    else:
        loss = _loss_at_scale(loss_name, rho, trace.radius)
    return l1_bound(trace, stream, loss, u, form)


def cmd_run(args, parser) -> int:
    stream, info, _, _ = _load_dataset(args, parser)
    trace, kernel = _run_trace(args, stream)
    doc = ReportDocument(
        command="run",
        seed=args.seed,
        config={"eta": getattr(args, "eta", 1.0), "rule": args.rule,
                "kernel": args.kernel},
        dataset=info,
        trace=_trace_summary(trace, kernel),
    )
    _emit(doc, args)
    return EXIT_OK


def cmd_bounds(args, parser) -> int:
    stream, info, planted, spec = _load_dataset(args, parser)
    trace, kernel = _run_trace(args, stream)

    witness = None
    if args.witness:
        if kernel is not None:
            parser.error("--witness applies to primal runs only")
        try:
            witness = parse_witness(args.witness)
        except (ValueError, OSError, KeyError) as exc:
            parser.error(f"bad witness: {exc}")

    separable_planted = (
        planted is not None
        and spec is not None
        and spec.kind is GeneratorKind.SEPARABLE_MARGIN
    )
    names = _expand_bound_names(args.bound, args.loss, separable_planted)
    grid = None
    if args.rho_grid:
        try:
            grid = parse_rho_grid(args.rho_grid)
        except ValueError as exc:
            parser.error(f"bad --rho-grid: {exc}")

    rows = []
    for name in names:
        if witness is not None:
            report = _evaluate_at_witness(name, trace, stream, args.loss, *witness)
        elif name == "novikoff":
            if not separable_planted:
                parser.error("--bound novikoff needs --witness or a separable --gen dataset")
            report = novikoff_bound(trace, stream, planted, spec.planted_margin)
        else:
            report = optimize_bound(trace, stream, name, rho_grid=grid,
                                    iters=args.iters, seed=args.seed)
        rows.append(_bound_row(report))

    doc = ReportDocument(
        command="bounds",
        seed=args.seed,
        config={"loss": args.loss, "bound": args.bound, "eta": args.eta,
                "rule": args.rule, "kernel": args.kernel,
                "iters": args.iters, "witness": args.witness,
                "rho_grid": args.rho_grid},
        dataset=info,
        trace=_trace_summary(trace, kernel),
        bounds=rows,
    )
    _emit(doc, args)
    return EXIT_OK if all(row["valid"] for row in rows) else EXIT_INVALID_BOUND


def cmd_o2b(args, parser) -> int:
    if args.gen is None:
        parser.error("o2b requires --gen (fresh draws need a generator)")
    if not 0.0 < args.delta < 1.0:
        parser.error("--delta must lie in (0, 1)")
    try:
        spec = parse_gen_spec(args.gen, default_seed=args.seed)
    except ValueError as exc:
        parser.error(str(exc))
    rounds = args.rounds if args.rounds is not None else spec.count
    if args.trials < 1 or args.test_size < 1 or rounds < 1:
        parser.error("--trials, --rounds and --test-size must be positive")
    spec = replace(spec, count=rounds)

    # Selection + conversion bound on one concrete training stream, then the
    # fresh-draw coverage experiment over all trials.
    train = generate(spec).stream
    trace = run_primal(train)
    selection = select_penalized(trace, train, zero_one_loss, args.delta)
    conversion = conversion_rhs(trace, train, zero_one_loss, args.delta)

    result = coverage_experiment(spec, rounds=rounds, delta=args.delta,
                                 trials=args.trials, test_size=args.test_size,
                                 seed=args.seed)
    doc = ReportDocument(
        command="o2b",
        seed=args.seed,
        config={"delta": args.delta, "trials": args.trials,
                "rounds": rounds, "test_size": args.test_size},
        dataset={"source": f"gen:{spec.kind.value}", "count": rounds,
                 "dim": spec.dim, "digest": dataset_digest(train)},
        trace=_trace_summary(trace, None),
        selection={
            "chosen_index": selection.chosen_index,
            "suffix_risk": selection.suffix_risk,
            "penalty": selection.penalty,
        },
        generalization=[{
            "bound_name": conversion.bound_name,
            "rhs": conversion.rhs,
            "empirical_online_loss": conversion.empirical_online_loss,
        }],
        coverage={
            "trials": result.trials,
            "violation_fraction": result.violation_fraction,
            "records": [
                {"rhs": r.rhs, "test_error": r.test_error, "violated": r.violated}
                for r in result.records
            ],
        },
    )
    _emit(doc, args)
    return EXIT_OK


def _emit(doc: ReportDocument, args) -> None:
    if args.json:
        print(doc.to_json(timestamp=not args.no_timestamp))
    elif args.csv:
        sys.stdout.write(doc.to_csv())
    else:
        sys.stdout.write(doc.to_table())


def _add_common(sub: argparse.ArgumentParser, with_dataset: bool = True) -> None:
    if with_dataset:
        sub.add_argument("--data", help="dataset file (CSV or sparse idx:val)")
        sub.add_argument("--format", choices=("csv", "sparse"),
                         help="file format (default: by extension)")
        sub.add_argument("--gen", help="generator spec kind:key=value,...")
    sub.add_argument("--seed", type=int, default=0, help="seed for optimizer/generator")
    sub.add_argument("--json", action="store_true", help="emit JSON document")
    sub.add_argument("--csv", action="store_true", help="emit flat CSV bound table")
    sub.add_argument("--no-timestamp", action="store_true",
                     help="omit the timestamp field from JSON output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pbounds",
        description="Online perceptron runs with certified mistake bounds.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_run = subs.add_parser("run", help="one online pass, print the trace summary")
    _add_common(p_run)
    p_run.add_argument("--kernel", help="linear | poly:degree=..,offset=.. | rbf:width=..")
    p_run.add_argument("--eta", type=float, default=1.0, help="update step size")
    p_run.add_argument("--rule", choices=tuple(r.value for r in UpdateRule),
                       default=UpdateRule.NON_POSITIVE_SCORE.value)
    p_run.set_defaults(func=cmd_run)

    p_bounds = subs.add_parser("bounds", help="evaluate or optimize mistake bounds")
    _add_common(p_bounds)
    p_bounds.add_argument("--kernel", help="kernelize the run (optimized witnesses only)")
    p_bounds.add_argument("--eta", type=float, default=1.0)
    p_bounds.add_argument("--rule", choices=tuple(r.value for r in UpdateRule),
                          default=UpdateRule.NON_POSITIVE_SCORE.value)
    p_bounds.add_argument("--loss", choices=("hinge", "sqhinge", "huber"),
                          default="hinge", help="loss family for l1 bounds")
    p_bounds.add_argument("--bound", choices=_BOUND_CHOICES, default="all")
    p_bounds.add_argument("--rho-grid", help="lo:hi:num (log-spaced) or v1,v2,...")
    p_bounds.add_argument("--iters", type=int, default=200,
                          help="subgradient iterations per grid scale")
    p_bounds.add_argument("--witness",
                          help='inline "u=v1;v2,rho=x" or a JSON file {"u": [...], "rho": ...}')
    p_bounds.set_defaults(func=cmd_bounds)

    p_o2b = subs.add_parser("o2b", help="online-to-batch coverage experiment")
    _add_common(p_o2b, with_dataset=False)
    p_o2b.add_argument("--gen", required=False, help="generator spec kind:key=value,...")
    p_o2b.add_argument("--delta", type=float, default=0.1, help="confidence parameter")
    p_o2b.add_argument("--trials", type=int, default=20)
    p_o2b.add_argument("--rounds", type=int, default=None,
                       help="training rounds per trial (default: T from --gen)")
    p_o2b.add_argument("--test-size", type=int, default=1000)
    p_o2b.set_defaults(func=cmd_o2b)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except InfeasibleWitnessError as exc:
        print(f"infeasible witness: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (DataParseError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
