"""Command-line front door for batch workflows.

Subcommands: fit, audit, cv, slice, compare, toy-generate, serve.
Exit codes: 0 success, 1 missing/malformed input files, 2 infeasible
constraint system, 3 convergence failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import constraints as cs
from . import evaluation as ev
from . import ingest
from . import model as md
from . import sip
from . import toy
from .errors import ConvergenceFailure, CsvFormatError, InfeasibleProblem, ModelFormatError

EXIT_OK = 0
EXIT_BAD_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_NO_CONVERGENCE = 3


class _CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _load_inputs(args) -> tuple[ingest.Dataset, tuple[cs.ShapeConstraint, ...], ingest.RunConfig]:
    try:
        dataset = ingest.load_dataset_csv(args.data)
    except CsvFormatError as exc:
        raise _CliError(str(exc), EXIT_BAD_INPUT) from exc

    constraints: tuple[cs.ShapeConstraint, ...] = ()
    if getattr(args, "constraints", None):
        try:
            constraints = cs.load_constraints(args.constraints)
        except (ModelFormatError, OSError) as exc:
            raise _CliError(f"{args.constraints}: {exc}", EXIT_BAD_INPUT) from exc

    if getattr(args, "config", None):
        try:
            config = ingest.load_config(args.config)
        except (ModelFormatError, OSError) as exc:
            raise _CliError(f"{args.config}: {exc}", EXIT_BAD_INPUT) from exc
    else:
        config = ingest.RunConfig(degrees=(1,) * dataset.d)

    if args.degrees:
        config.degrees = tuple(int(t) for t in args.degrees.split(","))
    if getattr(args, "lam", None) is not None:
        config.lam = args.lam
    if getattr(args, "delta", None) is not None:
        config.delta = args.delta
    if getattr(args, "mode", None):
        config.mode = args.mode
    if getattr(args, "grid", None) is not None:
        config.grid_points = args.grid
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    if getattr(args, "box_halfwidth", None) is not None:
        config.box_halfwidth = args.box_halfwidth

    if len(config.degrees) != dataset.d:
        raise _CliError(
            f"config names {len(config.degrees)} degrees for {dataset.d} input columns",
            EXIT_BAD_INPUT,
        )
    return dataset, constraints, config


def _build_problem(dataset, constraints, config):
    from . import features as ft

    try:
        ranges = ingest.resolve_ranges(dataset, config)
        x_cube = ingest.scale_to_cube(dataset.x_raw, ranges)
        fm = ft.enumerate_multi_indices(config.degrees)
        m = fm.dimension
        problem = sip.SipProblem(
            x=x_cube,
            y=dataset.y,
            feature_map=fm,
            constraints=constraints,
            lam=config.lam,
            box_lo=np.full(m, -config.box_halfwidth),
            box_hi=np.full(m, config.box_halfwidth),
        )
    except (ValueError, CsvFormatError) as exc:
        raise _CliError(str(exc), EXIT_BAD_INPUT) from exc
    return problem, ranges, fm


def _fit(problem, config) -> tuple[np.ndarray, sip.SolveReport | None]:
    opts = sip.SolveOptions(seed=config.seed)
    spec = ev.SolverSpec(
        mode=config.mode, delta=config.delta, grid_points=config.grid_points, options=opts
    )
    return ev.fit_weights(problem, spec)


def cmd_fit(args) -> int:
    dataset, constraints, config = _load_inputs(args)
    problem, ranges, fm = _build_problem(dataset, constraints, config)
    try:
        w, report = _fit(problem, config)
    except InfeasibleProblem as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        if exc.constraint_indices:
            for i in exc.constraint_indices:
                print(f"  conflicting constraint {i}: {constraints[i].describe()}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConvergenceFailure as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE

    provenance = {
        "mode": config.mode,
        "delta": config.delta if config.mode == "adaptive" else None,
        "grid_points": config.grid_points if config.mode == "grid" else None,
        "lambda": config.lam,
        "seed": config.seed,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "gap": (report.gap if report and np.isfinite(report.gap) else None),
    }
    trained = md.TrainedModel(
        feature_map=fm, w=w, input_ranges=ranges,
        constraint_set=constraints, provenance=provenance,
    )
    out = Path(args.out)
    md.save_model(out, trained)
    print(f"model written to {out}")
    if report is not None:
        report_path = Path(args.report) if args.report else out.with_suffix(".report.json")
        with open(report_path, "w", encoding="utf-8") as fh:
            json.dump(report.to_doc(), fh, indent=2)
            fh.write("\n")
        gap = "n/a" if not np.isfinite(report.gap) else f"{report.gap:.3e}"
        print(
            f"mode={report.mode} iterations={report.iterations} gap={gap} "
            f"report written to {report_path}"
        )
    return EXIT_OK


def cmd_audit(args) -> int:
    try:
        trained = md.load_model(args.model)
    except (ModelFormatError, OSError) as exc:
        print(f"{args.model}: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    constraints = trained.constraint_set
    if args.constraints:
        try:
            constraints = cs.load_constraints(args.constraints)
        except (ModelFormatError, OSError) as exc:
            print(f"{args.constraints}: {exc}", file=sys.stderr)
            return EXIT_BAD_INPUT
    report = ev.audit_violations(
        trained, constraints,
        n_anchors=args.anchors, n_line=args.line_points, seed=args.seed, tol=args.tol,
    )
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"audit report written to {args.out}")
    if args.csv:
        Path(args.csv).write_text(report.to_csv(), encoding="utf-8")
    print(f"violated {report.total_violated} out of {len(constraints)} constraints")
    return EXIT_OK


def cmd_cv(args) -> int:
    dataset, constraints, config = _load_inputs(args)
    problem, _, _ = _build_problem(dataset, constraints, config)
    spec = ev.SolverSpec(
        mode=args.solver, delta=config.delta, grid_points=config.grid_points,
        options=sip.SolveOptions(seed=config.seed),
    )
    try:
        report = ev.cross_validate(
            problem, k=args.folds, spec=spec, seed=config.seed, jobs=args.jobs
        )
    except InfeasibleProblem as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConvergenceFailure as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_BAD_INPUT
    if args.out:
        Path(args.out).write_text(report.to_json(), encoding="utf-8")
        print(f"cv report written to {args.out}")
    print(ev.comparison_table([(args.solver, report)]), end="")
    return EXIT_OK


def cmd_slice(args) -> int:
    try:
        trained = md.load_model(args.model)
    except (ModelFormatError, OSError) as exc:
        print(f"{args.model}: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    try:
        anchor = [float(t) for t in args.anchor.split(",")]
        pairs = md.slice_model(trained, anchor, args.axis, args.resolution)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_BAD_INPUT
    lines = ["t,yhat"] + [f"{t!r},{v!r}" for t, v in pairs]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"slice written to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_compare(args) -> int:
    dataset, constraints, config = _load_inputs(args)
    problem, _, _ = _build_problem(dataset, constraints, config)
    rows = []
    for name, mode in (("adaptive", "adaptive"), ("grid", "grid"), ("ridge", "ridge")):
        spec = ev.SolverSpec(
            mode=mode, delta=config.delta, grid_points=config.grid_points,
            options=sip.SolveOptions(seed=config.seed),
        )
        try:
            rows.append(
                (name, ev.cross_validate(problem, k=args.folds, spec=spec,
                                         seed=config.seed, jobs=args.jobs))
            )
        except InfeasibleProblem as exc:
            print(f"infeasible while fitting {name}: {exc}", file=sys.stderr)
            return EXIT_INFEASIBLE
        except ConvergenceFailure as exc:
            print(f"convergence failure while fitting {name}: {exc}", file=sys.stderr)
            return EXIT_NO_CONVERGENCE
        except ValueError as exc:
            print(str(exc), file=sys.stderr)
            return EXIT_BAD_INPUT
    table = ev.comparison_table(rows)
    if args.out:
        doc = {
            "format": "shape-comparison",
            "version": 1,
            "rows": {name: rep.to_doc() for name, rep in rows},
            "table": table,
        }
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        print(f"comparison written to {args.out}")
    print(table, end="")
    return EXIT_OK


def cmd_toy_generate(args) -> int:
    spec = toy.ToySpec(sigma=args.sigma, n_train=args.n, seed=args.seed)
    x, y = toy.toy_sample(spec)
    Path(args.out).write_text(toy.toy_csv(x, y), encoding="utf-8")
    print(f"dataset written to {args.out}")
    if args.constraints_out:
        cs.save_constraints(args.constraints_out, toy.toy_constraints())
        print(f"constraint set written to {args.constraints_out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(session_dir=Path(args.session_dir), ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shapereg",
        description="Shape-constrained polynomial regression workflows",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common_fit_args(p):
        p.add_argument("--data", required=True, help="dataset CSV (header; inputs then output)")
        p.add_argument("--constraints", help="constraint-set JSON file")
        p.add_argument("--config", help="run-config JSON file")
        p.add_argument("--degrees", help="per-axis maximal degrees, e.g. 1,5,2,2,2")
        p.add_argument("--lambda", dest="lam", type=float, help="ridge weight")
        p.add_argument("--delta", type=float, help="adaptive optimality gap target")
        p.add_argument("--mode", choices=["adaptive", "grid", "ridge"])
        p.add_argument("--grid", type=int, help="grid points per dimension (grid mode)")
        p.add_argument("--seed", type=int)
        p.add_argument("--box-halfwidth", type=float, dest="box_halfwidth")

    p = sub.add_parser("fit", help="fit a model and write the model file")
    add_common_fit_args(p)
    p.add_argument("--out", required=True, help="output model file")
    p.add_argument("--report", help="output solve-report file")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("audit", help="shape-compliance audit of a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--constraints", help="audit against this set instead of the stored one")
    p.add_argument("--anchors", type=int, default=ev.AUDIT_ANCHORS)
    p.add_argument("--line-points", type=int, default=ev.AUDIT_LINE_POINTS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=ev.AUDIT_TOL)
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--csv", help="write the flat CSV here")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("cv", help="k-fold cross-validation")
    add_common_fit_args(p)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--solver", choices=["adaptive", "grid", "ridge"], default="adaptive")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("slice", help="1-D model slice as CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--axis", type=int, required=True)
    p.add_argument("--anchor", required=True, help="comma-separated original-unit coordinates")
    p.add_argument("--resolution", type=int, default=101)
    p.add_argument("--out")
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("compare", help="adaptive vs grid vs ridge comparison table")
    add_common_fit_args(p)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="write the JSON document here")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("toy-generate", help="write the benchmark dataset and constraints")
    p.add_argument("--n", type=int, default=toy.TOY_N_TRAIN)
    p.add_argument("--sigma", type=float, default=toy.TOY_SIGMA)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--constraints-out", dest="constraints_out")
    p.set_defaults(func=cmd_toy_generate)

    p = sub.add_parser("serve", help="start the interactive workbench service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--session-dir", default="./sessions")
    p.add_argument("--ui-dir", default=None, help="static directory with the browser UI build")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
