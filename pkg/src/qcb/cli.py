"""``qcb`` command-line front end.

Exit codes: 0 success, 2 validation or parse failure, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Any, Optional, Sequence

import numpy as np

from . import __version__
from .bounds import check_attainment, decoupled_bounds, kinematical_bounds, optimal_unitary
from .controllability import (
    CLOSURE_TOL,
    COUPLING_TOL,
    block_closures,
    detect_decoupling,
    is_completely_controllable,
)
from .dynamics import propagate, simulate_expectation
from .errors import BasisNotAdapted, ConfigError, DimensionMismatch, NumericalError, QCBError, ValidationError
from .modelfile import ModelFile, dump_pulses, load_model, load_pulses, load_rho, matrix_to_json
from .optimizer import OptimizationConfig, multi_start, optimize
from .states import evolve_state

log = logging.getLogger("qcb")


def _load(args) -> ModelFile:
    mf = load_model(args.model)
    if getattr(args, "rho0", None):
        mf = ModelFile(mf.model, load_rho(args.rho0, mf.model.dim), mf.observable_spec, mf.source)
    return mf


def _obs_spec(args, mf: ModelFile):
    spec = getattr(args, "observable", None)
    if spec is None:
        return mf.observable_spec
    if spec.lstrip().startswith("["):
        try:
            return json.loads(spec)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"--observable: parse error: {exc.msg}") from None
    return spec


def _spec_label(spec) -> Any:
    return spec if isinstance(spec, str) else "matrix"


def _bounds_doc(b) -> dict:
    return {"lower": b.lower, "upper": b.upper}


def cmd_bounds(args) -> dict:
    mf = _load(args)
    rho = mf.require_rho0()
    spec = _obs_spec(args, mf)
    a = mf.observable(spec)
    b = kinematical_bounds(a, rho)
    att = check_attainment(a, rho, tol=args.tol)
    doc = {
        "command": "bounds",
        "model": mf.source,
        "dim": mf.model.dim,
        "observable": _spec_label(spec),
        "lower": b.lower,
        "upper": b.upper,
        "initial_expectation": att.value,
        "classification": att.status.value,
        "gap_to_upper": att.gap_to_upper,
        "gap_to_lower": att.gap_to_lower,
    }
    if args.emit_unitary:
        u = optimal_unitary(a, rho, args.direction)
        doc["unitary_direction"] = args.direction
        doc["optimal_unitary"] = matrix_to_json(u)
        doc["unitary_expectation"] = check_attainment(a, evolve_state(rho, u), tol=args.tol).value
    return doc


def cmd_controllability(args) -> dict:
    mf = _load(args)
    ok, rep = is_completely_controllable(mf.model, tol=args.tol, ideal=args.ideal)
    n = mf.model.dim
    doc = {
        "command": "controllability",
        "model": mf.source,
        "dim": n,
        "dimension": rep.dimension,
        "n_squared": n * n,
        "controllable": ok,
        "generations": rep.generations,
    }
    if args.ideal:
        doc["ideal_dimension"] = rep.ideal_dimension
        doc["ideal_target"] = n * n - 1
        doc["ideal_controllable"] = rep.ideal_controllable
    return doc


def cmd_decompose(args) -> dict:
    mf = _load(args)
    try:
        part = detect_decoupling(mf.model, tol=args.tol, rho=mf.rho0)
    except BasisNotAdapted as exc:
        raise BasisNotAdapted(f"{exc}. Decoupling is only detected in a basis where h0 is diagonal.") from None
    doc = {
        "command": "decompose",
        "model": mf.source,
        "dim": mf.model.dim,
        "blocks": [[i + 1 for i in b] for b in part.blocks],
        "block_sizes": [len(b) for b in part.blocks],
        "decoupled": len(part.blocks) > 1,
        "block_probabilities": list(part.block_probabilities) if part.block_probabilities else None,
        "block_closures": [
            {"dimension": r.dimension, "n_squared": r.n * r.n, "controllable": r.controllable}
            for r in block_closures(mf.model, part, CLOSURE_TOL)
        ],
    }
    spec = _obs_spec(args, mf)
    if mf.rho0 is not None and spec is not None:
        a = mf.observable(spec)
        doc["observable"] = _spec_label(spec)
        doc["global_bounds"] = _bounds_doc(kinematical_bounds(a, mf.rho0))
        doc["decoupled_bounds"] = _bounds_doc(decoupled_bounds(a, mf.rho0, part))
    return doc


def _default_seed() -> int:
    env = os.environ.get("QCB_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"QCB_SEED must be an integer, got {env!r}") from None


def cmd_optimize(args) -> dict:
    mf = _load(args)
    rho = mf.require_rho0()
    spec = _obs_spec(args, mf)
    a = mf.observable(spec)
    seed = args.seed if args.seed is not None else _default_seed()
    config = OptimizationConfig(
        target_time=args.target_time,
        steps=args.steps,
        iterations=args.iterations,
        learning_rate=args.learning_rate,
        initial_pulse=args.initial_pulse,
        initial_amplitude=args.initial_amplitude,
        seed=seed,
        direction=args.direction,
        convergence_tol=args.convergence_tol,
    )
    if args.starts > 1:
        rep = multi_start(mf.model, rho, a, config, n_starts=args.starts)
    else:
        rep = optimize(mf.model, rho, a, config)
    if args.out:
        dump_pulses(rep.best_pulses, args.out)
    return {
        "command": "optimize",
        "model": mf.source,
        "observable": _spec_label(spec),
        "direction": rep.direction,
        "seed": rep.seed,
        "target_time": config.target_time,
        "steps": config.steps,
        "iterations": rep.iterations,
        "converged": rep.converged,
        "lower": rep.bounds.lower,
        "upper": rep.bounds.upper,
        "initial_expectation": float(rep.trajectory[0]),
        "final_expectation": rep.final_expectation,
        "yield_fraction": rep.yield_fraction,
        "yield_of_upper": rep.yield_of_upper,
        "trajectory": [float(x) for x in rep.trajectory],
        "pulses_path": args.out,
    }


def cmd_simulate(args) -> dict:
    mf = _load(args)
    rho = mf.require_rho0()
    spec = _obs_spec(args, mf)
    a = mf.observable(spec)
    pulses = load_pulses(args.pulses)
    if pulses.n_controls != mf.model.n_controls:
        raise DimensionMismatch(
            f"{args.pulses}: schedule has {pulses.n_controls} control(s), model has {mf.model.n_controls}"
        )
    series = simulate_expectation(mf.model, pulses, rho, a)
    final_state = evolve_state(rho, propagate(mf.model, pulses))
    att = check_attainment(a, final_state, tol=args.tol)
    b = kinematical_bounds(a, rho)
    return {
        "command": "simulate",
        "model": mf.source,
        "observable": _spec_label(spec),
        "lower": b.lower,
        "upper": b.upper,
        "times": [float(t) for t in pulses.times],
        "expectations": [float(x) for x in series],
        "final_expectation": float(series[-1]),
        "classification": att.status.value,
    }


def _text(doc: dict) -> str:
    lines = []
    for k, v in doc.items():
        if isinstance(v, float):
            v = f"{v:.12g}"
        elif isinstance(v, list) and v and all(isinstance(x, float) for x in v):
            v = " ".join(f"{x:.12g}" for x in v)
        elif isinstance(v, (list, dict)):
            v = json.dumps(v)
        lines.append(f"{k}: {v}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", required=True, help="model file path or bundled example name")
    common.add_argument("--observable", help="h0, control:m, identity, projector:k or an inline JSON matrix")
    common.add_argument("--rho0", help="JSON file or inline JSON matrix overriding the file's rho0")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="qcb", description="Kinematical bounds and controllability for quantum control.")
    parser.add_argument("--version", action="version", version=f"qcb {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", parents=[common], help="kinematical bounds of <A> for rho0")
    p.add_argument("--emit-unitary", action="store_true", help="include a bound-attaining unitary")
    p.add_argument("--direction", choices=("max", "min"), default="max")
    p.add_argument("--tol", type=float, default=1e-9, help="attainment tolerance")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("controllability", parents=[common], help="Lie-algebra rank test")
    p.add_argument("--ideal", action="store_true", help="also report the ideal criterion")
    p.add_argument("--tol", type=float, default=CLOSURE_TOL)
    p.set_defaults(func=cmd_controllability)

    p = sub.add_parser("decompose", parents=[common], help="detect non-interacting blocks")
    p.add_argument("--tol", type=float, default=COUPLING_TOL)
    p.set_defaults(func=cmd_decompose)

    d = OptimizationConfig()
    p = sub.add_parser("optimize", parents=[common], help="gradient pulse optimization")
    p.add_argument("--target-time", type=float, default=d.target_time)
    p.add_argument("--steps", type=int, default=d.steps)
    p.add_argument("--iterations", type=int, default=d.iterations)
    p.add_argument("--learning-rate", type=float, default=d.learning_rate)
    p.add_argument("--initial-pulse", choices=("zeros", "constant", "random"), default=d.initial_pulse)
    p.add_argument("--initial-amplitude", type=float, default=d.initial_amplitude)
    p.add_argument("--convergence-tol", type=float, default=d.convergence_tol)
    p.add_argument("--seed", type=int, default=None, help="defaults to $QCB_SEED or 0")
    p.add_argument("--starts", type=int, default=1, help="multi-start over consecutive seeds")
    p.add_argument("--direction", choices=("max", "min"), default="max")
    p.add_argument("--out", help="write the best pulse schedule here")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", parents=[common], help="expectation time series for a pulse file")
    p.add_argument("--pulses", required=True)
    p.add_argument("--tol", type=float, default=1e-9, help="attainment tolerance")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        doc = args.func(args)
    except ValidationError as exc:
        print(f"qcb {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"qcb {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 3
    except QCBError as exc:
        print(f"qcb {args.command}: error: {exc}", file=sys.stderr)
        return 3
    out = json.dumps(doc, indent=2) if args.format == "json" else _text(doc)
    print(out)
    return 0


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
