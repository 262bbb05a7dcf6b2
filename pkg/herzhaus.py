"""
herzhaus.py - Command-line entry point.

Exit codes: 0 success, 1 bad input, 2 gate failure, 3 certification failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from atoms import AtomError, atom_from_dict, make_central_atom, validate_atom
from bounds import BoundsError, constants_table, gate_thm
from config import Config
from decompose import DecompositionError
from harness import (
    ConfigError,
    ExperimentConfig,
    apply_overrides,
    decompose_atom,
    emit_report,
    reconstruction_residual,
    run_verification,
)
from hausdorff import HausdorffError
from herz import HerzError, HerzParams, function_from_dict, herz_norm
from weights import WeightError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_BAD_INPUT = 1
EXIT_GATE = 2
EXIT_CERTIFICATION = 3

_INPUT_ERRORS = (ConfigError, AtomError, BoundsError, DecompositionError, HausdorffError, HerzError, WeightError)


def _load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"Cannot read {path}: {exc}") from exc


def _print(data):
    print(json.dumps(data, indent=2, sort_keys=True))


def verify_command(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    report = run_verification(cfg)
    out = args.out or cfg.output or str(Path(Config().OUTPUT_DIR) / f"verify_{cfg.theorem}.json")
    emit_report(report, out, "json")
    if args.csv:
        emit_report(report, args.csv, "csv")
    if not report.ran:
        logger.info("Gate failed for theorem %s: %s", cfg.theorem, ", ".join(report.gate.failed()))
        return EXIT_GATE
    _print(report.aggregate())
    return EXIT_OK if report.certified else EXIT_CERTIFICATION


def constants_command(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    gate = gate_thm(cfg.tp, cfg.theorem, cfg.kernel, cfg.matrix_field, cfg.omega)
    table = constants_table(cfg.kernel, cfg.tp, cfg.matrix_field)
    _print({"theorem": cfg.theorem, "gate": gate.to_dict(), **table})
    return EXIT_OK


def herz_norm_command(args) -> int:
    hp = HerzParams.from_dict(_load_json(args.params))
    f = function_from_dict(_load_json(args.function), hp)
    k_range = (args.range_min, args.range_max) if args.range_min is not None and args.range_max is not None else None
    _print(herz_norm(f, hp, k_range).to_dict())
    return EXIT_OK


def decompose_command(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    gate = gate_thm(cfg.tp, cfg.theorem, cfg.kernel, cfg.matrix_field, cfg.omega)
    if not gate.passed:
        _print({"theorem": cfg.theorem, "gate": gate.to_dict()})
        return EXIT_GATE
    spec = cfg.atom_specs()[0]
    j_a = spec.j_a if args.j_a is None else args.j_a
    atom = make_central_atom(j_a, cfg.tp.hp, r_a=j_a - cfg.r_offset, s=spec.s, shape=args.shape or spec.shape, seed=spec.seed)
    decomposition = decompose_atom(cfg, atom)
    _print(
        {
            "theorem": cfg.theorem,
            "j_a": j_a,
            "pieces": [piece.to_dict() for piece in decomposition],
            "dropped": {str(k): v for k, v in decomposition.dropped.items()},
            "reconstruction_residual": reconstruction_residual(cfg, atom, decomposition),
        }
    )
    return EXIT_OK if decomposition.certified else EXIT_CERTIFICATION


def atom_validate_command(args) -> int:
    hp = HerzParams.from_dict(_load_json(args.params))
    atom = atom_from_dict(_load_json(args.atom), hp)
    report = validate_atom(atom, hp)
    _print(report.to_dict())
    return EXIT_OK if report.passed else EXIT_CERTIFICATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="herzhaus",
        description="Hausdorff operators on two-weighted Herz spaces: constants, atoms and theorem verification.",
    )
    parser.add_argument("--k-min", type=int, help="lowest octave of the scan range")
    parser.add_argument("--k-max", type=int, help="highest octave of the scan range")
    parser.add_argument("--nodes-per-octave", type=int)
    parser.add_argument("--sphere-res", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--log-level", type=str.upper, choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    subparsers = parser.add_subparsers(dest="command", required=True)

    verify = subparsers.add_parser("verify", help="gate, decompose and bound a family of atoms")
    verify.add_argument("--config", required=True)
    verify.add_argument("--out")
    verify.add_argument("--csv")
    verify.set_defaults(handler=verify_command)

    constants = subparsers.add_parser("constants", help="print coefficient families and C1-C12")
    constants.add_argument("--config", required=True)
    constants.set_defaults(handler=constants_command)

    norm = subparsers.add_parser("herz-norm", help="Herz norm of a function")
    norm.add_argument("--function", required=True)
    norm.add_argument("--params", required=True)
    norm.add_argument("--range-min", type=int)
    norm.add_argument("--range-max", type=int)
    norm.set_defaults(handler=herz_norm_command)

    split = subparsers.add_parser("decompose", help="decompose H(a) for one atom and certify the pieces")
    split.add_argument("--config", required=True)
    split.add_argument("--j-a", type=int)
    split.add_argument("--shape")
    split.set_defaults(handler=decompose_command)

    atom = subparsers.add_parser("atom", help="atom utilities")
    atom_commands = atom.add_subparsers(dest="atom_command", required=True)
    validate = atom_commands.add_parser("validate", help="check the four atom conditions")
    validate.add_argument("--atom", required=True)
    validate.add_argument("--params", required=True)
    validate.set_defaults(handler=atom_validate_command)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = args.log_level or Config().LOG_LEVEL
    logging.basicConfig(
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        level=getattr(logging, level, logging.INFO),
    )
    try:
        apply_overrides(
            {
                "k_min": args.k_min,
                "k_max": args.k_max,
                "nodes_per_octave": args.nodes_per_octave,
                "sphere_res": args.sphere_res,
                "seed": args.seed,
                "log_level": args.log_level,
            }
        )
        return args.handler(args)
    except _INPUT_ERRORS as exc:
        logger.error("%s", exc)
        return EXIT_BAD_INPUT


if __name__ == '__main__':
    sys.exit(main())
