"""
harness.py - Experiment configuration, the theorem-verification driver and report emission.

For every generated atom the driver decomposes H(a), certifies the pieces, and
compares the norm of H(a) in the theorem's target space with the theorem's constant.
"""

import asyncio
import csv
import json
import logging
import math
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

import atoms
import bounds
import decompose
import hausdorff
import herz
import quadrature
import weights
from atoms import AtomError, make_central_atom, SHAPES
from bounds import (
    HERZ_TARGET,
    MATRIX_THEOREMS,
    ROUGH_THEOREMS,
    BoundsError,
    ConstantValue,
    GateReport,
    TheoremParams,
    gate_thm,
    theorem_constant,
)
from config import Config
from decompose import Decomposition, DecompositionError, decompose_matrix, decompose_rough
from hausdorff import (
    HausdorffError,
    MatrixField,
    RadialKernel,
    SphereSymbol,
    conjugate_exponent,
    field_from_dict,
    kernel_from_dict,
    matrix_image,
    rough_image,
    symbol_from_dict,
)
from herz import HerzError, block_norm_upper_bound, combine, finite_atomic_norm, herz_norm
from weights import WeightError

logger = logging.getLogger(__name__)

config = Config()

CSV_COLUMNS = [
    "atom_id",
    "j_a",
    "shape",
    "lhs",
    "constant",
    "ratio",
    "majorant",
    "pieces",
    "certified",
    "error",
]

_GRID_KEYS = {
    "k_min": "K_MIN",
    "k_max": "K_MAX",
    "nodes_per_octave": "NODES_PER_OCTAVE",
    "rule": "QUADRATURE_RULE",
    "sphere_res": "SPHERE_RES",
}
_TOLERANCE_KEYS = {
    "tail": "TAIL_TOLERANCE",
    "drop": "DROP_THRESHOLD",
    "moment": "MOMENT_TOLERANCE",
    "size": "SIZE_TOLERANCE",
    "support": "SUPPORT_TOLERANCE",
    "piece": "PIECE_TOLERANCE",
    "partition": "PARTITION_TOLERANCE",
    "ratio_cap": "RATIO_CAP",
}
_CONFIGURED_MODULES = (quadrature, weights, herz, atoms, hausdorff, bounds, decompose, sys.modules[__name__])


class ConfigError(ValueError):
    """Raised for experiment files that cannot be resolved."""


def apply_overrides(settings: Dict[str, object]):
    """Set grid/tolerance/seed overrides on the configuration every module reads."""
    names = {**_GRID_KEYS, **_TOLERANCE_KEYS, "seed": "SEED", "log_level": "LOG_LEVEL"}
    for key, value in settings.items():
        if value is None:
            continue
        if key not in names:
            raise ConfigError(f"Unknown setting {key!r}")
        for module in _CONFIGURED_MODULES:
            setattr(module.config, names[key], value)
    for module in _CONFIGURED_MODULES:
        try:
            module.config._validate_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass
class AtomSpec:
    atom_id: str
    j_a: int
    shape: str
    seed: int
    r_a: Optional[int] = None
    s: Optional[int] = None


@dataclass
class ExperimentConfig:
    theorem: str
    tp: TheoremParams
    kernel: RadialKernel
    omega: Optional[SphereSymbol] = None
    matrix_field: Optional[MatrixField] = None
    j_values: List[int] = field(default_factory=lambda: list(range(-4, 5)))
    shapes: List[str] = field(default_factory=lambda: ["radial-bump"])
    r_offset: int = 3
    moment_order: Optional[int] = None
    count: Optional[int] = None
    seed: int = 0
    grid: Dict[str, object] = field(default_factory=dict)
    tolerances: Dict[str, float] = field(default_factory=dict)
    output: Optional[str] = None
    source: Dict[str, object] = field(default_factory=dict)

    @property
    def rough(self) -> bool:
        return self.theorem in ROUGH_THEOREMS

    def atom_specs(self) -> List[AtomSpec]:
        specs = []
        for j_a in self.j_values:
            for shape in self.shapes:
                index = len(specs)
                specs.append(
                    AtomSpec(
                        atom_id=f"{shape}@{j_a}#{index}",
                        j_a=j_a,
                        shape=shape,
                        seed=self.seed + index,
                        r_a=j_a - self.r_offset,
                        s=self.moment_order,
                    )
                )
        return specs[: self.count] if self.count is not None else specs

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "ExperimentConfig":
        try:
            theorem = str(data["theorem"])
            if theorem not in bounds.THEOREMS:
                raise ConfigError(f"Unknown theorem {theorem!r}; expected one of {bounds.THEOREMS}")
            tp = TheoremParams.from_dict({**data.get("theorem_params", {}), "hp": data["params"]})
            dim = tp.hp.dim
            kernel = kernel_from_dict(data["kernel"])
            omega = symbol_from_dict(data.get("symbol"), dim) if theorem in ROUGH_THEOREMS else None
            matrix_field = None
            if theorem in MATRIX_THEOREMS:
                if "field" not in data:
                    raise ConfigError(f"Theorem {theorem} needs a 'field' entry")
                matrix_field = field_from_dict(data["field"], dim)
            family = data.get("atoms", {})
            shapes = list(family.get("shapes", ["radial-bump"]))
            unknown = [s for s in shapes if s not in SHAPES]
            if unknown:
                raise ConfigError(f"Unknown atom shapes {unknown}; expected any of {SHAPES}")
            return cls(
                theorem=theorem,
                tp=tp,
                kernel=kernel,
                omega=omega,
                matrix_field=matrix_field,
                j_values=[int(j) for j in family.get("j_a", range(-4, 5))],
                shapes=shapes,
                r_offset=int(family.get("r_offset", 3)),
                moment_order=family.get("s"),
                count=family.get("count"),
                seed=int(data.get("seed", config.SEED)),
                grid=dict(data.get("grid", {})),
                tolerances=dict(data.get("tolerances", {})),
                output=data.get("output"),
                source=dict(data),
            )
        except KeyError as exc:
            raise ConfigError(f"Experiment config is missing {exc}") from exc
        except (HausdorffError, HerzError, WeightError, BoundsError, TypeError) as exc:
            raise ConfigError(f"Experiment config cannot be resolved: {exc}") from exc

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as handle:
                data = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"Cannot read experiment config {path}: {exc}") from exc
        return cls.from_dict(data)


@dataclass
class VerificationReport:
    theorem: str
    gate: GateReport
    rows: List[Dict[str, object]] = field(default_factory=list)
    constant: Optional[ConstantValue] = None
    provenance: Dict[str, object] = field(default_factory=dict)

    @property
    def ran(self) -> bool:
        return self.gate.passed

    @property
    def certified(self) -> bool:
        return all(row["certified"] and not row["error"] for row in self.rows)

    def aggregate(self) -> Dict[str, object]:
        ratios = [row["ratio"] for row in self.rows if row["ratio"] is not None]
        positive = [r for r in ratios if r > 0]
        return {
            "rows": len(self.rows),
            "certified_rows": sum(1 for row in self.rows if row["certified"] and not row["error"]),
            "max_ratio": max(ratios) if ratios else None,
            "min_ratio": min(ratios) if ratios else None,
            "spread": max(positive) / min(positive) if positive else 1.0,
            "gate_margins": self.gate.margins(),
        }

    def to_dict(self) -> Dict[str, object]:
        return {
            "theorem": self.theorem,
            "gate": self.gate.to_dict(),
            "constant": None if self.constant is None else self.constant.to_dict(),
            "rows": self.rows,
            "aggregate": self.aggregate(),
            "provenance": self.provenance,
        }


def _provenance(cfg: ExperimentConfig, gate: GateReport) -> Dict[str, object]:
    return {
        "grid": config.grid_settings(),
        "tolerances": config.tolerances(),
        "seed": cfg.seed,
        "gate_passed": gate.passed,
        "theorem_params": cfg.tp.to_dict(),
        "kernel": cfg.kernel.to_dict(),
        "symbol": None if cfg.omega is None else cfg.omega.to_dict(),
        "field": None if cfg.matrix_field is None else cfg.matrix_field.to_dict(),
        "versions": {"python": platform.python_version(), "numpy": np.__version__},
    }


def decompose_atom(cfg: ExperimentConfig, atom, signed: Optional[bool] = None) -> Decomposition:
    signed = cfg.theorem in ("3.1", "4.1") if signed is None else signed
    if cfg.rough:
        return decompose_rough(cfg.kernel, cfg.omega, atom, cfg.tp, signed=signed, theorem=cfg.theorem)
    return decompose_matrix(cfg.kernel, cfg.matrix_field, atom, cfg.tp, signed=signed, theorem=cfg.theorem)


def _image(cfg: ExperimentConfig, atom):
    if cfg.rough:
        return rough_image(cfg.kernel, cfg.omega, atom.profile)
    return matrix_image(cfg.kernel, cfg.matrix_field, atom.profile, rho_A=cfg.tp.rho_A)


def _ratio(lhs: float, constant: float) -> float:
    if lhs == 0:
        return 0.0
    return lhs / constant if constant > 0 else math.inf


def _verify_atom(cfg: ExperimentConfig, spec: AtomSpec, constant: float) -> Dict[str, object]:
    row = {
        "atom_id": spec.atom_id,
        "j_a": spec.j_a,
        "shape": spec.shape,
        "lhs": None,
        "constant": constant,
        "ratio": None,
        "majorant": None,
        "pieces": 0,
        "certified": False,
        "error": "",
    }
    try:
        atom = make_central_atom(spec.j_a, cfg.tp.hp, r_a=spec.r_a, s=spec.s, shape=spec.shape, seed=spec.seed)
        decomposition = decompose_atom(cfg, atom)
        row["pieces"] = len(decomposition)
        row["certified"] = decomposition.certified
        # Pieces were certified inside decompose_atom; row["certified"] carries the verdict.
        units = [(c, None) for c in decomposition.atomic_coefficients()]
        if cfg.theorem in HERZ_TARGET:
            target = cfg.tp.target(cfg.theorem)
            row["lhs"] = herz_norm(_image(cfg, atom), target).value
            if decomposition.pieces:
                majorant = combine([p.piece for p in decomposition])
                row["majorant"] = herz_norm(majorant, target).value
            row["block_bound"] = block_norm_upper_bound(units, target.p, validate=False)
        else:
            row["lhs"] = finite_atomic_norm(units, cfg.tp.hp.p, validate=False)
        row["ratio"] = _ratio(row["lhs"], constant)
    except (AtomError, DecompositionError, HerzError, HausdorffError, BoundsError) as exc:
        logger.warning("Atom %s could not be verified: %s", spec.atom_id, exc)
        row["error"] = str(exc)
    if not row["certified"]:
        logger.warning("Atom %s: decomposition not certified", spec.atom_id)
    return row


async def run_verification_async(cfg: ExperimentConfig) -> VerificationReport:
    """Gate, then verify every atom of the family; atoms run in the default executor."""
    gate = gate_thm(cfg.tp, cfg.theorem, cfg.kernel, cfg.matrix_field, cfg.omega)
    report = VerificationReport(theorem=cfg.theorem, gate=gate, provenance=_provenance(cfg, gate))
    if not gate.passed:
        logger.warning("Theorem %s not run; failed hypotheses: %s", cfg.theorem, ", ".join(gate.failed()))
        return report

    report.constant = theorem_constant(cfg.theorem, cfg.kernel, cfg.tp, cfg.matrix_field)
    constant = report.constant.value
    if cfg.rough:
        constant *= cfg.omega.lq_norm(conjugate_exponent(cfg.tp.hp.q))

    specs = cfg.atom_specs()
    if config.CONCURRENT_ATOMS:
        loop = asyncio.get_running_loop()
        tasks = [loop.run_in_executor(None, _verify_atom, cfg, spec, constant) for spec in specs]
        report.rows = list(await asyncio.gather(*tasks))
    else:
        report.rows = [_verify_atom(cfg, spec, constant) for spec in specs]

    aggregate = report.aggregate()
    logger.info(
        "Theorem %s: %d/%d rows certified, max ratio %s, spread %.4g",
        cfg.theorem,
        aggregate["certified_rows"],
        aggregate["rows"],
        aggregate["max_ratio"],
        aggregate["spread"],
    )
    return report


def run_verification(cfg: ExperimentConfig) -> VerificationReport:
    if cfg.grid or cfg.tolerances or cfg.seed != config.SEED:
        apply_overrides({**cfg.grid, **cfg.tolerances, "seed": cfg.seed})
    return asyncio.run(run_verification_async(cfg))


def _write_csv(rows: Sequence[Dict[str, object]], path: Path):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(["" if row.get(column) is None else row.get(column) for column in CSV_COLUMNS])


def emit_report(report: VerificationReport, path, fmt: Optional[str] = None) -> Path:
    """Write the report as JSON (lossless) or CSV (fixed columns, one row per atom)."""
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".") or "json").lower()
    if fmt not in ("json", "csv"):
        raise ValueError(f"Unknown report format {fmt!r}; use json or csv")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            with open(path, "w", encoding="utf-8") as handle:
                json.dump(report.to_dict(), handle, indent=2, sort_keys=True)
        else:
            _write_csv(report.rows, path)
    except OSError:
        logger.exception("Failed to write report to %s", path)
        raise
    logger.info("Wrote %d rows to %s", len(report.rows), path)
    return path


def reconstruction_residual(cfg: ExperimentConfig, atom, decomposition: Decomposition, count: int = 30) -> float:
    """max |reconstruct(x) - H(a)(x)| / (1 + |H(a)(x)|) over random x across the image support."""
    if not decomposition.pieces:
        return 0.0
    rng = np.random.default_rng(cfg.seed)
    dim = cfg.tp.hp.dim
    top = max(p.j for p in decomposition)
    radii = 2.0 ** rng.uniform(atom.r_a - 2, top, count)
    directions = rng.normal(size=(count, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    xs = radii[:, None] * directions
    absolute = cfg.theorem not in ("3.1", "4.1")
    if cfg.rough:
        direct = hausdorff.rough_values(cfg.kernel, cfg.omega, atom.profile, xs, absolute=absolute)
    else:
        direct = hausdorff.matrix_values(cfg.kernel, cfg.matrix_field, atom.profile, xs, absolute=absolute)
    rebuilt = np.atleast_1d(decompose.reconstruct(decomposition, xs))
    return float(np.max(np.abs(rebuilt - direct) / (1.0 + np.abs(direct))))
