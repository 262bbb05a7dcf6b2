"""
decompose.py - Per-octave decompositions of H(a) for a central atom a.

Rough operator: b_k is the part of H_{Phi,Omega}(a) coming from t in the kernel
octave k. Matrix operator: c_k is the part coming from the shell
2^{k-1} < ||A^{-1}(y)|| <= 2^k. Absolute mode uses |Phi|, |Omega| and |a|
throughout. Each piece carries the coefficient of its theorem and the explicit
normalisation factor, so piece / (coefficient * scale) is the candidate atom or unit.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from atoms import Atom, DyadicUnit, ValidationReport, validate_atom, validate_dyadic_unit
from bounds import (
    HERZ_TARGET,
    MATRIX_THEOREMS,
    ROUGH_THEOREMS,
    UNTRACKED_SIZE,
    TheoremParams,
    octave_family,
    size_factor,
)
from config import Config
from hausdorff import MatrixField, RadialKernel, SphereSymbol, conjugate_exponent, matrix_image, rough_image
from herz import HerzParams, SampledFunction

logger = logging.getLogger(__name__)

config = Config()

_calls = itertools.count(1)


class DecompositionError(ValueError):
    """Raised when an atom or kernel cannot be decomposed."""


@dataclass
class DecompositionPiece:
    k: int
    coefficient: float
    scale: float
    piece: SampledFunction
    theorem: str
    j: int
    vanishing_radius: Optional[float] = None
    moment_order: Optional[int] = None
    certification: Optional[ValidationReport] = None
    provenance: str = ""

    @property
    def normaliser(self) -> float:
        return self.coefficient * self.scale

    def normalized(self) -> SampledFunction:
        """piece / (coefficient * scale), the candidate atom or unit."""
        if self.normaliser == 0:
            return SampledFunction.zero(self.piece.dim, self.j)
        return self.piece.scaled(1.0 / self.normaliser)

    def __call__(self, points) -> np.ndarray:
        return self.piece(points)

    def to_dict(self) -> Dict[str, object]:
        return {
            "k": self.k,
            "coefficient": self.coefficient,
            "scale": self.scale,
            "support_index": self.j,
            "certification": None if self.certification is None else self.certification.to_dict(),
        }


@dataclass
class Decomposition:
    theorem: str
    pieces: List[DecompositionPiece] = field(default_factory=list)
    dropped: Dict[int, float] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return all(p.certification is None or p.certification.passed for p in self.pieces)

    def atomic_coefficients(self) -> List[float]:
        return [p.normaliser for p in self.pieces]

    def __iter__(self):
        return iter(self.pieces)

    def __len__(self) -> int:
        return len(self.pieces)


def _keep(family: Dict[int, float], decomposition: Decomposition) -> List[int]:
    """Octaves whose coefficient clears the drop threshold relative to the largest one."""
    largest = max((abs(v) for v in family.values()), default=0.0)
    kept = []
    for k, value in sorted(family.items()):
        if largest > 0 and abs(value) > config.DROP_THRESHOLD * largest:
            kept.append(k)
        elif value != 0:
            decomposition.dropped[k] = value
    if decomposition.dropped:
        logger.warning(
            "Dropped %d piece(s) below %.1e of the largest coefficient: octaves %s",
            len(decomposition.dropped),
            config.DROP_THRESHOLD,
            sorted(decomposition.dropped),
        )
    return kept


def _check_atom(atom: Atom, hp: HerzParams):
    report = validate_atom(atom, hp)
    if not report.passed:
        raise DecompositionError(
            f"Atom j_a={atom.j_a} fails {', '.join(report.failed_conditions())}; refusing to decompose"
        )


def decompose_rough(
    kernel: RadialKernel,
    omega: SphereSymbol,
    atom: Atom,
    tp: TheoremParams,
    signed: bool = True,
    theorem: Optional[str] = None,
    certify: bool = True,
) -> Decomposition:
    """
    Signed (Theorem 3.1): b_k over the support octaves of a compact kernel, Omega constant.
    Absolute (Theorems 3.2-3.4): |b|_k over the octaves where the kernel family is non-negligible.
    """
    theorem = theorem or ("3.1" if signed else "3.2")
    if theorem not in ROUGH_THEOREMS:
        raise DecompositionError(f"Theorem {theorem} is not a rough-operator theorem")
    if signed and theorem != "3.1":
        raise DecompositionError("Signed decompositions are only defined for theorem 3.1")
    if signed and not kernel.compact:
        raise DecompositionError("Signed mode needs Phi supported in (2^m, 2^M]")
    if signed and omega.constant is None:
        raise DecompositionError("Signed mode needs a constant symbol Omega")
    if omega.dim != atom.profile.dim:
        raise DecompositionError(f"Symbol dimension {omega.dim} does not match the atom's {atom.profile.dim}")
    _check_atom(atom, tp.hp)

    tag = f"rough-{next(_calls)}"
    decomposition = Decomposition(theorem=theorem)
    omega_norm = omega.lq_norm(conjugate_exponent(tp.hp.q))
    family = {k: omega_norm * v for k, v in octave_family(theorem, kernel, tp).items()}
    if not kernel.compact:
        decomposition.notes.append(f"kernel octaves scanned over [{min(family)}, {max(family)}]")

    for k in _keep(family, decomposition):
        piece = DecompositionPiece(
            k=k,
            coefficient=family[k],
            scale=size_factor(theorem, k, tp),
            piece=rough_image(kernel, omega, atom.profile, absolute=not signed, octaves=[k]),
            theorem=theorem,
            j=atom.j_a + k,
            vanishing_radius=2.0 ** (atom.r_a + k - 1) if signed else None,
            moment_order=0 if signed else None,
            provenance=tag,
        )
        if certify:
            piece.certification = certify_piece_as_atom(piece, tp, theorem)
        decomposition.pieces.append(piece)
    logger.debug("Rough decomposition %s: %d pieces, theorem %s", tag, len(decomposition), theorem)
    return decomposition


def decompose_matrix(
    kernel: RadialKernel,
    matrix_field: MatrixField,
    atom: Atom,
    tp: TheoremParams,
    signed: bool = True,
    theorem: Optional[str] = None,
    certify: bool = True,
) -> Decomposition:
    """Signed (Theorem 4.1) or absolute (Theorems 4.2-4.4) pieces c_k by ||A^{-1}||-shell."""
    theorem = theorem or ("4.1" if signed else "4.2")
    if theorem not in MATRIX_THEOREMS:
        raise DecompositionError(f"Theorem {theorem} is not a matrix-operator theorem")
    if signed and theorem != "4.1":
        raise DecompositionError("Signed decompositions are only defined for theorem 4.1")
    rho = tp.rho_A if tp.rho_A is not None else matrix_field.rho_A
    if signed and (rho is None or (tp.octave_bounds or matrix_field.octave_bounds) is None):
        raise DecompositionError("Signed mode needs declared rho_A and octave bounds (m, M) for the field")
    if matrix_field.dim != atom.profile.dim:
        raise DecompositionError(f"Field dimension {matrix_field.dim} does not match the atom's {atom.profile.dim}")
    _check_atom(atom, tp.hp)

    tag = f"matrix-{next(_calls)}"
    decomposition = Decomposition(theorem=theorem)
    family = octave_family(theorem, kernel, tp, matrix_field)

    for k in _keep(family, decomposition):
        piece = DecompositionPiece(
            k=k,
            coefficient=family[k],
            scale=size_factor(theorem, k, tp),
            piece=matrix_image(kernel, matrix_field, atom.profile, absolute=not signed, shells=[k], rho_A=rho),
            theorem=theorem,
            j=atom.j_a + k,
            vanishing_radius=atom.vanishing_radius * 2.0 ** (k - 1) / rho if signed else None,
            moment_order=atom.s if signed else None,
            provenance=tag,
        )
        if certify:
            piece.certification = certify_piece_as_atom(piece, tp, theorem)
        decomposition.pieces.append(piece)
    logger.debug("Matrix decomposition %s: %d pieces, theorem %s", tag, len(decomposition), theorem)
    return decomposition


def reconstruct(pieces: Sequence[DecompositionPiece], x) -> float:
    """sum_k coefficient_k * scale_k * normalized piece_k(x)."""
    pieces = list(getattr(pieces, "pieces", pieces))
    if not pieces:
        return 0.0
    tags = {p.provenance for p in pieces}
    if len(tags) > 1:
        raise DecompositionError(f"Pieces come from different decompositions: {sorted(tags)}")
    points = np.asarray(x, dtype=float).reshape(-1, pieces[0].piece.dim)
    total = np.zeros(points.shape[0])
    for p in pieces:
        if p.normaliser != 0:
            total += p.normaliser * p.normalized()(points)
    return float(total[0]) if total.size == 1 else total


def certify_piece_as_atom(piece: DecompositionPiece, tp: TheoremParams, theorem: Optional[str] = None) -> ValidationReport:
    """
    Run the normalised piece through the atom checks (signed theorems) or the
    dyadic-unit checks (Herz-target theorems). Failures are returned, not raised.
    """
    theorem = theorem or piece.theorem
    target = tp.target(theorem)
    tolerances = {
        "support": config.PIECE_TOLERANCE,
        "size": config.PIECE_TOLERANCE,
        "moment": config.PIECE_TOLERANCE,
    }
    if theorem in UNTRACKED_SIZE:
        tolerances["size"] = math.inf
    bound = target.atom_bound(piece.j)

    if piece.normaliser == 0:
        report = ValidationReport(kind="unit" if theorem in HERZ_TARGET else "atom")
        logger.debug("Zero piece k=%d certified trivially", piece.k)
        return report

    normalized = piece.normalized()
    if theorem in HERZ_TARGET:
        unit = DyadicUnit(k=piece.j, profile=normalized, certified_bound=bound, shape="piece")
        report = validate_dyadic_unit(unit, target, tolerances)
    else:
        candidate = Atom(
            j_a=piece.j,
            r_a=math.floor(math.log2(piece.vanishing_radius)),
            s=piece.moment_order or 0,
            profile=normalized,
            certified_bound=bound,
            shape="piece",
            inner_radius=piece.vanishing_radius,
        )
        report = validate_atom(candidate, target, tolerances)
    if not report.passed:
        logger.warning("Piece k=%d (theorem %s) fails %s", piece.k, theorem, ", ".join(report.failed_conditions()))
    return report
