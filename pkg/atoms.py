"""
atoms.py - Central atoms and dyadic central units: construction and validation.

An atom is built as a smooth bump on the annulus (2^{r_a}, 2^{j_a}] times a
shape factor, projected against the monomials x^gamma, |gamma| <= s, and then
rescaled so that its weighted L^q norm equals omega_1(B_{j_a})^{-alpha/n}.
Moments are taken against Lebesgue measure.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import Config
from herz import HerzParams, SampledFunction, sampled_lq_integral, weighted_lq_integral, weighted_lq_norm
from quadrature import SphereGrid, polar_nodes
from weights import Ball

logger = logging.getLogger(__name__)

config = Config()

SHAPES = ("radial-bump", "oscillating-radial", "tensor-polynomial")
UNIT_SHAPES = ("constant", "bump")

# Octaves beyond the support radius that are scanned for exterior mass.
_EXTERIOR_OCTAVES = 3
# Radial samples per sphere direction when checking vanishing near the origin.
_INNER_SAMPLES = 64
# Relative agreement required between a stored table and the regenerated profile.
_TABLE_TOLERANCE = 1e-8


class AtomError(ValueError):
    """Raised when an atom or unit cannot be constructed."""


@dataclass(frozen=True)
class Atom:
    j_a: int
    r_a: int
    s: int
    profile: SampledFunction
    certified_bound: float
    shape: str = ""
    seed: Optional[int] = None
    inner_radius: Optional[float] = None

    @property
    def k(self) -> int:
        return self.j_a

    @property
    def vanishing_radius(self) -> float:
        """a vanishes for |x| <= this radius."""
        return self.inner_radius if self.inner_radius is not None else 2.0**self.r_a

    def scaled(self, factor: float) -> "Atom":
        return replace(self, profile=self.profile.scaled(factor))

    def to_dict(self, table_nodes: int = 512) -> Dict[str, object]:
        """Atom spec, plus a radial table of the profile when the profile is radial."""
        data = {
            "kind": "atom",
            "j_a": self.j_a,
            "r_a": self.r_a,
            "s": self.s,
            "shape": self.shape,
            "seed": self.seed,
            "certified_bound": self.certified_bound,
        }
        if self.profile.radial:
            radii = np.linspace(self.vanishing_radius, 2.0**self.j_a, table_nodes)
            axis = np.zeros((table_nodes, self.profile.dim))
            axis[:, 0] = radii
            data["table"] = {"nodes": radii.tolist(), "values": self.profile(axis).tolist()}
        return data


@dataclass(frozen=True)
class DyadicUnit:
    k: int
    profile: SampledFunction
    certified_bound: float
    shape: str = ""


@dataclass
class ConditionResult:
    passed: bool
    residual: float
    detail: str = ""

    def to_dict(self) -> Dict[str, object]:
        return {"passed": self.passed, "residual": self.residual, "detail": self.detail}


@dataclass
class ValidationReport:
    kind: str
    conditions: Dict[str, ConditionResult] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(result.passed for result in self.conditions.values())

    def failed_conditions(self) -> List[str]:
        return [name for name, result in self.conditions.items() if not result.passed]

    def to_dict(self) -> Dict[str, object]:
        return {
            "kind": self.kind,
            "passed": self.passed,
            "conditions": {name: result.to_dict() for name, result in self.conditions.items()},
        }


def monomial_exponents(dim: int, order: int) -> List[Tuple[int, ...]]:
    """All multi-indices gamma with |gamma| <= order, graded."""
    exponents = [g for g in itertools.product(range(order + 1), repeat=dim) if sum(g) <= order]
    return sorted(exponents, key=lambda g: (sum(g), tuple(-c for c in g)))


def _monomials(points: np.ndarray, exponents: Sequence[Tuple[int, ...]]) -> np.ndarray:
    """(N, len(exponents)) matrix of x^gamma."""
    powers = np.asarray(exponents, dtype=float)
    if powers.size == 0:
        return np.ones((points.shape[0], 0))
    return np.prod(points[:, None, :] ** powers[None, :, :], axis=2)


def _support_nodes(
    f: SampledFunction,
    octaves: Sequence[int],
    sphere: Optional[SphereGrid] = None,
    nodes: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    sphere = sphere or SphereGrid.default(f.dim)
    nodes = nodes or config.NODES_PER_OCTAVE
    parts = [polar_nodes(k, sphere, nodes, config.QUADRATURE_RULE, f.breakpoints) for k in octaves]
    if not parts:
        return np.empty((0, f.dim)), np.empty(0)
    return np.concatenate([p for p, _ in parts]), np.concatenate([w for _, w in parts])


def lebesgue_moments(
    f: SampledFunction,
    order: int,
    octaves: Optional[Sequence[int]] = None,
    sphere: Optional[SphereGrid] = None,
    nodes: Optional[int] = None,
) -> Tuple[Dict[Tuple[int, ...], float], float]:
    """Moments int f x^gamma dx for |gamma| <= order, and the L^1 norm of f."""
    octaves = list(octaves) if octaves is not None else list(f.octaves())
    points, weights = _support_nodes(f, octaves, sphere, nodes)
    values = f(points)
    exponents = monomial_exponents(f.dim, order)
    moments = (weights * values) @ _monomials(points, exponents)
    return dict(zip(exponents, moments.tolist())), float(weights @ np.abs(values))


def _bump(r: np.ndarray, inner: float, outer: float) -> Tuple[np.ndarray, np.ndarray]:
    u = (r - inner) / (outer - inner)
    inside = (u > 0) & (u < 1)
    return np.where(inside, (u * (1.0 - u)) ** 3, 0.0), u


def _shape_factor(
    shape: str,
    points: np.ndarray,
    u: np.ndarray,
    s: int,
    outer: float,
    tensor_terms: Sequence[Tuple[Tuple[int, ...], float]],
) -> np.ndarray:
    if shape == "radial-bump":
        return 1.0 - 2.0 * u
    if shape == "oscillating-radial":
        return np.cos(math.pi * (s + 2) * u)
    extra = np.zeros(points.shape[0])
    for gamma, coefficient in tensor_terms:
        extra = extra + coefficient * np.prod((points / outer) ** np.asarray(gamma), axis=1)
    return 1.0 - 2.0 * u + extra


def make_central_atom(
    j_a: int,
    hp: HerzParams,
    r_a: Optional[int] = None,
    s: Optional[int] = None,
    shape: str = "radial-bump",
    seed: Optional[int] = None,
) -> Atom:
    """
    Central (alpha, q, s; omega_1, omega_2)_0-atom supported in B_{j_a} and
    vanishing on B_{r_a}. s defaults to the least admissible moment order.
    """
    if shape not in SHAPES:
        raise AtomError(f"Unknown atom shape {shape!r}; expected one of {SHAPES}")
    if not hp.hardy_admissible:
        raise AtomError(
            f"Central atoms need q > 1 and alpha >= n(1-1/q) = {hp.critical_alpha:.6g}, got alpha={hp.alpha}"
        )
    r_a = j_a - 3 if r_a is None else int(r_a)
    if r_a >= j_a:
        raise AtomError(f"Vanishing radius index r_a={r_a} must be below j_a={j_a}")
    s = hp.min_moment_order if s is None else int(s)
    if s < hp.min_moment_order:
        raise AtomError(f"Moment order s={s} is below the required {hp.min_moment_order}")
    seed = config.SEED if seed is None else seed

    dim = hp.dim
    inner, outer = 2.0**r_a, 2.0**j_a
    rng = np.random.default_rng(seed)
    tensor_terms = []
    if shape == "tensor-polynomial":
        top = [g for g in monomial_exponents(dim, s + 1) if sum(g) == s + 1]
        tensor_terms = [(g, float(c)) for g, c in zip(top, rng.uniform(-1.0, 1.0, len(top)))]

    def raw(points):
        r = np.linalg.norm(points, axis=1)
        bump, u = _bump(r, inner, outer)
        return bump, _shape_factor(shape, points, u, s, outer, tensor_terms)

    # Gram projection on the quadrature rule used by validation.
    octaves = list(range(r_a + 1, j_a + 1))
    skeleton = SampledFunction(lambda p: raw(p)[0], dim, (r_a + 1, j_a))
    points, weights = _support_nodes(skeleton, octaves)
    bump, shape_values = raw(points)
    exponents = monomial_exponents(dim, s)
    basis = _monomials(points / outer, exponents)
    gram = (basis * (weights * bump)[:, None]).T @ basis
    rhs = basis.T @ (weights * bump * shape_values)
    coefficients = np.linalg.solve(gram, rhs)

    projected = bump * (shape_values - basis @ coefficients)
    before = math.sqrt(weights @ (bump * shape_values) ** 2)
    after = math.sqrt(weights @ projected**2)
    if not after > 1e-8 * before:
        raise AtomError(
            f"Projection annihilated the {shape} profile (j_a={j_a}, s={s}); try another shape or seed"
        )

    def unscaled(points):
        bump, shape_values = raw(points)
        return bump * (shape_values - _monomials(points / outer, exponents) @ coefficients)

    profile = SampledFunction(
        evaluator=unscaled,
        dim=dim,
        support=(r_a + 1, j_a),
        radial=shape != "tensor-polynomial",
        label=f"atom[{shape},j={j_a}]",
    )
    bound = hp.atom_bound(j_a)
    norm = weighted_lq_norm(profile, hp.q, hp.w2)
    atom = Atom(
        j_a=j_a,
        r_a=r_a,
        s=s,
        profile=profile.scaled(bound / norm),
        certified_bound=bound,
        shape=shape,
        seed=seed,
    )
    logger.debug("Built %s atom j_a=%d r_a=%d s=%d (bound %.6g)", shape, j_a, r_a, s, bound)
    return atom


def _read_table(data: Dict[str, object], j_a: int) -> Tuple[np.ndarray, np.ndarray]:
    try:
        nodes = np.asarray(data["table"]["nodes"], dtype=float)
        values = np.asarray(data["table"]["values"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise AtomError(f"Malformed atom table: {exc}") from exc
    if nodes.ndim != 1 or nodes.shape != values.shape or nodes.size < 2 or np.any(np.diff(nodes) <= 0):
        raise AtomError("Atom table needs matching nodes and values with strictly increasing nodes")
    if not nodes[0] > 0:
        raise AtomError("Atom table must start at a positive vanishing radius")
    if nodes[-1] > 2.0**j_a * (1.0 + 1e-12):
        raise AtomError(f"Atom table reaches |x| = {nodes[-1]:.6g}, beyond B_{j_a}")
    return nodes, values


def _tabulated_atom(data: Dict[str, object], j_a: int, hp: HerzParams, nodes: np.ndarray, values: np.ndarray) -> Atom:
    def evaluator(points):
        r = np.linalg.norm(points, axis=1)
        return np.interp(r, nodes, values, left=0.0, right=0.0)

    profile = SampledFunction(
        evaluator=evaluator,
        dim=hp.dim,
        support=(int(math.floor(math.log2(nodes[0]))) + 1, j_a),
        breakpoints=(float(nodes[0]),),
        radial=True,
        label=f"atom[table,j={j_a}]",
    )
    return Atom(
        j_a=j_a,
        r_a=int(data.get("r_a", j_a - 3)),
        s=int(data.get("s", hp.min_moment_order)),
        profile=profile,
        certified_bound=float(data.get("certified_bound", hp.atom_bound(j_a))),
        shape=str(data.get("shape", "table")),
        seed=data.get("seed"),
        inner_radius=float(nodes[0]),
    )


def atom_from_dict(data: Dict[str, object], hp: HerzParams) -> Atom:
    """
    Rebuild an atom from its serialized form.

    Generated shapes are regenerated from {j_a, r_a, s, shape, seed}; a radial
    table stored alongside must then agree with the regenerated profile at its
    nodes. Any other shape needs the table, which becomes the profile (linear
    in |x| between nodes, zero outside them).
    """
    try:
        j_a = int(data["j_a"])
    except KeyError as exc:
        raise AtomError("Atom spec needs j_a") from exc
    shape = str(data.get("shape") or ("table" if data.get("table") is not None else "radial-bump"))
    table = _read_table(data, j_a) if data.get("table") is not None else None

    if shape not in SHAPES:
        if table is None:
            raise AtomError(f"Atom of shape {shape!r} needs a radial table")
        return _tabulated_atom(data, j_a, hp, *table)

    atom = make_central_atom(j_a, hp, r_a=data.get("r_a"), s=data.get("s"), shape=shape, seed=data.get("seed"))
    if table is not None:
        nodes, values = table
        axis = np.zeros((nodes.size, hp.dim))
        axis[:, 0] = nodes
        regenerated = atom.profile(axis)
        scale = max(float(np.max(np.abs(values))), 1e-300)
        mismatch = float(np.max(np.abs(regenerated - values))) / scale
        if mismatch > _TABLE_TOLERANCE:
            raise AtomError(
                f"Stored table differs from the regenerated {shape} atom by {mismatch:.3e}; "
                "the seed or the quadrature grid has changed"
            )
    return atom


def _exterior_check(f: SampledFunction, j: int, hp: HerzParams, bound: float, tolerance: float) -> ConditionResult:
    top = max(j + _EXTERIOR_OCTAVES, f.support[1])
    exterior = sampled_lq_integral(f, hp.q, hp.w2, range(j + 1, top + 1)).value
    residual = max(exterior, 0.0) ** (1.0 / hp.q) / bound if bound > 0 else 0.0
    return ConditionResult(
        passed=residual <= tolerance,
        residual=residual,
        detail=f"exterior L^q(w2) mass over octaves {j + 1}..{top} relative to the bound",
    )


def _size_check(f: SampledFunction, j: int, hp: HerzParams, bound: float, tolerance: float) -> ConditionResult:
    k_lo, k_hi = f.support
    lowest = min(j, k_hi if k_lo is None else k_lo) - _EXTERIOR_OCTAVES
    window = range(lowest, max(j, k_hi) + _EXTERIOR_OCTAVES + 1)
    total = sampled_lq_integral(f, hp.q, hp.w2, window).value
    # Below the window only what the declared support admits is integrated.
    total += weighted_lq_integral(f, hp.q, hp.w2, Ball.dyadic(lowest - 1)).value
    norm = max(total, 0.0) ** (1.0 / hp.q)
    residual = norm / bound
    return ConditionResult(
        passed=residual <= 1.0 + tolerance,
        residual=residual,
        detail=f"||a||_L^q(w2) = {norm:.12g}, bound {bound:.12g}",
    )


def _moment_check(f: SampledFunction, s: int, j: int, tolerance: float) -> ConditionResult:
    k_lo = f.support[0]
    octaves = range(k_lo if k_lo is not None else j - 40, j + 1)
    moments, l1 = lebesgue_moments(f, s, octaves)
    worst = max((abs(v) for v in moments.values()), default=0.0)
    residual = worst / l1 if l1 > 0 else 0.0
    return ConditionResult(
        passed=residual <= tolerance,
        residual=residual,
        detail=f"max |moment| over |gamma| <= {s} relative to the L^1 norm {l1:.6g}",
    )


def _vanishing_check(f: SampledFunction, radius: float, j: int, tolerance: float) -> ConditionResult:
    sphere = SphereGrid.default(f.dim)
    directions, _ = sphere.nodes()
    radii = radius * np.linspace(1.0 / _INNER_SAMPLES, 1.0, _INNER_SAMPLES)
    inner = f((radii[:, None, None] * directions[None, :, :]).reshape(-1, f.dim))
    outer_points, _ = _support_nodes(f, range(int(math.floor(math.log2(radius))) + 1, j + 1))
    peak = float(np.max(np.abs(f(outer_points)))) if outer_points.size else 0.0
    worst = float(np.max(np.abs(inner)))
    residual = worst / peak if peak > 0 else worst
    return ConditionResult(
        passed=residual <= tolerance,
        residual=residual,
        detail=f"max |a| on |x| <= {radius:.6g} relative to the sampled peak",
    )


def validate_atom(a: Atom, hp: HerzParams, tols: Optional[Dict[str, float]] = None) -> ValidationReport:
    """Check conditions (i) support, (ii) size, (iii) moments and (iv) vanishing near 0."""
    tols = {**config.tolerances(), **(tols or {})}
    report = ValidationReport(kind="atom")
    report.conditions["support"] = _exterior_check(a.profile, a.j_a, hp, a.certified_bound, tols["support"])
    report.conditions["size"] = _size_check(a.profile, a.j_a, hp, a.certified_bound, tols["size"])
    report.conditions["moments"] = _moment_check(a.profile, a.s, a.j_a, tols["moment"])
    report.conditions["vanishing"] = _vanishing_check(a.profile, a.vanishing_radius, a.j_a, tols["support"])
    if not report.passed:
        logger.warning("Atom j_a=%d fails %s", a.j_a, ", ".join(report.failed_conditions()))
    return report


def make_dyadic_unit(k: int, hp: HerzParams, shape: str = "constant", coefficient: float = 1.0) -> DyadicUnit:
    """Dyadic central unit on B_k with weighted L^q norm coefficient * omega_1(B_k)^{-alpha/n}."""
    if shape not in UNIT_SHAPES:
        raise AtomError(f"Unknown unit shape {shape!r}; expected one of {UNIT_SHAPES}")
    outer = 2.0**k

    def raw(points):
        r = np.linalg.norm(points, axis=1)
        if shape == "constant":
            return np.where(r <= outer, 1.0, 0.0)
        return np.where(r <= outer, (1.0 - (r / outer) ** 2) ** 2, 0.0)

    profile = SampledFunction(evaluator=raw, dim=hp.dim, support=(None, k), radial=True, label=f"unit[{shape},k={k}]")
    bound = hp.atom_bound(k)
    norm = weighted_lq_norm(profile, hp.q, hp.w2)
    return DyadicUnit(k=k, profile=profile.scaled(coefficient * bound / norm), certified_bound=bound, shape=shape)


def validate_dyadic_unit(u, hp: HerzParams, tols: Optional[Dict[str, float]] = None) -> ValidationReport:
    """Conditions (i) and (ii) only; atoms are accepted with k = j_a."""
    tols = {**config.tolerances(), **(tols or {})}
    report = ValidationReport(kind="unit")
    report.conditions["support"] = _exterior_check(u.profile, u.k, hp, u.certified_bound, tols["support"])
    report.conditions["size"] = _size_check(u.profile, u.k, hp, u.certified_bound, tols["size"])
    if not report.passed:
        logger.warning("Unit k=%d fails %s", u.k, ", ".join(report.failed_conditions()))
    return report
