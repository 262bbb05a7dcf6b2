"""
herz.py - Two-weighted Herz norms over dyadic annuli and finite atomic norms.

The Herz-type Hardy norm is never computed from a maximal function; on finite
atomic combinations the finite atomic norm of a given representation stands in
for it (an upper bound for the infimum over representations).
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from config import Config
from quadrature import (
    QuadratureError,
    QuadratureResult,
    SphereGrid,
    integrate_to_origin,
    octave_of,
    polar_octave,
)
from weights import Ball, Weight, ball_weight, check_ap_power

logger = logging.getLogger(__name__)

config = Config()

Support = Tuple[Optional[int], int]


class HerzError(ValueError):
    """Raised for invalid Herz parameters or norms that cannot be evaluated."""


@dataclass(frozen=True)
class HerzParams:
    alpha: float
    p: float
    q: float
    w1: Weight
    w2: Weight

    def __post_init__(self):
        if not self.p > 0:
            raise HerzError(f"p must be positive, got {self.p}")
        if not self.q >= 1:
            raise HerzError(f"q must be at least 1, got {self.q}")
        if self.w1.dim != self.w2.dim:
            raise HerzError("w1 and w2 must live in the same dimension")

    @property
    def dim(self) -> int:
        return self.w1.dim

    @property
    def critical_alpha(self) -> float:
        """n(1 - 1/q), the smallest alpha admitted by central atoms."""
        return self.dim * (1.0 - 1.0 / self.q)

    @property
    def hardy_admissible(self) -> bool:
        return self.q > 1 and self.alpha >= self.critical_alpha - 1e-12

    @property
    def min_moment_order(self) -> int:
        return max(0, math.floor(self.alpha - self.critical_alpha + 1e-12))

    @property
    def a1_weights(self) -> bool:
        return all(w.is_power and check_ap_power(w.beta, self.dim, 1) for w in (self.w1, self.w2))

    def atom_bound(self, j: int) -> float:
        """omega_1(B_j)^{-alpha/n}, the size bound of atoms and units supported in B_j."""
        return ball_weight(self.w1, Ball.dyadic(j)) ** (-self.alpha / self.dim)

    def with_target(self, alpha: float, q: float) -> "HerzParams":
        return replace(self, alpha=alpha, q=q)

    def to_dict(self) -> Dict[str, object]:
        return {
            "alpha": self.alpha,
            "p": self.p,
            "q": self.q,
            "dim": self.dim,
            "w1": self.w1.to_dict(),
            "w2": self.w2.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "HerzParams":
        dim = int(data["dim"])
        return cls(
            alpha=float(data["alpha"]),
            p=float(data["p"]),
            q=float(data["q"]),
            w1=Weight.from_dict(data.get("w1", {"kind": "power", "beta": 0.0}), dim),
            w2=Weight.from_dict(data.get("w2", {"kind": "power", "beta": 0.0}), dim),
        )


@dataclass(frozen=True)
class SampledFunction:
    """
    A function on R^n with a declared support: it vanishes outside
    2^{k_lo-1} < |x| <= 2^{k_hi} (k_lo is None when the support reaches the origin).
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    dim: int
    support: Support
    breakpoints: Tuple[float, ...] = ()
    radial: bool = False
    label: str = ""

    def __call__(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, self.dim)
        return np.broadcast_to(np.asarray(self.evaluator(points), dtype=float), (points.shape[0],))

    def scaled(self, factor: float) -> "SampledFunction":
        base = self.evaluator
        return replace(self, evaluator=lambda points: factor * base(points), label=f"{factor}*{self.label}")

    def absolute(self) -> "SampledFunction":
        base = self.evaluator
        return replace(self, evaluator=lambda points: np.abs(base(points)), label=f"|{self.label}|")

    def dilated(self, lam: float) -> "SampledFunction":
        """x -> f(lam * x)."""
        base = self.evaluator
        shift = math.log2(lam)
        whole = float(shift).is_integer()
        k_lo, k_hi = self.support
        new_lo = None if k_lo is None else (k_lo - int(shift) if whole else math.floor(k_lo - shift))
        new_hi = k_hi - int(shift) if whole else math.ceil(k_hi - shift)
        return replace(
            self,
            evaluator=lambda points: base(lam * points),
            support=(new_lo, new_hi),
            breakpoints=tuple(b / lam for b in self.breakpoints),
            label=f"{self.label}({lam}x)",
        )

    def octaves(self) -> range:
        k_lo, k_hi = self.support
        if k_lo is None:
            raise HerzError("Support reaches the origin; octaves are unbounded below")
        return range(k_lo, k_hi + 1)

    @classmethod
    def zero(cls, dim: int, k: int = 0) -> "SampledFunction":
        return cls(evaluator=lambda points: np.zeros(points.shape[0]), dim=dim, support=(k, k), radial=True, label="0")


def combine(functions: Sequence[SampledFunction], coefficients: Optional[Sequence[float]] = None) -> SampledFunction:
    """Linear combination sum c_i f_i with the union of the supports."""
    if not functions:
        raise HerzError("Cannot combine an empty list of functions")
    coefficients = list(coefficients) if coefficients is not None else [1.0] * len(functions)
    lows = [f.support[0] for f in functions]
    k_lo = None if any(lo is None for lo in lows) else min(lows)
    k_hi = max(f.support[1] for f in functions)

    def evaluator(points):
        total = np.zeros(points.shape[0])
        for c, f in zip(coefficients, functions):
            total = total + c * f(points)
        return total

    # Each member may jump at its own support edges.
    edges = {b for f in functions for b in f.breakpoints}
    for f in functions:
        lo, hi = f.support
        edges.add(2.0**hi)
        if lo is not None:
            edges.add(2.0 ** (lo - 1))
    breakpoints = tuple(sorted(edges))
    return SampledFunction(
        evaluator=evaluator,
        dim=functions[0].dim,
        support=(k_lo, k_hi),
        breakpoints=breakpoints,
        radial=all(f.radial for f in functions),
        label="+".join(f.label for f in functions),
    )


@dataclass
class HerzNorm:
    value: float
    per_annulus: Dict[int, float] = field(default_factory=dict)
    tail_estimate: float = 0.0
    k_range: Optional[Tuple[int, int]] = None

    def to_dict(self) -> Dict[str, object]:
        return {
            "value": self.value,
            "per_annulus": [{"k": k, "term": v} for k, v in sorted(self.per_annulus.items())],
            "tail_estimate": self.tail_estimate,
            "k_range": list(self.k_range) if self.k_range else None,
        }


def _lq_shell(
    f: SampledFunction,
    q: float,
    w: Weight,
    k: int,
    sphere: SphereGrid,
    nodes: int,
    radius: Optional[float] = None,
) -> float:
    """int over the shell k (cut at `radius` when given) of |f|^q w."""

    def integrand(points):
        values = np.abs(f(points)) ** q * w(points)
        if radius is not None:
            values = np.where(np.linalg.norm(points, axis=1) <= radius, values, 0.0)
        return values

    breakpoints = f.breakpoints + ((radius,) if radius is not None else ())
    return polar_octave(integrand, k, sphere, nodes, config.QUADRATURE_RULE, breakpoints)


def weighted_lq_integral(
    f: SampledFunction,
    q: float,
    w: Weight,
    region: Union[None, int, Ball] = None,
    sphere: Optional[SphereGrid] = None,
    nodes: Optional[int] = None,
) -> QuadratureResult:
    """int_region |f|^q w as a quadrature result (region: R^n, annulus index, or centred ball)."""
    if q < 1:
        raise HerzError(f"q must be at least 1, got {q}")
    sphere = sphere or SphereGrid.default(f.dim)
    nodes = nodes or config.NODES_PER_OCTAVE
    k_lo, k_hi = f.support
    radius = None

    if isinstance(region, Ball):
        if not region.centered:
            raise HerzError("Weighted norms over balls not centred at the origin are not supported")
        radius = region.radius
        top = int(octave_of(radius))
        if top <= k_hi:
            k_hi = top
        else:
            radius = None
    elif region is not None:
        k = int(region)
        if (k_lo is not None and k < k_lo) or k > k_hi:
            logger.debug("Annulus %d lies outside the declared support %s", k, f.support)
            return QuadratureResult(value=0.0)
        k_lo, k_hi = k, k

    if k_lo is None:
        def octave_value(k: int) -> float:
            return _lq_shell(f, q, w, k, sphere, nodes, radius if k == k_hi else None)

        return integrate_to_origin(octave_value, k_hi)

    per_octave = {
        k: _lq_shell(f, q, w, k, sphere, nodes, radius if k == k_hi else None) for k in range(k_lo, k_hi + 1)
    }
    return QuadratureResult(value=sum(per_octave.values()), per_octave=per_octave)


def sampled_lq_integral(
    f: SampledFunction,
    q: float,
    w: Weight,
    octaves: Sequence[int],
    sphere: Optional[SphereGrid] = None,
    nodes: Optional[int] = None,
) -> QuadratureResult:
    """
    int |f|^q w over the given octaves, evaluating f on every one of them.

    Unlike weighted_lq_integral this ignores the declared support, so it
    measures mass a function carries where it claims to vanish.
    """
    if q < 1:
        raise HerzError(f"q must be at least 1, got {q}")
    sphere = sphere or SphereGrid.default(f.dim)
    nodes = nodes or config.NODES_PER_OCTAVE
    per_octave = {k: _lq_shell(f, q, w, k, sphere, nodes) for k in sorted(octaves)}
    return QuadratureResult(value=sum(per_octave.values()), per_octave=per_octave)


def weighted_lq_norm(
    f: SampledFunction,
    q: float,
    w: Weight,
    region: Union[None, int, Ball] = None,
    sphere: Optional[SphereGrid] = None,
    nodes: Optional[int] = None,
) -> float:
    """(int_region |f|^q w)^{1/q}."""
    integral = weighted_lq_integral(f, q, w, region, sphere, nodes)
    return max(integral.value, 0.0) ** (1.0 / q)


def herz_norm(
    f: SampledFunction,
    hp: HerzParams,
    k_range: Optional[Tuple[int, int]] = None,
    sphere: Optional[SphereGrid] = None,
    nodes: Optional[int] = None,
) -> HerzNorm:
    """
    (sum_k omega_1(B_k)^{alpha p/n} ||f chi_k||_{L^q(omega_2)}^p)^{1/p} over k_range.

    The default range is the declared support plus one guard octave per side.
    Support octaves outside k_range are reported as tail_estimate, not added.
    """
    sphere = sphere or SphereGrid.default(f.dim)
    k_lo, k_hi = f.support

    def term(k: int) -> float:
        lq = weighted_lq_norm(f, hp.q, hp.w2, k, sphere, nodes)
        return ball_weight(hp.w1, Ball.dyadic(k)) ** (hp.alpha / hp.dim) * lq

    if k_range is None and k_lo is None:
        per_annulus: Dict[int, float] = {}

        def powered(k: int) -> float:
            per_annulus[k] = term(k)
            return per_annulus[k] ** hp.p

        try:
            summed = integrate_to_origin(powered, k_hi + 1)
        except QuadratureError as exc:
            raise HerzError(f"Herz sum does not converge towards the origin: {exc}") from exc
        return HerzNorm(
            value=max(summed.value, 0.0) ** (1.0 / hp.p),
            per_annulus=dict(sorted(per_annulus.items())),
            tail_estimate=summed.error ** (1.0 / hp.p),
            k_range=(min(per_annulus), max(per_annulus)),
        )

    if k_range is None:
        k_range = (k_lo - 1, k_hi + 1)
    lower, upper = k_range
    if lower > upper:
        raise HerzError(f"Empty k_range {k_range}")

    per_annulus = {k: term(k) for k in range(lower, upper + 1)}
    value = sum(t**hp.p for t in per_annulus.values()) ** (1.0 / hp.p)

    tail = sum(term(k) ** hp.p for k in range(upper + 1, k_hi + 1))
    if k_lo is not None:
        tail += sum(term(k) ** hp.p for k in range(k_lo, min(lower, k_hi + 1)))
    elif lower <= k_hi:
        try:
            below = integrate_to_origin(lambda k: term(k) ** hp.p, lower - 1)
        except QuadratureError as exc:
            raise HerzError(f"Tail below k={lower} is not estimable; widen k_range: {exc}") from exc
        if below.value > config.TAIL_TOLERANCE * max(value**hp.p, 1e-300):
            logger.warning("Herz norm truncated at k=%d; tail %.3e not negligible", lower, below.value)
        tail += below.value
    tail_estimate = tail ** (1.0 / hp.p) if tail > 0 else 0.0
    if tail_estimate:
        logger.warning("Support of %s extends beyond k_range %s (tail %.3e)", f.label or "f", k_range, tail_estimate)

    return HerzNorm(value=value, per_annulus=per_annulus, tail_estimate=tail_estimate, k_range=(lower, upper))


def _coefficient_norm(coefficients: Sequence[float], p: float) -> float:
    if not 0 < p <= 1:
        raise HerzError(f"Atomic norms are taken for p in (0, 1], got {p}")
    if not coefficients:
        return 0.0
    return float(sum(abs(c) ** p for c in coefficients) ** (1.0 / p))


def finite_atomic_norm(
    decomposition: Sequence[Tuple[float, object]],
    p: float,
    hp: Optional[HerzParams] = None,
    validate: bool = True,
) -> float:
    """
    (sum |lambda_j|^p)^{1/p} of the given representation sum lambda_j a_j.

    The atoms are run through validate_atom only when hp is given and
    validate is set; without hp the entries are taken as already certified
    and only the coefficients are read.
    """
    if validate and hp is not None:
        from atoms import validate_atom

        for index, (_, atom) in enumerate(decomposition):
            report = validate_atom(atom, hp)
            if not report.passed:
                raise HerzError(f"Atom {index} fails condition(s) {', '.join(report.failed_conditions())}")
    return _coefficient_norm([c for c, _ in decomposition], p)


def block_norm_upper_bound(
    units: Sequence[Tuple[float, object]],
    p: float,
    hp: Optional[HerzParams] = None,
    validate: bool = True,
) -> float:
    """
    (sum |lambda_k|^p)^{1/p} of a representation by dyadic central units.

    Units are checked with validate_dyadic_unit under the same rule as
    finite_atomic_norm: only when hp is given and validate is set.
    """
    if validate and hp is not None:
        from atoms import validate_dyadic_unit

        for index, (_, unit) in enumerate(units):
            report = validate_dyadic_unit(unit, hp)
            if not report.passed:
                raise HerzError(f"Unit {index} fails condition(s) {', '.join(report.failed_conditions())}")
    return _coefficient_norm([c for c, _ in units], p)


def indicator_function(dim: int, k_lo: Optional[int], k_hi: int, value: float = 1.0) -> SampledFunction:
    """value * chi of 2^{k_lo-1} < |x| <= 2^{k_hi} (of B_{k_hi} when k_lo is None)."""
    inner = 0.0 if k_lo is None else 2.0 ** (k_lo - 1)
    outer = 2.0**k_hi

    def evaluator(points):
        r = np.linalg.norm(points, axis=1)
        return np.where((r > inner) & (r <= outer), value, 0.0)

    return SampledFunction(evaluator=evaluator, dim=dim, support=(k_lo, k_hi), radial=True, label=f"{value}*chi")


def power_function(dim: int, exponent: float, k_lo: int, k_hi: int, coefficient: float = 1.0) -> SampledFunction:
    """coefficient * |x|^exponent on 2^{k_lo-1} < |x| <= 2^{k_hi}."""
    base = indicator_function(dim, k_lo, k_hi)

    def evaluator(points):
        r = np.linalg.norm(points, axis=1)
        return coefficient * base(points) * np.where(r > 0, r, 1.0) ** exponent

    return SampledFunction(evaluator=evaluator, dim=dim, support=(k_lo, k_hi), radial=True, label=f"|x|^{exponent}")


def function_from_dict(data: Dict[str, object], hp: HerzParams) -> SampledFunction:
    """Build a function from its JSON spec (indicator, ball, power or atom)."""
    kind = data.get("kind")
    if kind == "indicator":
        return indicator_function(hp.dim, int(data["k_lo"]), int(data["k_hi"]), float(data.get("value", 1.0)))
    if kind == "ball":
        return indicator_function(hp.dim, None, int(data["k"]), float(data.get("value", 1.0)))
    if kind == "power":
        return power_function(
            hp.dim,
            float(data["exponent"]),
            int(data["k_lo"]),
            int(data["k_hi"]),
            float(data.get("coefficient", 1.0)),
        )
    if kind == "atom":
        from atoms import atom_from_dict

        return atom_from_dict(data, hp).profile
    raise HerzError(f"Unknown function kind {kind!r}")
