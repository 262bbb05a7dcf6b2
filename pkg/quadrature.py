"""
quadrature.py - Deterministic quadrature on dyadic octaves, spheres and R^n in polar form.

Every radial integral in the package is taken octave by octave over
(2^{k-1}, 2^k]. Octave boundaries are natural break points, so integrands that
are smooth inside each octave never straddle a jump. Sums over octaves are
always reduced in ascending k.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from config import Config

logger = logging.getLogger(__name__)

config = Config()

RULES = ("gauss-legendre", "simpson")

# Exact surface measures |S^{n-1}| for the supported dimensions.
SURFACE_MEASURE = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}


class QuadratureError(RuntimeError):
    """Raised when an integrand cannot be integrated (non-finite samples, no decay)."""


@dataclass
class QuadratureResult:
    value: float
    error: float = 0.0
    truncated: bool = False
    notes: List[str] = field(default_factory=list)
    per_octave: Dict[int, float] = field(default_factory=dict)

    def __float__(self) -> float:
        return float(self.value)

    def to_dict(self) -> Dict[str, object]:
        return {
            "value": self.value,
            "error": self.error,
            "truncated": self.truncated,
            "notes": list(self.notes),
            "per_octave": {str(k): v for k, v in self.per_octave.items()},
        }


@dataclass(frozen=True)
class RadialGrid:
    """Octave range [k_min, k_max] with a fixed rule per octave."""

    k_min: int
    k_max: int
    nodes_per_octave: int = 16
    rule: str = "gauss-legendre"

    def __post_init__(self):
        if self.k_min > self.k_max:
            raise ValueError(f"k_min={self.k_min} exceeds k_max={self.k_max}")
        if self.nodes_per_octave < 4:
            raise ValueError("nodes_per_octave must be at least 4")
        if self.rule not in RULES:
            raise ValueError(f"Unknown quadrature rule {self.rule!r}; expected one of {RULES}")
        if self.rule == "simpson" and self.nodes_per_octave % 2:
            raise ValueError("nodes_per_octave must be even for composite Simpson")

    @classmethod
    def default(cls, k_min: Optional[int] = None, k_max: Optional[int] = None) -> "RadialGrid":
        return cls(
            k_min=config.K_MIN if k_min is None else k_min,
            k_max=config.K_MAX if k_max is None else k_max,
            nodes_per_octave=config.NODES_PER_OCTAVE,
            rule=config.QUADRATURE_RULE,
        )

    def octaves(self) -> range:
        return range(self.k_min, self.k_max + 1)

    def with_range(self, k_min: int, k_max: int) -> "RadialGrid":
        return replace(self, k_min=k_min, k_max=k_max)

    def refined(self) -> "RadialGrid":
        return replace(self, nodes_per_octave=2 * self.nodes_per_octave)

    def coarsened(self) -> "RadialGrid":
        nodes = max(4, self.nodes_per_octave // 2)
        if self.rule == "simpson" and nodes % 2:
            nodes += 1
        return replace(self, nodes_per_octave=nodes)


@dataclass(frozen=True)
class SphereGrid:
    """
    Discretisation of S^{n-1}: the two points {-1, +1} for n=1, uniform angles
    for n=2, Gauss-Legendre in cos(polar) times uniform azimuth for n=3.
    """

    dim: int
    resolution: int = 32

    def __post_init__(self):
        if self.dim not in SURFACE_MEASURE:
            raise ValueError(f"Dimension {self.dim} is not supported (only n = 1, 2, 3)")
        if self.resolution < 1:
            raise ValueError("resolution must be positive")

    @classmethod
    def default(cls, dim: int) -> "SphereGrid":
        return cls(dim=dim, resolution=config.SPHERE_RES)

    def nodes(self) -> Tuple[np.ndarray, np.ndarray]:
        return _sphere_nodes(self.dim, self.resolution)

    @property
    def size(self) -> int:
        return self.nodes()[1].size


@lru_cache(maxsize=32)
def _sphere_nodes(dim: int, resolution: int) -> Tuple[np.ndarray, np.ndarray]:
    if dim == 1:
        points = np.array([[-1.0], [1.0]])
        weights = np.array([1.0, 1.0])
    elif dim == 2:
        angles = 2.0 * math.pi * np.arange(resolution) / resolution
        points = np.column_stack([np.cos(angles), np.sin(angles)])
        weights = np.full(resolution, 2.0 * math.pi / resolution)
    else:
        cos_polar, polar_weights = leggauss(resolution)
        sin_polar = np.sqrt(1.0 - cos_polar**2)
        n_azimuth = 2 * resolution
        azimuth = 2.0 * math.pi * np.arange(n_azimuth) / n_azimuth
        points = np.column_stack(
            [
                np.outer(sin_polar, np.cos(azimuth)).ravel(),
                np.outer(sin_polar, np.sin(azimuth)).ravel(),
                np.repeat(cos_polar, n_azimuth),
            ]
        )
        weights = np.repeat(polar_weights, n_azimuth) * (2.0 * math.pi / n_azimuth)
    points.setflags(write=False)
    weights.setflags(write=False)
    return points, weights


@lru_cache(maxsize=64)
def reference_rule(rule: str, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    if rule == "gauss-legendre":
        xi, w = leggauss(nodes)
        xi, w = 0.5 * (xi + 1.0), 0.5 * w
    elif rule == "simpson":
        xi = np.linspace(0.0, 1.0, nodes + 1)
        w = np.ones(nodes + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        w *= 1.0 / (3.0 * nodes)
    else:
        raise ValueError(f"Unknown quadrature rule {rule!r}")
    xi.setflags(write=False)
    w.setflags(write=False)
    return xi, w


def octave_of(radius):
    """Index k with radius in (2^{k-1}, 2^k]."""
    return np.ceil(np.log2(radius)).astype(int)


def split_octave_nodes(
    k: int,
    nodes_per_octave: int,
    rule: str = "gauss-legendre",
    cuts=None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodes and weights on (2^{k-1}, 2^k], split at cut points.

    `cuts` is either a flat sequence (shared by every row) or an (N, m) array
    with one row of cuts per evaluation point; cuts outside the octave or
    non-finite are ignored. Returns arrays of shape (N, P); N is 1 for shared cuts.
    """
    lower, upper = 2.0 ** (k - 1), 2.0**k
    xi, w_ref = reference_rule(rule, nodes_per_octave)

    if cuts is None:
        cut_array = np.empty((1, 0))
    else:
        cut_array = np.asarray(cuts, dtype=float)
        if cut_array.ndim == 1:
            cut_array = cut_array[None, :]
    cut_array = np.where(np.isfinite(cut_array), cut_array, lower)
    cut_array = np.clip(cut_array, lower, upper)

    rows = cut_array.shape[0]
    bounds = np.concatenate(
        [np.full((rows, 1), lower), np.sort(cut_array, axis=1), np.full((rows, 1), upper)],
        axis=1,
    )
    lo, width = bounds[:, :-1], np.diff(bounds, axis=1)
    t = lo[..., None] + width[..., None] * xi
    w = width[..., None] * w_ref
    return t.reshape(rows, -1), w.reshape(rows, -1)


def _evaluate(g: Callable, points: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    values = np.broadcast_to(np.asarray(g(points), dtype=float), shape)
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0]
        node = points[tuple(bad[: points.ndim])] if points.ndim else points
        raise QuadratureError(
            f"Non-finite integrand value {values[tuple(bad)]} at node {np.asarray(node).tolist()}"
        )
    return values


def radial_octave(
    g: Callable,
    k: int,
    nodes_per_octave: int,
    rule: str = "gauss-legendre",
    breakpoints: Sequence[float] = (),
) -> float:
    t, w = split_octave_nodes(k, nodes_per_octave, rule, breakpoints or None)
    values = _evaluate(g, t[0], t[0].shape)
    return float(w[0] @ values)


def integrate_octave(
    g: Callable,
    k: int,
    grid: Optional[RadialGrid] = None,
    breakpoints: Sequence[float] = (),
) -> QuadratureResult:
    """
    Integral of g over (2^{k-1}, 2^k]. The error estimate compares the grid with
    its coarsened version.
    """
    grid = grid or RadialGrid.default()
    fine = radial_octave(g, k, grid.nodes_per_octave, grid.rule, breakpoints)
    coarse_grid = grid.coarsened()
    coarse = radial_octave(g, k, coarse_grid.nodes_per_octave, coarse_grid.rule, breakpoints)
    return QuadratureResult(value=fine, error=abs(fine - coarse), per_octave={k: fine})


def integrate_octaves(
    g: Callable,
    grid: Optional[RadialGrid] = None,
    breakpoints: Sequence[float] = (),
) -> QuadratureResult:
    """Sum of integrate_octave over the grid range, reduced in ascending k."""
    grid = grid or RadialGrid.default()
    total, error, per_octave = 0.0, 0.0, {}
    for k in grid.octaves():
        part = integrate_octave(g, k, grid, breakpoints)
        per_octave[k] = part.value
        total += part.value
        error += part.error
    return QuadratureResult(value=total, error=error, per_octave=per_octave)


def integrate_interval(
    g: Callable,
    lower: float,
    upper: float,
    nodes: Optional[int] = None,
    breakpoints: Sequence[float] = (),
) -> QuadratureResult:
    """Gauss-Legendre integral of g over (lower, upper], split at breakpoints."""
    if upper <= lower:
        return QuadratureResult(value=0.0)
    nodes = nodes or config.NODES_PER_OCTAVE

    def _rule(count: int) -> float:
        edges = np.unique(np.concatenate([[lower, upper], [b for b in breakpoints if lower < b < upper]]))
        xi, w_ref = reference_rule("gauss-legendre", count)
        t = (edges[:-1, None] + np.diff(edges)[:, None] * xi).ravel()
        w = (np.diff(edges)[:, None] * w_ref).ravel()
        return float(w @ _evaluate(g, t, t.shape))

    fine, coarse = _rule(nodes), _rule(max(4, nodes // 2))
    return QuadratureResult(value=fine, error=abs(fine - coarse))


def integrate_sphere(h: Callable, grid: SphereGrid) -> float:
    """Integral of h over S^{n-1}; h takes an (S, n) array of unit vectors."""
    points, weights = grid.nodes()
    values = _evaluate(h, points, weights.shape)
    return float(weights @ values)


def polar_nodes(
    k: int,
    sphere: SphereGrid,
    nodes_per_octave: int,
    rule: str = "gauss-legendre",
    breakpoints: Sequence[float] = (),
) -> Tuple[np.ndarray, np.ndarray]:
    """Points (P*S, n) and weights (P*S,) of the polar rule on the shell 2^{k-1} < |x| <= 2^k."""
    t, w = split_octave_nodes(k, nodes_per_octave, rule, breakpoints or None)
    t, w = t[0], w[0]
    directions, sphere_weights = sphere.nodes()
    points = (t[:, None, None] * directions[None, :, :]).reshape(-1, sphere.dim)
    weights = np.outer(w * t ** (sphere.dim - 1), sphere_weights).ravel()
    return points, weights


def polar_octave(
    F: Callable,
    k: int,
    sphere: SphereGrid,
    nodes_per_octave: int,
    rule: str = "gauss-legendre",
    breakpoints: Sequence[float] = (),
) -> float:
    """Integral of F over the shell 2^{k-1} < |x| <= 2^k in polar coordinates."""
    points, weights = polar_nodes(k, sphere, nodes_per_octave, rule, breakpoints)
    return float(weights @ _evaluate(F, points, weights.shape))


def integrate_rn_polar(
    F: Callable,
    radial: RadialGrid,
    sphere: SphereGrid,
    support: Optional[Tuple[Optional[int], int]] = None,
    breakpoints: Sequence[float] = (),
    estimate_error: bool = True,
) -> QuadratureResult:
    """
    Sum over k of the shell integrals of F over 2^{k-1} < |x| <= 2^k.

    `support` is the declared octave range of F ((None, k_hi) when F reaches the
    origin); the parts of it outside the grid are reported as truncation.
    """
    per_octave: Dict[int, float] = {}
    total = 0.0
    for k in radial.octaves():
        per_octave[k] = polar_octave(F, k, sphere, radial.nodes_per_octave, radial.rule, breakpoints)
        total += per_octave[k]

    error = 0.0
    if estimate_error:
        coarse_grid = radial.coarsened()
        coarse = sum(
            polar_octave(F, k, sphere, coarse_grid.nodes_per_octave, coarse_grid.rule, breakpoints)
            for k in radial.octaves()
        )
        error = abs(total - coarse)

    result = QuadratureResult(value=total, error=error, per_octave=per_octave)
    if support is not None:
        k_lo, k_hi = support
        if k_lo is None or k_lo < radial.k_min or k_hi > radial.k_max:
            note = (
                f"support octaves [{k_lo}, {k_hi}] exceed grid range "
                f"[{radial.k_min}, {radial.k_max}]"
            )
            logger.warning("Truncated polar integral: %s", note)
            result.truncated = True
            result.notes.append(note)
    return result


def integrate_to_origin(
    octave_value: Callable[[int], float],
    k_top: int,
    tol: Optional[float] = None,
    max_octaves: int = 400,
) -> QuadratureResult:
    """
    Sum octave_value(k) for k = k_top, k_top - 1, ... and close the sum with the
    geometric tail fitted to the last two contributions.
    """
    tol = config.TAIL_TOLERANCE if tol is None else tol
    total, previous, tail = 0.0, None, math.inf
    per_octave: Dict[int, float] = {}

    for step in range(max_octaves):
        k = k_top - step
        current = octave_value(k)
        per_octave[k] = current
        total += current

        if previous is not None:
            if current == 0.0 and previous == 0.0:
                if total == 0.0 and step < 8:
                    previous = current
                    continue
                tail = 0.0
            elif previous != 0.0 and abs(current) < abs(previous):
                ratio = abs(current) / abs(previous)
                tail = current * ratio / (1.0 - ratio)
            else:
                tail = math.inf
            if abs(tail) <= tol * abs(total + tail) or (tail == 0.0):
                note = f"summed octaves down to k_floor={k}; geometric tail {tail:.3e}"
                logger.debug(note)
                return QuadratureResult(
                    value=total + tail,
                    error=abs(tail),
                    truncated=True,
                    notes=[note],
                    per_octave=dict(sorted(per_octave.items())),
                )
        previous = current

    raise QuadratureError(
        f"Octave contributions did not decay geometrically within {max_octaves} octaves below k={k_top}"
    )
