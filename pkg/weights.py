"""
weights.py - Radial weights on R^n, Muckenhoupt checks and weighted ball measures.

Two kinds of weight are supported: power laws |x|^beta (closed-form ball
measures) and tabulated radial profiles (piecewise linear in |x|, constant
beyond the table). Dimensions are limited to n = 1, 2, 3.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from config import Config
from quadrature import (
    SURFACE_MEASURE,
    QuadratureResult,
    SphereGrid,
    reference_rule,
    integrate_interval,
    integrate_to_origin,
    octave_of,
)

logger = logging.getLogger(__name__)

config = Config()

# Relative octaves below the radius at which a ball rule stops (mass below 2^-47 of the total).
_BALL_DEPTH_BITS = 47
_GRADED_CUTS = 30


class WeightError(ValueError):
    """Raised for invalid weights or unsupported weight parameters."""


@dataclass(frozen=True)
class Weight:
    kind: str
    dim: int
    beta: float = 0.0
    nodes: Tuple[float, ...] = ()
    values: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.dim not in SURFACE_MEASURE:
            raise WeightError(f"Dimension {self.dim} rejected: only n = 1, 2, 3 are supported")
        if self.kind == "power":
            if not self.beta > -self.dim:
                raise WeightError(
                    f"|x|^{self.beta} is not locally integrable in dimension {self.dim} (need beta > -n)"
                )
        elif self.kind == "table":
            nodes = np.asarray(self.nodes, dtype=float)
            values = np.asarray(self.values, dtype=float)
            if nodes.size < 2 or nodes.size != values.size:
                raise WeightError("Radial table needs at least two nodes and one value per node")
            if np.any(nodes <= 0) or np.any(np.diff(nodes) <= 0):
                raise WeightError("Radial table nodes must be positive and strictly increasing")
            if np.any(values <= 0) or not np.all(np.isfinite(values)):
                raise WeightError("Radial table values must be finite and positive")
        else:
            raise WeightError(f"Unknown weight kind {self.kind!r}")

    @classmethod
    def power(cls, beta: float, dim: int) -> "Weight":
        return cls(kind="power", dim=dim, beta=float(beta))

    @classmethod
    def table(cls, nodes: Sequence[float], values: Sequence[float], dim: int) -> "Weight":
        return cls(
            kind="table",
            dim=dim,
            nodes=tuple(float(v) for v in nodes),
            values=tuple(float(v) for v in values),
        )

    @property
    def is_power(self) -> bool:
        return self.kind == "power"

    @property
    def is_constant(self) -> bool:
        if self.is_power:
            return self.beta == 0.0
        return len(set(self.values)) == 1

    @property
    def singular_at_origin(self) -> bool:
        return self.is_power and self.beta < 0

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        if self.is_power:
            return np.ones_like(r) if self.beta == 0.0 else r**self.beta
        return np.interp(r, self.nodes, self.values)

    def __call__(self, points):
        return self.radial(np.linalg.norm(np.asarray(points, dtype=float), axis=-1))

    def to_dict(self) -> Dict[str, object]:
        if self.is_power:
            return {"kind": "power", "beta": self.beta, "dim": self.dim}
        return {"kind": "table", "nodes": list(self.nodes), "values": list(self.values), "dim": self.dim}

    @classmethod
    def from_dict(cls, data: Dict[str, object], dim: Optional[int] = None) -> "Weight":
        dim = int(data.get("dim", dim or 0))
        kind = data.get("kind")
        if kind == "power":
            return cls.power(float(data["beta"]), dim)
        if kind == "table":
            return cls.table(data["nodes"], data["values"], dim)
        raise WeightError(f"Unknown weight kind {kind!r}")


@dataclass(frozen=True)
class Ball:
    radius: float
    center: Optional[Tuple[float, ...]] = None
    k: Optional[int] = None

    def __post_init__(self):
        if not self.radius > 0:
            raise WeightError(f"Ball radius must be positive, got {self.radius}")

    @classmethod
    def dyadic(cls, k: int) -> "Ball":
        """B_k = {|x| <= 2^k}."""
        return cls(radius=2.0**k, k=int(k))

    @classmethod
    def explicit(cls, radius: float, center: Optional[Sequence[float]] = None) -> "Ball":
        return cls(radius=float(radius), center=None if center is None else tuple(float(c) for c in center))

    @property
    def centered(self) -> bool:
        return self.center is None or not any(self.center)

    def center_array(self, dim: int) -> np.ndarray:
        if self.center is None:
            return np.zeros(dim)
        center = np.asarray(self.center, dtype=float)
        if center.size != dim:
            raise WeightError(f"Ball center has dimension {center.size}, expected {dim}")
        return center


def lebesgue_ball(radius: float, dim: int) -> float:
    return SURFACE_MEASURE[dim] * radius**dim / dim


def ball_weight(w: Weight, b: Ball) -> float:
    """omega(B): closed form for power weights on origin-centred balls, quadrature otherwise."""
    if w.is_power and b.centered:
        exponent = w.dim + w.beta
        return SURFACE_MEASURE[w.dim] * b.radius**exponent / exponent
    result = ball_weight_quadrature(w, b)
    logger.debug("Quadrature ball weight %.12g (error estimate %.2e)", result.value, result.error)
    return result.value


def ball_weight_quadrature(w: Weight, b: Ball, nodes: Optional[int] = None) -> QuadratureResult:
    """
    omega(B) by quadrature. Origin-centred balls are summed as annuli down to
    the origin with a geometric tail; other balls use the polar ball rule.
    """
    nodes = nodes or config.NODES_PER_OCTAVE
    if not b.centered:
        fine = _ball_sum(w, b, w.dim, nodes, lambda values: values)
        coarse = _ball_sum(w, b, w.dim, max(4, nodes // 2), lambda values: values)
        return QuadratureResult(value=fine, error=abs(fine - coarse))

    sigma = SURFACE_MEASURE[w.dim]
    breakpoints = tuple(w.nodes)
    top = int(octave_of(b.radius))

    def integrand(r):
        return w.radial(r) * r ** (w.dim - 1)

    def octave_value(k: int) -> float:
        upper = b.radius if k == top else 2.0**k
        return sigma * integrate_interval(integrand, 2.0 ** (k - 1), upper, nodes, breakpoints).value

    return integrate_to_origin(octave_value, top)


def annulus_weight(w: Weight, k: int) -> float:
    """omega(C_k) with C_k = B_k minus B_{k-1}."""
    return max(0.0, ball_weight(w, Ball.dyadic(k)) - ball_weight(w, Ball.dyadic(k - 1)))


def subset_ratio(w: Weight, k: int) -> float:
    """omega(C_k) / omega(B_k); scale invariant for power weights."""
    return annulus_weight(w, k) / ball_weight(w, Ball.dyadic(k))


def check_ap_power(beta: float, n: int, p: float) -> bool:
    """Whether |x|^beta belongs to A_p(R^n)."""
    if p < 1:
        raise WeightError(f"A_p is defined for p >= 1, got p={p}")
    if p == 1:
        return -n < beta <= 0
    return -n < beta < n * (p - 1)


def reverse_holder_index_power(beta: float, n: int) -> float:
    """Critical reverse Hoelder index of |x|^beta, -n < beta <= 0."""
    if beta > 0:
        raise WeightError("Critical index is only implemented for beta in (-n, 0]")
    if beta <= -n:
        raise WeightError(f"|x|^{beta} is not a weight in dimension {n}")
    if beta == 0:
        return math.inf
    return n / (-beta)


def ball_rule(b: Ball, dim: int, nodes: Optional[int] = None, sphere: Optional[SphereGrid] = None, singular: bool = False):
    """
    Quadrature points and weights for a ball, in polar coordinates about its
    centre: relative octaves (R 2^{-j-1}, R 2^{-j}] plus, when the weight is
    singular at the origin, a graded mesh around rho = |center|.
    """
    nodes = nodes or config.NODES_PER_OCTAVE
    sphere = sphere or SphereGrid.default(dim)
    center = b.center_array(dim)
    radius = b.radius

    depth = math.ceil(_BALL_DEPTH_BITS / dim)
    edges = [radius * 2.0**-j for j in range(depth + 1)]
    offset = float(np.linalg.norm(center))
    if singular and 0 < offset < 2 * radius:
        graded = offset * 2.0 ** -np.arange(1, _GRADED_CUTS + 1)
        edges.extend(offset - graded)
        edges.extend(offset + graded)
        edges.append(offset)
    edges = np.unique(np.clip(np.asarray(edges), radius * 2.0**-depth, radius))

    xi, w_ref = reference_rule("gauss-legendre", nodes)
    rho = (edges[:-1, None] + np.diff(edges)[:, None] * xi).ravel()
    rho_weights = (np.diff(edges)[:, None] * w_ref).ravel() * rho ** (dim - 1)

    directions, direction_weights = sphere.nodes()
    points = center + rho[:, None, None] * directions[None, :, :]
    weights = rho_weights[:, None] * direction_weights[None, :]
    return points.reshape(-1, dim), weights.ravel()


def _ball_sum(w: Weight, b: Ball, dim: int, nodes: int, transform: Callable) -> float:
    points, weights = ball_rule(b, dim, nodes, singular=w.singular_at_origin)
    return float(np.sum(weights * transform(w(points))))


def muckenhoupt_quantity(w: Weight, b: Ball, p: float, nodes: Optional[int] = None) -> QuadratureResult:
    """
    The A_p bracket on one ball. For p = 1 the essential infimum is the minimum
    over quadrature nodes, which makes the value an upper-bound approximation.
    """
    if p < 1:
        raise WeightError(f"A_p is defined for p >= 1, got p={p}")
    nodes = nodes or config.NODES_PER_OCTAVE

    def _quantity(count: int) -> float:
        points, weights = ball_rule(b, w.dim, count, singular=w.singular_at_origin)
        values = w(points)
        measure = np.sum(weights)
        average = np.sum(weights * values) / measure
        if p == 1:
            return float(average / np.min(values))
        dual = np.sum(weights * values ** (-1.0 / (p - 1))) / measure
        return float(average * dual ** (p - 1))

    fine, coarse = _quantity(nodes), _quantity(max(4, nodes // 2))
    result = QuadratureResult(value=fine, error=abs(fine - coarse))
    if p == 1:
        result.notes.append("essinf approximated by the minimum over quadrature nodes")
    if result.error > 1e-3 * abs(fine):
        note = f"A_{p} quantity not converged: value {fine:.6g}, refinement difference {result.error:.2e}"
        logger.warning(note)
        result.notes.append(note)
    return result


def ball_average(
    f: Callable,
    b: Ball,
    dim: int,
    w: Optional[Weight] = None,
    exponent: float = 1.0,
    nodes: Optional[int] = None,
) -> float:
    """((1/omega(B)) int_B |f|^exponent omega)^{1/exponent}, Lebesgue measure when w is None."""
    singular = w is not None and w.singular_at_origin
    points, weights = ball_rule(b, dim, nodes, singular=singular)
    density = np.ones(points.shape[0]) if w is None else w(points)
    values = np.abs(np.asarray(f(points), dtype=float)) ** exponent
    return float((np.sum(weights * density * values) / np.sum(weights * density)) ** (1.0 / exponent))
