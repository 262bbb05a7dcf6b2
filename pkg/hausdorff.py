"""
hausdorff.py - The 1-D, rough and matrix Hausdorff operators.

The rough operator is evaluated in polar form,
    H f(x) = int_0^inf int_S Phi(t)/t Omega(y') f(|x| y'/t) dy' dt,
octave by octave in t. The matrix operator
    H f(x) = int Phi(y)/|y|^n f(A(y) x) dy
is evaluated in polar coordinates in y and binned by the octave of ||A(y)^{-1}||.
Evaluation is only defined for x != 0.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Iterator, Optional, Sequence, Tuple

import numpy as np

from config import Config
from herz import SampledFunction
from quadrature import (
    QuadratureError,
    QuadratureResult,
    SphereGrid,
    octave_of,
    radial_octave,
    split_octave_nodes,
)

logger = logging.getLogger(__name__)

config = Config()

# Upper bound on integrand samples held in memory per evaluation block.
_POINT_BUDGET = 1 << 20


class HausdorffError(ValueError):
    """Raised for invalid kernels, symbols or fields, and for undefined evaluations."""


def conjugate_exponent(q: float) -> float:
    return math.inf if q == 1 else q / (q - 1.0)


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialKernel:
    """
    Radial kernel Phi. A compact kernel is supported in (2^m, 2^M]; otherwise
    its octaves are scanned over the configured grid range.
    """

    profile: Callable[[np.ndarray], np.ndarray]
    support: Optional[Tuple[int, int]] = None
    breakpoints: Tuple[float, ...] = ()
    label: str = "phi"
    spec: Optional[Dict[str, object]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.support is not None and self.support[0] >= self.support[1]:
            raise HausdorffError(f"Kernel support (2^{self.support[0]}, 2^{self.support[1]}] is empty")
        try:
            masses = [
                radial_octave(lambda t: np.abs(self(t)) / t, k, config.NODES_PER_OCTAVE, config.QUADRATURE_RULE, self.breakpoints)
                for k in self.octaves()
            ]
        except QuadratureError as exc:
            raise HausdorffError(f"Kernel {self.label} is not finite on its support: {exc}") from exc
        if not math.isfinite(sum(masses)):
            raise HausdorffError(f"int |Phi(t)|/t dt is not finite for kernel {self.label}")

    @property
    def compact(self) -> bool:
        return self.support is not None

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        with np.errstate(all="ignore"):
            values = np.broadcast_to(np.asarray(self.profile(t), dtype=float), t.shape)
        if not self.compact:
            return values
        m, M = self.support
        return np.where((t > 2.0**m) & (t <= 2.0**M), values, 0.0)

    def octaves(self) -> range:
        if self.compact:
            return range(self.support[0] + 1, self.support[1] + 1)
        return range(config.K_MIN, config.K_MAX + 1)

    def restrict(self, k: int) -> "RadialKernel":
        """Phi chi_{(2^{k-1}, 2^k]}."""
        inside = tuple(b for b in self.breakpoints if 2.0 ** (k - 1) < b < 2.0**k)
        return replace(self, support=(k - 1, k), breakpoints=inside, label=f"{self.label}|{k}")

    def to_dict(self) -> Dict[str, object]:
        return dict(self.spec) if self.spec else {"kind": "callable", "label": self.label}


def indicator_kernel(m: int, M: int, value: float = 1.0) -> RadialKernel:
    """value * chi_{(2^m, 2^M]}."""
    return RadialKernel(
        profile=lambda t: np.full(np.shape(t), value),
        support=(m, M),
        label=f"{value}*chi(2^{m},2^{M}]",
        spec={"kind": "indicator", "m": m, "M": M, "value": value},
    )


def piecewise_power_kernel(pieces: Sequence[Tuple[int, float, float]]) -> RadialKernel:
    """sum of coefficient * t^exponent on the octaves (2^{k-1}, 2^k] of each (k, coefficient, exponent)."""
    if not pieces:
        raise HausdorffError("piecewise_power kernel needs at least one piece")
    pieces = tuple((int(k), float(c), float(e)) for k, c, e in pieces)
    octaves = [k for k, _, _ in pieces]

    def profile(t):
        values = np.zeros(np.shape(t))
        index = octave_of(np.where(np.asarray(t) > 0, t, 1.0))
        for k, c, e in pieces:
            values = values + np.where(index == k, c * np.asarray(t, dtype=float) ** e, 0.0)
        return values

    return RadialKernel(
        profile=profile,
        support=(min(octaves) - 1, max(octaves)),
        label="piecewise-power",
        spec={"kind": "piecewise_power", "pieces": [list(p) for p in pieces]},
    )


def table_kernel(nodes: Sequence[float], values: Sequence[float]) -> RadialKernel:
    """Piecewise linear Phi through (nodes, values), zero outside [nodes[0], nodes[-1]]."""
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    if nodes.size < 2 or nodes.size != values.size or np.any(nodes <= 0) or np.any(np.diff(nodes) <= 0):
        raise HausdorffError("Kernel table needs increasing positive nodes and one value per node")
    m = int(math.floor(math.log2(nodes[0])))
    M = int(math.ceil(math.log2(nodes[-1])))
    return RadialKernel(
        profile=lambda t: np.interp(t, nodes, values, left=0.0, right=0.0),
        support=(m, M),
        breakpoints=tuple(nodes.tolist()),
        label="table",
        spec={"kind": "table", "nodes": nodes.tolist(), "values": values.tolist()},
    )


def power_kernel(exponent: float, coefficient: float = 1.0) -> RadialKernel:
    """coefficient * t^exponent on all of (0, inf)."""
    return RadialKernel(
        profile=lambda t: coefficient * np.asarray(t, dtype=float) ** exponent,
        label=f"t^{exponent}",
        spec={"kind": "power", "exponent": exponent, "coefficient": coefficient},
    )


def exp_decay_kernel(exponent: float, coefficient: float = 1.0) -> RadialKernel:
    """coefficient * t^exponent * exp(-t)."""
    return RadialKernel(
        profile=lambda t: coefficient * np.asarray(t, dtype=float) ** exponent * np.exp(-np.asarray(t, dtype=float)),
        label=f"t^{exponent}e^-t",
        spec={"kind": "exp_decay", "exponent": exponent, "coefficient": coefficient},
    )


def kernel_from_dict(data: Dict[str, object]) -> RadialKernel:
    kind = data.get("kind")
    if kind == "indicator":
        return indicator_kernel(int(data["m"]), int(data["M"]), float(data.get("value", 1.0)))
    if kind == "piecewise_power":
        return piecewise_power_kernel(data["pieces"])
    if kind == "table":
        return table_kernel(data["nodes"], data["values"])
    if kind == "power":
        return power_kernel(float(data["exponent"]), float(data.get("coefficient", 1.0)))
    if kind == "exp_decay":
        return exp_decay_kernel(float(data["exponent"]), float(data.get("coefficient", 1.0)))
    raise HausdorffError(f"Unknown kernel kind {kind!r}")


# ---------------------------------------------------------------------------
# Symbols on the sphere
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SphereSymbol:
    omega: Callable[[np.ndarray], np.ndarray]
    dim: int
    constant: Optional[float] = None
    label: str = "Omega"
    spec: Optional[Dict[str, object]] = field(default=None, compare=False)

    def __call__(self, directions) -> np.ndarray:
        directions = np.asarray(directions, dtype=float).reshape(-1, self.dim)
        return np.broadcast_to(np.asarray(self.omega(directions), dtype=float), (directions.shape[0],))

    def lq_norm(self, exponent: float, sphere: Optional[SphereGrid] = None) -> float:
        """||Omega||_{L^exponent(S^{n-1})}."""
        sphere = sphere or SphereGrid.default(self.dim)
        directions, weights = sphere.nodes()
        values = np.abs(self(directions))
        if math.isinf(exponent):
            return float(np.max(values))
        norm = float(weights @ values**exponent) ** (1.0 / exponent)
        if not math.isfinite(norm):
            raise HausdorffError(f"||{self.label}||_L^{exponent} is not finite")
        return norm

    def to_dict(self) -> Dict[str, object]:
        return dict(self.spec) if self.spec else {"kind": "callable", "label": self.label}


def constant_symbol(value: float, dim: int) -> SphereSymbol:
    return SphereSymbol(
        omega=lambda d: np.full(d.shape[0], value),
        dim=dim,
        constant=float(value),
        label=f"{value}",
        spec={"kind": "constant", "value": value},
    )


def linear_symbol(offset: float, direction: Sequence[float]) -> SphereSymbol:
    """Omega(y') = offset + <direction, y'>."""
    v = np.asarray(direction, dtype=float)
    return SphereSymbol(
        omega=lambda d: offset + d @ v,
        dim=v.size,
        label="linear",
        spec={"kind": "linear", "offset": offset, "direction": v.tolist()},
    )


def symbol_from_dict(data: Optional[Dict[str, object]], dim: int) -> SphereSymbol:
    if not data or data.get("kind") == "constant":
        return constant_symbol(float((data or {}).get("value", 1.0)), dim)
    if data.get("kind") == "linear":
        return linear_symbol(float(data.get("offset", 0.0)), data["direction"])
    raise HausdorffError(f"Unknown symbol kind {data.get('kind')!r}")


# ---------------------------------------------------------------------------
# Matrix fields
# ---------------------------------------------------------------------------


def matrix_norm(M):
    """Frobenius norm, batched over leading axes."""
    M = np.asarray(M, dtype=float)
    norms = np.sqrt(np.sum(np.square(M), axis=(-2, -1)))
    return float(norms) if norms.ndim == 0 else norms


@dataclass
class SandwichCheck:
    lower: float
    value: float
    upper: float

    @property
    def holds(self) -> bool:
        slack = 1e-12 * max(self.upper, 1.0)
        return self.lower <= self.value + slack and self.value <= self.upper + slack

    @property
    def margin(self) -> float:
        return min(self.value - self.lower, self.upper - self.value)


def det_sandwich(M) -> SandwichCheck:
    """||M||^{-n} <= |det M^{-1}| <= ||M^{-1}||^n."""
    M = np.asarray(M, dtype=float)
    n = M.shape[-1]
    inverse = np.linalg.inv(M)
    return SandwichCheck(
        lower=matrix_norm(M) ** (-n),
        value=abs(float(np.linalg.det(inverse))),
        upper=matrix_norm(inverse) ** n,
    )


@dataclass(frozen=True)
class MatrixField:
    """
    y -> A(y). Conformal fields A(y) = c(|y|) Q(y) with Q orthogonal declare
    `scale` (c) and `scale_inverse` so radial cut points can be placed exactly.
    """

    matrix: Callable[[np.ndarray], np.ndarray]
    dim: int
    rho_A: Optional[float] = None
    octave_bounds: Optional[Tuple[int, int]] = None
    scale: Optional[Callable[[np.ndarray], np.ndarray]] = None
    scale_inverse: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = "A"
    spec: Optional[Dict[str, object]] = field(default=None, compare=False)

    def __call__(self, ys) -> np.ndarray:
        ys = np.asarray(ys, dtype=float).reshape(-1, self.dim)
        return np.broadcast_to(np.asarray(self.matrix(ys), dtype=float), (ys.shape[0], self.dim, self.dim))

    @property
    def conformal(self) -> bool:
        return self.scale is not None and self.scale_inverse is not None

    def shell_radii(self, k: int) -> np.ndarray:
        """Radii in (2^{k-1}, 2^k) where ||A^{-1}(y)|| crosses a power of two."""
        if not self.conformal:
            return np.empty(0)
        ends = np.sqrt(self.dim) / np.asarray(self.scale(np.array([2.0 ** (k - 1), 2.0**k])), dtype=float)
        lo, hi = np.min(ends), np.max(ends)
        powers = 2.0 ** np.arange(math.ceil(math.log2(lo)), math.floor(math.log2(hi)) + 1)
        radii = np.asarray(self.scale_inverse(np.sqrt(self.dim) / powers), dtype=float)
        return radii[np.isfinite(radii) & (radii > 2.0 ** (k - 1)) & (radii < 2.0**k)]

    def samples(self, kernel: RadialKernel, sphere: Optional[SphereGrid] = None) -> np.ndarray:
        """Sample points of supp Phi on the quadrature grid."""
        sphere = sphere or SphereGrid.default(self.dim)
        directions, _ = sphere.nodes()
        blocks = []
        for k in kernel.octaves():
            t, _ = split_octave_nodes(k, config.NODES_PER_OCTAVE, config.QUADRATURE_RULE, kernel.breakpoints or None)
            t = t[0][kernel(t[0]) != 0]
            blocks.append((t[:, None, None] * directions[None, :, :]).reshape(-1, self.dim))
        return np.concatenate(blocks) if blocks else np.empty((0, self.dim))

    def shell_range(self, kernel: RadialKernel) -> Tuple[int, int]:
        """(m, M) with 2^m < ||A^{-1}(y)|| <= 2^M on supp Phi, declared or sampled."""
        if self.octave_bounds is not None:
            return self.octave_bounds
        ys = self.samples(kernel)
        if ys.size == 0:
            return (0, 0)
        shells = octave_of(matrix_norm(np.linalg.inv(self(ys))))
        return int(np.min(shells)) - 1, int(np.max(shells))

    def max_condition(self, kernel: RadialKernel) -> float:
        """max ||A(y)|| ||A^{-1}(y)|| over the sampled support of Phi."""
        ys = self.samples(kernel)
        if ys.size == 0:
            return 0.0
        matrices = self(ys)
        return float(np.max(matrix_norm(matrices) * matrix_norm(np.linalg.inv(matrices))))

    def to_dict(self) -> Dict[str, object]:
        return dict(self.spec) if self.spec else {"kind": "callable", "label": self.label}


def constant_field(M, rho_A: Optional[float] = None) -> MatrixField:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise HausdorffError("A constant field needs a square matrix")
    if abs(np.linalg.det(M)) <= 1e-12 * matrix_norm(M) ** M.shape[0]:
        raise HausdorffError(f"Constant matrix {M.tolist()} is singular")
    inverse_norm = matrix_norm(np.linalg.inv(M))
    shell = int(octave_of(inverse_norm))
    return MatrixField(
        matrix=lambda ys: np.broadcast_to(M, (ys.shape[0],) + M.shape),
        dim=M.shape[0],
        rho_A=matrix_norm(M) * inverse_norm if rho_A is None else rho_A,
        octave_bounds=(shell - 1, shell),
        label="constant",
        spec={"kind": "constant", "matrix": M.tolist()},
    )


def power_dilation_field(dim: int, c0: float = 1.0, exponent: float = -1.0) -> MatrixField:
    """A(y) = c0 |y|^exponent I."""
    if c0 <= 0:
        raise HausdorffError("Dilation factor c0 must be positive")
    identity = np.eye(dim)

    def matrix(ys):
        c = c0 * np.linalg.norm(ys, axis=1) ** exponent
        return c[:, None, None] * identity

    def scale_inverse(s):
        s = np.asarray(s, dtype=float)
        if exponent == 0:
            return np.full(s.shape, np.nan)
        return (s / c0) ** (1.0 / exponent)

    return MatrixField(
        matrix=matrix,
        dim=dim,
        rho_A=float(dim),
        scale=lambda r: c0 * np.asarray(r, dtype=float) ** exponent,
        scale_inverse=scale_inverse,
        label=f"{c0}|y|^{exponent}I",
        spec={"kind": "power_dilation", "c0": c0, "exponent": exponent},
    )


def rotation_dilation_field(c0: float = 1.0, exponent: float = 0.0, twist: float = 1.0) -> MatrixField:
    """A(y) = c0 |y|^exponent R(twist * arg y) in two dimensions."""
    base = power_dilation_field(2, c0, exponent)

    def matrix(ys):
        c = c0 * np.linalg.norm(ys, axis=1) ** exponent
        angle = twist * np.arctan2(ys[:, 1], ys[:, 0])
        cos, sin = np.cos(angle), np.sin(angle)
        return c[:, None, None] * np.stack([np.stack([cos, -sin], -1), np.stack([sin, cos], -1)], -2)

    return replace(
        base,
        matrix=matrix,
        rho_A=2.0,
        label=f"{c0}|y|^{exponent}R",
        spec={"kind": "rotation_dilation", "c0": c0, "exponent": exponent, "twist": twist},
    )


def field_from_dict(data: Dict[str, object], dim: int) -> MatrixField:
    kind = data.get("kind")
    if kind == "constant":
        built = constant_field(data["matrix"], data.get("rho_A"))
    elif kind == "power_dilation":
        built = power_dilation_field(dim, float(data.get("c0", 1.0)), float(data.get("exponent", -1.0)))
    elif kind == "rotation_dilation":
        built = rotation_dilation_field(
            float(data.get("c0", 1.0)), float(data.get("exponent", 0.0)), float(data.get("twist", 1.0))
        )
    else:
        raise HausdorffError(f"Unknown field kind {kind!r}")
    if built.dim != dim:
        raise HausdorffError(f"Field dimension {built.dim} does not match n={dim}")
    if "rho_A" in data and kind != "constant":
        built = replace(built, rho_A=float(data["rho_A"]))
    if "octave_bounds" in data:
        built = replace(built, octave_bounds=tuple(int(v) for v in data["octave_bounds"]))
    return built


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def support_radii(f: SampledFunction) -> np.ndarray:
    """Radii where f may jump: its support edges and declared breakpoints."""
    k_lo, k_hi = f.support
    radii = [2.0**k_hi] + ([2.0 ** (k_lo - 1)] if k_lo is not None else []) + list(f.breakpoints)
    return np.unique(np.asarray(radii, dtype=float))


def _as_points(xs, dim: int) -> np.ndarray:
    xs = np.asarray(xs, dtype=float).reshape(-1, dim)
    zero = np.linalg.norm(xs, axis=1) == 0
    if np.any(zero):
        raise HausdorffError("Hausdorff operators are evaluated only at x != 0")
    return xs


def _row_chunks(count: int, per_row: int) -> Iterator[slice]:
    size = max(1, min(config.CHUNK_SIZE, _POINT_BUDGET // max(per_row, 1)))
    for start in range(0, count, size):
        yield slice(start, min(start + size, count))


def _rough_block(
    kernel: RadialKernel,
    directions: np.ndarray,
    direction_weights: np.ndarray,
    f: SampledFunction,
    xs: np.ndarray,
    k: int,
    nodes: int,
    absolute: bool,
) -> np.ndarray:
    rows, dim = xs.shape
    r = np.linalg.norm(xs, axis=1)
    radii = support_radii(f)
    kernel_cuts = np.broadcast_to(np.asarray(kernel.breakpoints, dtype=float), (rows, len(kernel.breakpoints)))
    cuts = np.concatenate([r[:, None] / radii[None, :], kernel_cuts], axis=1)
    t, w = split_octave_nodes(k, nodes, config.QUADRATURE_RULE, cuts)
    phi = kernel(t) / t
    scaled = r[:, None] / t

    if f.radial:
        axis = np.zeros(dim)
        axis[0] = 1.0
        values = f(scaled.reshape(-1, 1) * axis).reshape(t.shape)
        inner = (np.abs(values) if absolute else values) * np.sum(direction_weights)
    else:
        points = scaled[:, :, None, None] * directions[None, None, :, :]
        values = f(points.reshape(-1, dim)).reshape(t.shape + (directions.shape[0],))
        inner = (np.abs(values) if absolute else values) @ direction_weights
    return np.sum(w * (np.abs(phi) if absolute else phi) * inner, axis=1)


def _rough_values(
    kernel: RadialKernel,
    directions: np.ndarray,
    direction_weights: np.ndarray,
    f: SampledFunction,
    xs: np.ndarray,
    nodes: int,
    absolute: bool,
    octaves: Optional[Sequence[int]],
) -> np.ndarray:
    octaves = kernel.octaves() if octaves is None else octaves
    per_row = nodes * (len(support_radii(f)) + len(kernel.breakpoints) + 1)
    per_row *= 1 if f.radial else directions.shape[0]
    out = np.zeros(xs.shape[0])
    for rows in _row_chunks(xs.shape[0], per_row):
        for k in octaves:
            out[rows] += _rough_block(kernel, directions, direction_weights, f, xs[rows], k, nodes, absolute)
    return out


def rough_values(
    kernel: RadialKernel,
    omega: SphereSymbol,
    f: SampledFunction,
    xs,
    nodes: Optional[int] = None,
    absolute: bool = False,
    octaves: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """H_{Phi,Omega} f at each row of xs (absolute: |Phi|, |Omega|, |f| throughout)."""
    if omega.dim != f.dim:
        raise HausdorffError(f"Symbol dimension {omega.dim} does not match f dimension {f.dim}")
    xs = _as_points(xs, f.dim)
    directions, weights = SphereGrid.default(f.dim).nodes()
    omega_values = omega(directions)
    direction_weights = weights * (np.abs(omega_values) if absolute else omega_values)
    return _rough_values(kernel, directions, direction_weights, f, xs, nodes or config.NODES_PER_OCTAVE, absolute, octaves)


def hausdorff_1d_values(
    kernel: RadialKernel,
    f: SampledFunction,
    xs,
    nodes: Optional[int] = None,
    absolute: bool = False,
    octaves: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """H_Phi f(x) = int_0^inf Phi(y)/y f(x/y) dy at each x."""
    if f.dim != 1:
        raise HausdorffError("The one-dimensional operator needs a function on R")
    xs = _as_points(xs, 1)
    nodes = nodes or config.NODES_PER_OCTAVE
    out = np.zeros(xs.shape[0])
    for sign in (1.0, -1.0):
        rows = np.sign(xs[:, 0]) == sign
        if np.any(rows):
            out[rows] = _rough_values(
                kernel, np.array([[sign]]), np.array([1.0]), replace(f, radial=False), xs[rows], nodes, absolute, octaves
            )
    return out


def _pointwise(evaluate: Callable[[int], np.ndarray], kernel: RadialKernel) -> QuadratureResult:
    fine = float(evaluate(config.NODES_PER_OCTAVE)[0])
    coarse = float(evaluate(max(4, config.NODES_PER_OCTAVE // 2))[0])
    result = QuadratureResult(value=fine, error=abs(fine - coarse))
    if not kernel.compact:
        result.truncated = True
        result.notes.append(f"kernel scanned over octaves [{config.K_MIN}, {config.K_MAX}]")
    return result


def apply_hausdorff_1d(kernel: RadialKernel, f: SampledFunction, x: float) -> QuadratureResult:
    """H_Phi f(x); f vanishes outside its declared support."""
    return _pointwise(lambda nodes: hausdorff_1d_values(kernel, f, [x], nodes), kernel)


def apply_rough_hausdorff(kernel: RadialKernel, omega: SphereSymbol, f: SampledFunction, x) -> QuadratureResult:
    return _pointwise(lambda nodes: rough_values(kernel, omega, f, [x], nodes), kernel)


def direct_rough_hausdorff(kernel: RadialKernel, omega: SphereSymbol, f: SampledFunction, x) -> float:
    """
    H_{Phi,Omega} f(x) from the defining integral int Phi(|x|/|y|)/|y|^n Omega(y') f(y) dy,
    integrated over the octaves of f's support (a cross-check of the polar form).
    """
    x = _as_points(x, f.dim)[0]
    r = float(np.linalg.norm(x))
    k_lo, k_hi = f.support
    if k_lo is None:
        raise HausdorffError("The direct form needs f supported away from the origin")
    edges = [r / 2.0**k for k in range(kernel.octaves()[0] - 1, kernel.octaves()[-1] + 1)]
    cuts = np.asarray(edges + [r / b for b in kernel.breakpoints] + list(f.breakpoints))
    directions, weights = SphereGrid.default(f.dim).nodes()
    total = 0.0
    for k in range(k_lo, k_hi + 1):
        s, w = split_octave_nodes(k, config.NODES_PER_OCTAVE, config.QUADRATURE_RULE, cuts)
        s, w = s[0], w[0]
        values = f((s[:, None, None] * directions[None, :, :]).reshape(-1, f.dim)).reshape(s.size, -1)
        total += float((w * kernel(r / s) / s) @ (values @ (weights * omega(directions))))
    return total


def _matrix_block(
    kernel: RadialKernel,
    matrix_field: MatrixField,
    f: SampledFunction,
    xs: np.ndarray,
    k: int,
    nodes: int,
    absolute: bool,
) -> Dict[int, np.ndarray]:
    rows, dim = xs.shape
    flat = np.concatenate([np.asarray(kernel.breakpoints, dtype=float), matrix_field.shell_radii(k)])
    if matrix_field.conformal:
        r = np.linalg.norm(xs, axis=1)
        per_row = np.asarray(matrix_field.scale_inverse(support_radii(f)[None, :] / r[:, None]), dtype=float)
        cuts = np.concatenate([per_row, np.broadcast_to(flat, (rows, flat.size))], axis=1)
    else:
        cuts = flat if flat.size else None
    t, w = split_octave_nodes(k, nodes, config.QUADRATURE_RULE, cuts)

    directions, sphere_weights = SphereGrid.default(dim).nodes()
    ys = (t[:, :, None, None] * directions[None, None, :, :]).reshape(-1, dim)
    matrices = matrix_field(ys)
    determinants = np.linalg.det(matrices)
    singular = ~np.isfinite(determinants) | (np.abs(determinants) <= 1e-12 * matrix_norm(matrices) ** dim)
    if np.any(singular):
        y = ys[np.argmax(singular)]
        raise HausdorffError(f"A(y) is singular at y = {y.tolist()}")
    shells = octave_of(matrix_norm(np.linalg.inv(matrices))).reshape(t.shape + (directions.shape[0],))
    matrices = matrices.reshape(t.shape + (directions.shape[0], dim, dim))

    if t.shape[0] == 1:
        images = np.einsum("psij,nj->npsi", matrices[0], xs)
    else:
        images = np.einsum("npsij,nj->npsi", matrices, xs)
    values = f(images.reshape(-1, dim)).reshape(images.shape[:-1])
    phi = kernel(t) / t
    if absolute:
        values, phi = np.abs(values), np.abs(phi)
    integrand = (w * phi)[:, :, None] * sphere_weights[None, None, :] * values
    shells = np.broadcast_to(shells, integrand.shape)
    return {int(j): np.sum(np.where(shells == j, integrand, 0.0), axis=(1, 2)) for j in np.unique(shells)}


def matrix_shell_values(
    kernel: RadialKernel,
    matrix_field: MatrixField,
    f: SampledFunction,
    xs,
    nodes: Optional[int] = None,
    absolute: bool = False,
) -> Dict[int, np.ndarray]:
    """Contributions of each shell 2^{j-1} < ||A^{-1}(y)|| <= 2^j to H_{Phi,A} f at the rows of xs."""
    if matrix_field.dim != f.dim:
        raise HausdorffError(f"Field dimension {matrix_field.dim} does not match f dimension {f.dim}")
    xs = _as_points(xs, f.dim)
    nodes = nodes or config.NODES_PER_OCTAVE
    sphere_size = SphereGrid.default(f.dim).size
    per_row = nodes * (len(support_radii(f)) + len(kernel.breakpoints) + 4) * sphere_size
    shells: Dict[int, np.ndarray] = {}
    for rows in _row_chunks(xs.shape[0], per_row):
        for k in kernel.octaves():
            for j, values in _matrix_block(kernel, matrix_field, f, xs[rows], k, nodes, absolute).items():
                shells.setdefault(j, np.zeros(xs.shape[0]))[rows] += values
    return dict(sorted(shells.items()))


def matrix_values(
    kernel: RadialKernel,
    matrix_field: MatrixField,
    f: SampledFunction,
    xs,
    nodes: Optional[int] = None,
    absolute: bool = False,
) -> np.ndarray:
    xs = np.asarray(xs, dtype=float).reshape(-1, f.dim)
    total = np.zeros(xs.shape[0])
    for values in matrix_shell_values(kernel, matrix_field, f, xs, nodes, absolute).values():
        total += values
    return total


def apply_matrix_hausdorff(kernel: RadialKernel, matrix_field: MatrixField, f: SampledFunction, x) -> QuadratureResult:
    """H_{Phi,A} f(x), with per-shell contributions in per_octave."""
    result = _pointwise(lambda nodes: matrix_values(kernel, matrix_field, f, [x], nodes), kernel)
    shells = matrix_shell_values(kernel, matrix_field, f, [x])
    result.per_octave = {j: float(v[0]) for j, v in shells.items()}
    return result


def _scaled_breakpoints(f: SampledFunction, factors: Sequence[float]) -> Tuple[float, ...]:
    radii = support_radii(f)
    return tuple(sorted({float(r * c) for r in radii for c in factors if c > 0 and math.isfinite(c)}))


def rough_image(
    kernel: RadialKernel,
    omega: SphereSymbol,
    f: SampledFunction,
    absolute: bool = False,
    octaves: Optional[Sequence[int]] = None,
) -> SampledFunction:
    """H_{Phi,Omega} f (restricted to the given kernel octaves) as a radial function."""
    octaves = list(kernel.octaves() if octaves is None else octaves)
    k_lo, k_hi = f.support
    factors = [2.0**k for k in range(octaves[0] - 1, octaves[-1] + 1)] + list(kernel.breakpoints)
    return SampledFunction(
        evaluator=lambda xs: rough_values(kernel, omega, f, xs, absolute=absolute, octaves=octaves),
        dim=f.dim,
        support=(None if k_lo is None else k_lo + octaves[0] - 1, k_hi + octaves[-1]),
        breakpoints=_scaled_breakpoints(f, factors),
        radial=True,
        label=f"H[{kernel.label},{omega.label}]({f.label})",
    )


def matrix_image(
    kernel: RadialKernel,
    matrix_field: MatrixField,
    f: SampledFunction,
    absolute: bool = False,
    shells: Optional[Sequence[int]] = None,
    rho_A: Optional[float] = None,
) -> SampledFunction:
    """
    H_{Phi,A} f restricted to the given ||A^{-1}||-shells (all shells by default).

    rho_A overrides the field's own value when bounding the support from below.
    """
    m, M = matrix_field.shell_range(kernel)
    selected = list(range(m + 1, M + 1)) if shells is None else sorted(shells)

    def evaluator(xs):
        contributions = matrix_shell_values(kernel, matrix_field, f, xs, absolute=absolute)
        total = np.zeros(np.asarray(xs).reshape(-1, f.dim).shape[0])
        for j in selected:
            if j in contributions:
                total += contributions[j]
        return total

    k_lo, k_hi = f.support
    rho = rho_A if rho_A is not None else matrix_field.rho_A
    lower = None
    if k_lo is not None and rho:
        lower = int(octave_of(2.0 ** (k_lo - 1) * 2.0 ** (selected[0] - 1) / rho))
    breakpoints: Tuple[float, ...] = ()
    if matrix_field.conformal:
        edges = [2.0**k for k in range(kernel.octaves()[0] - 1, kernel.octaves()[-1] + 1)]
        edges += list(kernel.breakpoints)
        for k in kernel.octaves():
            edges += matrix_field.shell_radii(k).tolist()
        factors = 1.0 / np.asarray(matrix_field.scale(np.asarray(edges)), dtype=float)
        breakpoints = _scaled_breakpoints(f, factors.tolist())
    return SampledFunction(
        evaluator=evaluator,
        dim=f.dim,
        support=(lower, k_hi + selected[-1]),
        breakpoints=breakpoints,
        radial=f.radial and matrix_field.conformal,
        label=f"H[{kernel.label},{matrix_field.label}]({f.label})",
    )
