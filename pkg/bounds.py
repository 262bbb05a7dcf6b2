"""
bounds.py - Per-octave coefficient families, the constants C1-C12 and the
hypothesis gates of the boundedness theorems.

Theorems 3.x concern the rough operator H_{Phi,Omega}, theorems 4.x the matrix
operator H_{Phi,A}. All formulas are specific to power weights |x|^beta.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from config import Config
from hausdorff import (
    HausdorffError,
    MatrixField,
    RadialKernel,
    det_sandwich,
    matrix_norm,
)
from herz import HerzParams
from quadrature import (
    SURFACE_MEASURE,
    QuadratureError,
    SphereGrid,
    integrate_to_origin,
    octave_of,
    polar_nodes,
    radial_octave,
)
from weights import Ball, ball_weight, check_ap_power, reverse_holder_index_power

logger = logging.getLogger(__name__)

config = Config()

ROUGH_THEOREMS = ("3.1", "3.2", "3.3", "3.4")
MATRIX_THEOREMS = ("4.1", "4.2", "4.3", "4.4")
THEOREMS = ROUGH_THEOREMS + MATRIX_THEOREMS

# Theorems whose image lies in the Herz space (absolute-value decompositions).
HERZ_TARGET = ("3.2", "3.3", "3.4", "4.2", "4.3", "4.4")
# Theorems whose normalisation factor is not tracked.
UNTRACKED_SIZE = ("3.4", "4.4")

_IDENTITY_TOLERANCE = 1e-12
_GATE_SAMPLES = 64


class BoundsError(ValueError):
    """Raised for unsupported parameters or unstable constant evaluations."""


@dataclass(frozen=True)
class TheoremParams:
    hp: HerzParams
    alpha_star: Optional[float] = None
    q_star: Optional[float] = None
    delta: Optional[float] = None
    delta1: Optional[float] = None
    delta2: Optional[float] = None
    sigma: Optional[float] = None
    rho_A: Optional[float] = None
    octave_bounds: Optional[Tuple[int, int]] = None
    ratio_cap: Optional[float] = None

    @property
    def effective_sigma(self) -> float:
        """sigma, or (1-p)/p + 1/2 when unspecified."""
        if self.sigma is not None:
            return self.sigma
        return (1.0 - self.hp.p) / self.hp.p + 0.5

    @property
    def uses_log(self) -> bool:
        return self.hp.p < 1

    @property
    def cap(self) -> float:
        return config.RATIO_CAP if self.ratio_cap is None else self.ratio_cap

    def target(self, theorem: str) -> HerzParams:
        """Parameters of the space the theorem maps into."""
        if theorem in ("3.4", "4.4"):
            if self.alpha_star is None or self.q_star is None:
                raise BoundsError(f"Theorem {theorem} needs alpha_star and q_star")
            return self.hp.with_target(self.alpha_star, self.q_star)
        return self.hp

    def to_dict(self) -> Dict[str, object]:
        data = {
            "alpha_star": self.alpha_star,
            "q_star": self.q_star,
            "delta": self.delta,
            "delta1": self.delta1,
            "delta2": self.delta2,
            "sigma": self.effective_sigma,
            "rho_A": self.rho_A,
            "octave_bounds": list(self.octave_bounds) if self.octave_bounds else None,
            "ratio_cap": self.cap,
        }
        return {"hp": self.hp.to_dict(), **{k: v for k, v in data.items() if v is not None}}

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "TheoremParams":
        def number(key):
            return None if data.get(key) is None else float(data[key])

        bounds = data.get("octave_bounds")
        return cls(
            hp=HerzParams.from_dict(data["hp"]),
            alpha_star=number("alpha_star"),
            q_star=number("q_star"),
            delta=number("delta"),
            delta1=number("delta1"),
            delta2=number("delta2"),
            sigma=number("sigma"),
            rho_A=number("rho_A"),
            octave_bounds=None if bounds is None else (int(bounds[0]), int(bounds[1])),
            ratio_cap=number("ratio_cap"),
        )


@dataclass
class ConstantValue:
    value: float
    per_octave: Dict[int, float] = field(default_factory=dict)
    truncated: bool = False
    divergent: bool = False
    notes: List[str] = field(default_factory=list)

    def __float__(self) -> float:
        return self.value

    def to_dict(self) -> Dict[str, object]:
        return {
            "value": self.value,
            "per_octave": {str(k): v for k, v in sorted(self.per_octave.items())},
            "truncated": self.truncated,
            "divergent": self.divergent,
            "notes": list(self.notes),
        }


def _betas(hp: HerzParams) -> Tuple[float, float]:
    if not (hp.w1.is_power and hp.w2.is_power):
        raise BoundsError("Coefficient formulas are only available for power weights")
    return hp.w1.beta, hp.w2.beta


def _log_factor(v: np.ndarray, sigma: Optional[float]) -> np.ndarray:
    """|log2 v|^sigma for v <= 1, (log2 v + 1)^sigma for v > 1."""
    if sigma is None:
        return np.ones_like(v)
    logs = np.log2(v)
    return np.where(v <= 1.0, np.abs(logs), logs + 1.0) ** sigma


def _require(value: Optional[float], name: str, theorem: str) -> float:
    if value is None:
        raise BoundsError(f"Theorem {theorem} needs {name}")
    return value


def gammas(tp: TheoremParams) -> Tuple[float, float]:
    """(gamma_1, gamma_2) = ((d2-1)/d2 (n/q + alpha) - alpha*/d1, n/q + alpha + alpha*/d2)."""
    hp = tp.hp
    d1 = _require(tp.delta1, "delta1", "3.4")
    d2 = _require(tp.delta2, "delta2", "3.4")
    alpha_star = _require(tp.alpha_star, "alpha_star", "3.4")
    base = hp.dim / hp.q + hp.alpha
    return (d2 - 1.0) / d2 * base - alpha_star / d1, base + alpha_star / d2


def _delta(tp: TheoremParams, delta: Optional[float] = None) -> float:
    return _require(tp.delta if delta is None else delta, "delta", "3.3/4.3")


def family_exponent(theorem: str, k: int, tp: TheoremParams, delta: Optional[float] = None) -> float:
    """
    Exponent X with the octave integrand |Phi(t)| t^{X-1} (rough theorems), or
    the power of ||A^{-1}(y)|| in the shell integrand (matrix theorems).
    """
    hp = tp.hp
    beta1, beta2 = _betas(hp)
    n = hp.dim
    homogeneous = hp.alpha * (1.0 + beta1 / n)
    if theorem in ("3.1", "3.2"):
        return (n + beta2) / hp.q + homogeneous
    if theorem in ("4.1", "4.2"):
        return homogeneous
    if theorem in ("3.3", "4.3"):
        d = _delta(tp, delta)
        branch = hp.alpha if k >= 1 else hp.alpha * (d - 1.0) / d
        return branch + ((n + beta2) / hp.q if theorem == "3.3" else 0.0)
    if theorem in ("3.4", "4.4"):
        gamma1, gamma2 = gammas(tp)
        return gamma2 if k >= 1 else gamma1
    raise BoundsError(f"Unknown theorem {theorem!r}")


def size_exponent(theorem: str, k: int, tp: TheoremParams, delta: Optional[float] = None) -> float:
    """Octave growth e_k of omega_1(B_{j_a})^{-alpha/n} / omega_1(B_{j_a+k})^{-alpha/n} as bounded by the family."""
    beta1, _ = _betas(tp.hp)
    if theorem in ("3.1", "3.2", "4.1", "4.2"):
        return tp.hp.alpha * (1.0 + beta1 / tp.hp.dim)
    if theorem in ("3.3", "4.3"):
        d = _delta(tp, delta)
        return tp.hp.alpha if k >= 1 else tp.hp.alpha * (d - 1.0) / d
    return 0.0


def size_factor(theorem: str, k: int, tp: TheoremParams) -> float:
    """
    Explicit factor with ||piece_k||_{L^q(w2)} <= coefficient_k * factor * omega_1(B_{j_a+k})^{-alpha/n}.
    """
    if theorem in UNTRACKED_SIZE:
        return 1.0
    growth = 2.0 ** max(size_exponent(theorem, k, tp), 0.0)
    if theorem in ROUGH_THEOREMS:
        return SURFACE_MEASURE[tp.hp.dim] ** (1.0 / tp.hp.q) * growth
    return growth


def _scan(kernel: RadialKernel, octave_value: Callable[[int], float]) -> ConstantValue:
    """Sum octave_value over the kernel support; unbounded supports are closed with geometric tails."""
    if kernel.compact:
        per_octave = {k: octave_value(k) for k in kernel.octaves()}
        return ConstantValue(value=float(sum(per_octave.values())), per_octave=per_octave)

    per_octave: Dict[int, float] = {}

    def record(k: int) -> float:
        per_octave[k] = octave_value(k)
        return per_octave[k]

    try:
        below = integrate_to_origin(record, 0, tol=config.DROP_THRESHOLD)
        above = integrate_to_origin(lambda j: record(-j), -1, tol=config.DROP_THRESHOLD)
    except QuadratureError as exc:
        logger.warning("Constant for kernel %s diverges: %s", kernel.label, exc)
        return ConstantValue(
            value=math.inf,
            per_octave=dict(sorted(per_octave.items())),
            truncated=True,
            divergent=True,
            notes=[str(exc)],
        )
    notes = [f"octaves summed over [{min(per_octave)}, {max(per_octave)}] with geometric tails"]
    logger.debug("Kernel %s: %s", kernel.label, notes[0])
    return ConstantValue(
        value=below.value + above.value,
        per_octave=dict(sorted(per_octave.items())),
        truncated=True,
        notes=notes,
    )


def _radial_family(
    kernel: RadialKernel,
    exponent: Callable[[int], float],
    sigma: Optional[float] = None,
    nodes: Optional[int] = None,
) -> ConstantValue:
    nodes = nodes or config.NODES_PER_OCTAVE

    def octave_value(k: int) -> float:
        X = exponent(k)

        def integrand(t):
            return np.abs(kernel(t)) * t ** (X - 1.0) * _log_factor(t, sigma)

        return radial_octave(integrand, k, nodes, config.QUADRATURE_RULE, kernel.breakpoints)

    return _scan(kernel, octave_value)


def kernel_mass(kernel: RadialKernel) -> ConstantValue:
    """int |Phi(t)| dt over the support."""
    return _radial_family(kernel, lambda k: 1.0)


def kernel_polar_mass(kernel: RadialKernel, dim: int) -> ConstantValue:
    """int_{R^n} |Phi(y)|/|y|^n dy = |S^{n-1}| int |Phi(t)|/t dt."""
    radial = _radial_family(kernel, lambda k: 0.0)
    sigma = SURFACE_MEASURE[dim]
    return replace(
        radial,
        value=sigma * radial.value,
        per_octave={k: sigma * v for k, v in radial.per_octave.items()},
    )


def lambda_k(kernel: RadialKernel, k: int, tp: TheoremParams) -> float:
    """int_{(2^{k-1}, 2^k]} |Phi(t)| t^{(n+beta2)/q + alpha + beta1 alpha/n - 1} dt."""
    if kernel.compact and k not in kernel.octaves():
        return 0.0
    X = family_exponent("3.1", k, tp)
    return radial_octave(
        lambda t: np.abs(kernel(t)) * t ** (X - 1.0),
        k,
        config.NODES_PER_OCTAVE,
        config.QUADRATURE_RULE,
        kernel.breakpoints,
    )


def C1(kernel: RadialKernel, tp: TheoremParams) -> ConstantValue:
    return _radial_family(kernel, lambda k: family_exponent("3.2", k, tp))


def C2(kernel: RadialKernel, tp: TheoremParams, sigma: Optional[float] = None) -> ConstantValue:
    sigma = tp.effective_sigma if sigma is None else sigma
    return _radial_family(kernel, lambda k: family_exponent("3.2", k, tp), sigma)


def C3_C4(
    kernel: RadialKernel, tp: TheoremParams, delta: Optional[float] = None, sigma: Optional[float] = None
) -> Tuple[ConstantValue, ConstantValue]:
    sigma = tp.effective_sigma if sigma is None else sigma

    def exponent(k):
        return family_exponent("3.3", k, tp, delta)

    return _radial_family(kernel, exponent), _radial_family(kernel, exponent, sigma)


def C5_C6(
    kernel: RadialKernel, tp: TheoremParams, sigma: Optional[float] = None
) -> Tuple[ConstantValue, ConstantValue]:
    sigma = tp.effective_sigma if sigma is None else sigma

    def exponent(k):
        return family_exponent("3.4", k, tp)

    return _radial_family(kernel, exponent), _radial_family(kernel, exponent, sigma)


def _matrix_weight(theorem: str, tp: TheoremParams, delta: Optional[float]) -> Callable:
    """Shell integrand factor as a function of (||A||, ||A^{-1}||, |det A^{-1}|)."""
    hp = tp.hp
    _, beta2 = _betas(hp)

    def weight(norm, inverse_norm, det_inverse):
        above = inverse_norm > 1.0
        if theorem in ("4.1", "4.2"):
            power = family_exponent("4.1", 1, tp)
        else:
            power = np.where(above, family_exponent(theorem, 1, tp, delta), family_exponent(theorem, 0, tp, delta))
        if theorem == "4.4":
            base = det_inverse ** (1.0 / hp.q) * norm ** (hp.dim / hp.q)
        else:
            base = norm ** (-beta2 / hp.q) * det_inverse ** (1.0 / hp.q)
        return base * inverse_norm**power

    return weight


def _matrix_family_once(
    kernel: RadialKernel,
    matrix_field: MatrixField,
    weight: Callable,
    sigma: Optional[float],
    nodes: int,
) -> ConstantValue:
    dim = matrix_field.dim
    sphere = SphereGrid.default(dim)
    shells: Dict[int, float] = {}

    def octave_value(k: int) -> float:
        cuts = tuple(kernel.breakpoints) + tuple(matrix_field.shell_radii(k).tolist())
        ys, w = polar_nodes(k, sphere, nodes, config.QUADRATURE_RULE, cuts)
        t = np.linalg.norm(ys, axis=1)
        phi = np.abs(kernel(t))
        active = phi != 0
        if not np.any(active):
            return 0.0
        ys, w, t, phi = ys[active], w[active], t[active], phi[active]
        matrices = matrix_field(ys)
        determinants = np.linalg.det(matrices)
        singular = ~np.isfinite(determinants) | (np.abs(determinants) <= 1e-12 * matrix_norm(matrices) ** dim)
        if np.any(singular):
            raise HausdorffError(f"A(y) is singular at y = {ys[np.argmax(singular)].tolist()}")
        norm = matrix_norm(matrices)
        inverse_norm = matrix_norm(np.linalg.inv(matrices))
        values = w * phi / t**dim * weight(norm, inverse_norm, 1.0 / np.abs(determinants))
        values = values * _log_factor(inverse_norm, sigma)
        index = octave_of(inverse_norm)
        for j in np.unique(index):
            shells[int(j)] = shells.get(int(j), 0.0) + float(np.sum(values[index == j]))
        return float(np.sum(values))

    result = _scan(kernel, octave_value)
    result.per_octave = dict(sorted(shells.items()))
    return result


def _matrix_family(
    theorem: str,
    kernel: RadialKernel,
    matrix_field: MatrixField,
    tp: TheoremParams,
    sigma: Optional[float] = None,
    delta: Optional[float] = None,
) -> ConstantValue:
    """Shell family over {2^{j-1} < ||A^{-1}(y)|| <= 2^j}, checked for stability at doubled nodes."""
    weight = _matrix_weight(theorem, tp, delta)
    nodes = config.NODES_PER_OCTAVE
    result = _matrix_family_once(kernel, matrix_field, weight, sigma, nodes)
    if result.divergent:
        return result
    refined = _matrix_family_once(kernel, matrix_field, weight, sigma, 2 * nodes)
    shells = set(result.per_octave) | set(refined.per_octave)
    drift = max((abs(result.per_octave.get(j, 0.0) - refined.per_octave.get(j, 0.0)) for j in shells), default=0.0)
    if drift > config.PARTITION_TOLERANCE * max(abs(refined.value), 1e-300):
        raise BoundsError(
            f"||A^-1||-shell partition of field {matrix_field.label} is unstable under refinement "
            f"(drift {drift:.3e}); declare octave bounds or a conformal scale for the field"
        )
    logger.debug("Theorem %s shells %s (refinement drift %.2e)", theorem, result.per_octave, drift)
    return result


def theta_k(kernel: RadialKernel, matrix_field: MatrixField, k: int, tp: TheoremParams) -> float:
    return _matrix_family("4.1", kernel, matrix_field, tp).per_octave.get(k, 0.0)


def C7_C8(
    kernel: RadialKernel, matrix_field: MatrixField, tp: TheoremParams, sigma: Optional[float] = None
) -> Tuple[ConstantValue, ConstantValue]:
    sigma = tp.effective_sigma if sigma is None else sigma
    return (
        _matrix_family("4.2", kernel, matrix_field, tp),
        _matrix_family("4.2", kernel, matrix_field, tp, sigma),
    )


def C9_C10(
    kernel: RadialKernel,
    matrix_field: MatrixField,
    tp: TheoremParams,
    delta: Optional[float] = None,
    sigma: Optional[float] = None,
) -> Tuple[ConstantValue, ConstantValue]:
    sigma = tp.effective_sigma if sigma is None else sigma
    return (
        _matrix_family("4.3", kernel, matrix_field, tp, delta=delta),
        _matrix_family("4.3", kernel, matrix_field, tp, sigma, delta),
    )


def C11_C12(
    kernel: RadialKernel, matrix_field: MatrixField, tp: TheoremParams, sigma: Optional[float] = None
) -> Tuple[ConstantValue, ConstantValue]:
    sigma = tp.effective_sigma if sigma is None else sigma
    return (
        _matrix_family("4.4", kernel, matrix_field, tp),
        _matrix_family("4.4", kernel, matrix_field, tp, sigma),
    )


def octave_family(
    theorem: str,
    kernel: RadialKernel,
    tp: TheoremParams,
    matrix_field: Optional[MatrixField] = None,
) -> Dict[int, float]:
    """
    lambda_k (3.1, 3.2), mu_k (3.3), mu*_k (3.4) by kernel octave, or
    theta_k (4.1, 4.2), eta_k (4.3), eta*_k (4.4) by ||A^{-1}||-shell.
    """
    if theorem in ROUGH_THEOREMS:
        return _radial_family(kernel, lambda k: family_exponent(theorem, k, tp)).per_octave
    if theorem in MATRIX_THEOREMS:
        if matrix_field is None:
            raise BoundsError(f"Theorem {theorem} needs a matrix field")
        return _matrix_family(theorem, kernel, matrix_field, tp).per_octave
    raise BoundsError(f"Unknown theorem {theorem!r}")


def theorem_constant(
    theorem: str,
    kernel: RadialKernel,
    tp: TheoremParams,
    matrix_field: Optional[MatrixField] = None,
) -> ConstantValue:
    """The right-hand constant of the theorem (its log variant when p < 1)."""
    if theorem == "3.1":
        return kernel_mass(kernel)
    if theorem == "4.1":
        return kernel_polar_mass(kernel, tp.hp.dim)
    if theorem == "3.2":
        return C2(kernel, tp) if tp.uses_log else C1(kernel, tp)
    if theorem == "3.3":
        return C3_C4(kernel, tp)[1 if tp.uses_log else 0]
    if theorem == "3.4":
        return C5_C6(kernel, tp)[1 if tp.uses_log else 0]
    if matrix_field is None:
        raise BoundsError(f"Theorem {theorem} needs a matrix field")
    pairs = {"4.2": C7_C8, "4.3": C9_C10, "4.4": C11_C12}
    if theorem not in pairs:
        raise BoundsError(f"Unknown theorem {theorem!r}")
    return pairs[theorem](kernel, matrix_field, tp)[1 if tp.uses_log else 0]


def constants_table(
    kernel: RadialKernel,
    tp: TheoremParams,
    matrix_field: Optional[MatrixField] = None,
) -> Dict[str, object]:
    """Every constant that the parameters allow, keyed by name; unavailable ones carry the reason."""
    table: Dict[str, object] = {}

    def attempt(name: str, evaluate: Callable):
        try:
            table[name] = evaluate()
        except (BoundsError, HausdorffError) as exc:
            table[name] = {"unavailable": str(exc)}

    attempt("lambda_k", lambda: {str(k): v for k, v in octave_family("3.1", kernel, tp).items()})
    attempt("C1", lambda: C1(kernel, tp).to_dict())
    attempt("C2", lambda: C2(kernel, tp).to_dict())
    attempt("C3_C4", lambda: [c.to_dict() for c in C3_C4(kernel, tp)])
    attempt("gammas", lambda: list(gammas(tp)))
    attempt("C5_C6", lambda: [c.to_dict() for c in C5_C6(kernel, tp)])
    if matrix_field is not None:
        attempt("theta_k", lambda: {str(k): v for k, v in octave_family("4.1", kernel, tp, matrix_field).items()})
        attempt("C7_C8", lambda: [c.to_dict() for c in C7_C8(kernel, matrix_field, tp)])
        attempt("C9_C10", lambda: [c.to_dict() for c in C9_C10(kernel, matrix_field, tp)])
        attempt("C11_C12", lambda: [c.to_dict() for c in C11_C12(kernel, matrix_field, tp)])
    return table


# ---------------------------------------------------------------------------
# Gates
# ---------------------------------------------------------------------------


@dataclass
class GateCheck:
    name: str
    passed: bool
    margin: float = 0.0
    detail: str = ""

    def to_dict(self) -> Dict[str, object]:
        return {"name": self.name, "passed": self.passed, "margin": self.margin, "detail": self.detail}


@dataclass
class GateReport:
    theorem: str
    checks: List[GateCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failed(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]

    def margins(self) -> Dict[str, float]:
        return {check.name: check.margin for check in self.checks}

    def to_dict(self) -> Dict[str, object]:
        return {"theorem": self.theorem, "passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def _check(report: GateReport, name: str, passed: bool, margin: float = 0.0, detail: str = ""):
    report.checks.append(GateCheck(name=name, passed=bool(passed), margin=float(margin), detail=detail))


def _weight_checks(report: GateReport, tp: TheoremParams, theorem: str):
    hp = tp.hp
    n = hp.dim
    if not (hp.w1.is_power and hp.w2.is_power):
        _check(report, "power_weights", False, detail="theorem formulas need |x|^beta weights")
        return
    beta1, beta2 = hp.w1.beta, hp.w2.beta
    finite_index = {"3.3": (True, False), "4.3": (True, False), "3.4": (True, True), "4.4": (True, True)}
    strict1, strict2 = finite_index.get(theorem, (False, False))
    for label, beta, strict in (("w1", beta1, strict1), ("w2", beta2, strict2)):
        in_a1 = check_ap_power(beta, n, 1)
        passed = in_a1 and (beta < 0 if strict else True)
        need = "(-n, 0) for a finite critical index" if strict else "(-n, 0]"
        _check(report, f"{label}_in_A1", passed, min(beta + n, -beta), f"beta={beta}, need {need}")


def _delta_check(report: GateReport, name: str, delta: Optional[float], beta: float, n: int):
    if delta is None:
        _check(report, name, False, detail="not given")
        return
    index = reverse_holder_index_power(beta, n) if -n < beta <= 0 else 0.0
    _check(report, name, 1.0 < delta < index, min(delta - 1.0, index - delta), f"need 1 < {name} < r = {index:.6g}")


def _ratio_check(report: GateReport, tp: TheoremParams):
    """omega_2(B_k) <= C omega_1(B_k) uniformly in k."""
    hp = tp.hp
    ratios = [
        ball_weight(hp.w2, Ball.dyadic(k)) / ball_weight(hp.w1, Ball.dyadic(k))
        for k in range(config.K_MIN, config.K_MAX + 1)
    ]
    worst = max(ratios)
    passed = worst <= tp.cap
    detail = f"max ratio {worst:.6g} over k in [{config.K_MIN}, {config.K_MAX}], cap {tp.cap:.6g}"
    if hp.w1.is_power and hp.w2.is_power:
        passed = passed and hp.w1.beta == hp.w2.beta
        detail += f"; power exponents beta1={hp.w1.beta}, beta2={hp.w2.beta}"
    _check(report, "weight_ratio", passed, tp.cap - worst, detail)


def _field_checks(report: GateReport, tp: TheoremParams, theorem: str, kernel: RadialKernel, matrix_field: MatrixField):
    samples = matrix_field.samples(kernel)
    if samples.size == 0:
        _check(report, "field_samples", False, detail="kernel support has no quadrature nodes")
        return
    picks = samples[np.linspace(0, samples.shape[0] - 1, min(_GATE_SAMPLES, samples.shape[0])).astype(int)]
    matrices = matrix_field(picks)
    determinants = np.linalg.det(matrices)
    invertible = bool(np.all(np.abs(determinants) > 1e-12 * matrix_norm(matrices) ** matrix_field.dim))
    _check(report, "invertible", invertible, float(np.min(np.abs(determinants))), "|det A(y)| at sampled y")
    if not invertible:
        return
    sandwiches = [det_sandwich(M) for M in matrices]
    _check(
        report,
        "det_sandwich",
        all(s.holds for s in sandwiches),
        min(s.margin for s in sandwiches),
        "||A||^-n <= |det A^-1| <= ||A^-1||^n",
    )
    if theorem != "4.1":
        return
    rho = tp.rho_A if tp.rho_A is not None else matrix_field.rho_A
    if rho is None:
        _check(report, "rho_A", False, detail="rho_A must be declared")
        return
    condition = matrix_field.max_condition(kernel)
    _check(report, "rho_A_range", rho >= 1.0, rho - 1.0, "need 1 <= rho_A")
    _check(report, "condition_bound", condition <= rho * (1.0 + 1e-12), rho - condition, f"max ||A|| ||A^-1|| = {condition:.6g}")
    bounds = tp.octave_bounds or matrix_field.octave_bounds
    if bounds is None:
        _check(report, "octave_bounds", False, detail="(m, M) with 2^m < ||A^-1(y)|| <= 2^M must be declared")
        return
    inverse_norms = matrix_norm(np.linalg.inv(matrix_field(samples)))
    m, M = bounds
    margin = min(float(np.min(inverse_norms)) - 2.0**m, 2.0**M - float(np.max(inverse_norms)))
    _check(report, "octave_bounds", margin > 0 or math.isclose(margin, 0.0, abs_tol=1e-12), margin, f"declared ({m}, {M}]")


def gate_thm(
    tp: TheoremParams,
    which: str,
    kernel: Optional[RadialKernel] = None,
    matrix_field: Optional[MatrixField] = None,
    omega=None,
) -> GateReport:
    """Itemised hypothesis check of one theorem; the outcome is data, never raised."""
    if which not in THEOREMS:
        raise BoundsError(f"Unknown theorem {which!r}; expected one of {THEOREMS}")
    report = GateReport(theorem=which)
    hp = tp.hp
    n = hp.dim

    _check(report, "p_range", 0 < hp.p <= 1, min(hp.p, 1.0 - hp.p), "need 0 < p <= 1")
    _check(report, "q_range", hp.q > 1, hp.q - 1.0, "need 1 < q < inf")
    _check(report, "alpha_range", hp.hardy_admissible, hp.alpha - hp.critical_alpha, f"need alpha >= n(1-1/q) = {hp.critical_alpha:.6g}")
    if which not in ("3.1", "4.1") and tp.uses_log:
        floor = (1.0 - hp.p) / hp.p
        _check(report, "sigma_range", tp.effective_sigma > floor, tp.effective_sigma - floor, f"need sigma > {floor:.6g}")
    _weight_checks(report, tp, which)

    power = hp.w1.is_power and hp.w2.is_power
    if power and which in ("3.3", "4.3"):
        _delta_check(report, "delta", tp.delta, hp.w1.beta, n)
    if power and which in ("3.4", "4.4"):
        _delta_check(report, "delta1", tp.delta1, hp.w1.beta, n)
        _delta_check(report, "delta2", tp.delta2, hp.w2.beta, n)
        q_star, alpha_star = tp.q_star, tp.alpha_star
        if q_star is None or alpha_star is None:
            _check(report, "target_params", False, detail="alpha_star and q_star must be given")
        else:
            _check(report, "q_star_range", 1.0 <= q_star < hp.q, min(q_star - 1.0, hp.q - q_star), "need 1 <= q* < q")
            _check(report, "alpha_star_range", alpha_star > 0, alpha_star, "need alpha* > 0")
            conjugate = n / (n + hp.w2.beta)
            _check(report, "reverse_holder_exponent", hp.q > q_star * conjugate, hp.q - q_star * conjugate, f"need q > q* r' = {q_star * conjugate:.6g}")
            gap = (1.0 / hp.q + hp.alpha / n) - (1.0 / q_star + alpha_star / n)
            _check(report, "index_identity", abs(gap) <= _IDENTITY_TOLERANCE, -abs(gap), "1/q + alpha/n = 1/q* + alpha*/n")
        _ratio_check(report, tp)

    if which in ROUGH_THEOREMS and omega is not None:
        q_conjugate = math.inf if hp.q == 1 else hp.q / (hp.q - 1.0)
        norm = omega.lq_norm(q_conjugate)
        _check(report, "symbol_integrable", math.isfinite(norm), 0.0, f"||Omega||_L^q' = {norm:.6g}")
        if which == "3.1":
            _check(report, "symbol_constant", omega.constant is not None, detail="the Hardy-space bound is for Omega = const")

    if kernel is not None:
        if which == "3.1":
            _check(report, "kernel_support", kernel.compact, detail="supp Phi in (2^m, 2^M] must be declared")
        if which in MATRIX_THEOREMS:
            if matrix_field is None:
                _check(report, "matrix_field", False, detail="matrix theorems need a field")
            else:
                _field_checks(report, tp, which, kernel, matrix_field)
        if report.passed:
            try:
                constant = theorem_constant(which, kernel, tp, matrix_field)
                _check(report, "constant_finite", not constant.divergent, 0.0, f"constant {constant.value:.6g}")
            except (BoundsError, HausdorffError) as exc:
                _check(report, "constant_finite", False, detail=str(exc))

    if report.passed:
        logger.info("Theorem %s gate passed (%d checks)", which, len(report.checks))
    else:
        logger.info("Theorem %s gate failed: %s", which, ", ".join(report.failed()))
    return report
