import math

import numpy as np
import pytest

from bounds import (
    BoundsError,
    C1,
    C2,
    C3_C4,
    C7_C8,
    C9_C10,
    C11_C12,
    TheoremParams,
    constants_table,
    family_exponent,
    gammas,
    gate_thm,
    kernel_mass,
    kernel_polar_mass,
    lambda_k,
    octave_family,
    size_factor,
    theorem_constant,
    theta_k,
)
from hausdorff import (
    constant_field,
    constant_symbol,
    exp_decay_kernel,
    indicator_kernel,
    linear_symbol,
    piecewise_power_kernel,
    power_kernel,
    rotation_dilation_field,
)
from herz import HerzParams
from weights import Weight

LN2 = math.log(2.0)


def theorem_params(alpha=0.5, p=1.0, q=2.0, dim=1, beta1=0.0, beta2=0.0, **kwargs):
    hp = HerzParams(alpha=alpha, p=p, q=q, w1=Weight.power(beta1, dim), w2=Weight.power(beta2, dim))
    return TheoremParams(hp=hp, **kwargs)


def check(report, name):
    matches = [c for c in report.checks if c.name == name]
    assert matches, f"{name} not in {[c.name for c in report.checks]}"
    return matches[0]


def test_unit_kernel_families():
    kernel = indicator_kernel(0, 1)
    tp = theorem_params()
    assert lambda_k(kernel, 1, tp) == pytest.approx(1.0, rel=1e-12)
    assert lambda_k(kernel, 3, tp) == 0.0
    assert octave_family("3.1", kernel, tp) == {1: pytest.approx(1.0, rel=1e-12)}
    assert C1(kernel, tp).value == pytest.approx(1.0, rel=1e-12)
    assert kernel_mass(kernel).value == pytest.approx(1.0, rel=1e-12)


def test_log_weighted_constant():
    # int_1^2 (log2 t + 1) dt = 3 - 1/ln 2
    result = C2(indicator_kernel(0, 1), theorem_params(), sigma=1.0)
    assert result.value == pytest.approx(3.0 - 1.0 / LN2, rel=1e-10)


def test_lambda_in_two_dimensions():
    kernel = piecewise_power_kernel([(1, 1.0, -1.0)])
    assert lambda_k(kernel, 1, theorem_params(alpha=1.0, dim=2)) == pytest.approx(1.0, rel=1e-12)


def test_small_octave_branch_of_C3():
    tp = theorem_params(delta=2.0)
    assert family_exponent("3.3", 0, tp) == pytest.approx(0.75)
    assert family_exponent("3.3", 1, tp) == pytest.approx(1.0)
    c3, c4 = C3_C4(indicator_kernel(-1, 0), tp)
    assert c3.value == pytest.approx(4.0 / 3.0 * (1.0 - 2.0**-0.75), rel=1e-12)
    assert c4.value > 0


def test_gammas():
    tp = theorem_params(alpha_star=0.5, delta1=2.0, delta2=2.0)
    assert gammas(tp) == pytest.approx((0.25, 1.25))
    with pytest.raises(BoundsError):
        gammas(theorem_params(alpha_star=0.5, delta2=2.0))


def test_unbounded_kernels():
    tp = theorem_params()
    divergent = C1(power_kernel(0.0), tp)
    assert divergent.divergent
    assert divergent.value == math.inf

    decaying = C1(exp_decay_kernel(1.0), tp)
    assert not decaying.divergent
    assert decaying.truncated
    assert decaying.value == pytest.approx(1.0, rel=1e-9)


def test_constant_is_sum_of_its_octave_family():
    kernel = piecewise_power_kernel([(0, 1.0, 0.5), (1, 2.0, -1.0), (2, 0.5, 0.0)])
    tp = theorem_params(alpha=1.0, dim=2)
    family = octave_family("3.2", kernel, tp)
    assert set(family) == {0, 1, 2}
    assert C1(kernel, tp).value == pytest.approx(sum(family.values()), rel=1e-14)


def test_log_constant_grows_with_sigma():
    kernel = indicator_kernel(1, 2)
    tp = theorem_params()
    values = [C2(kernel, tp, sigma=s).value for s in (0.5, 1.0, 2.0)]
    assert values == sorted(values)
    assert values[0] < values[-1]


def test_polar_mass():
    assert kernel_polar_mass(indicator_kernel(0, 1), 2).value == pytest.approx(2.0 * math.pi * LN2, rel=1e-12)


def test_matrix_constants_for_a_constant_field():
    kernel = indicator_kernel(0, 1)
    field = constant_field(3.0 * np.eye(2))
    tp = theorem_params(alpha=1.0, dim=2)
    expected = 2.0 * math.pi * LN2 * math.sqrt(2.0) / 9.0
    c7, _ = C7_C8(kernel, field, tp)
    assert c7.value == pytest.approx(expected, rel=1e-10)
    assert set(c7.per_octave) == {-1}
    assert theta_k(kernel, field, -1, tp) == pytest.approx(expected, rel=1e-10)
    assert theta_k(kernel, field, 0, tp) == 0.0


def test_theorem_constant_choice():
    kernel = indicator_kernel(0, 1)
    assert theorem_constant("3.2", kernel, theorem_params()).value == pytest.approx(1.0, rel=1e-12)
    small_p = theorem_params(p=0.5, sigma=1.5)
    assert theorem_constant("3.2", kernel, small_p).value == pytest.approx(C2(kernel, small_p).value)
    with pytest.raises(BoundsError):
        theorem_constant("4.2", kernel, theorem_params())


def test_size_factor():
    tp = theorem_params(alpha=1.0, dim=2)
    assert size_factor("3.4", 3, tp) == 1.0
    assert size_factor("4.2", 1, tp) == pytest.approx(2.0)
    assert size_factor("3.2", 1, tp) == pytest.approx(math.sqrt(2.0 * math.pi) * 2.0)


def test_constants_table_marks_missing_parameters():
    table = constants_table(indicator_kernel(0, 1), theorem_params())
    assert "unavailable" in table["gammas"]
    assert "unavailable" in table["C3_C4"]
    assert table["C1"]["value"] == pytest.approx(1.0, rel=1e-12)
    assert "theta_k" not in table


def test_index_identity_gate():
    base = dict(alpha_star=1.0 / 3.0, delta1=2.0, delta2=2.0)
    passing = gate_thm(theorem_params(q_star=1.5, **base), "3.4")
    assert check(passing, "index_identity").passed
    assert check(passing, "q_star_range").passed

    failing = gate_thm(theorem_params(q_star=1.6, **base), "3.4")
    assert not check(failing, "index_identity").passed
    assert not failing.passed


def test_weight_ratio_gate():
    tp = theorem_params(beta2=-0.5, q_star=1.5, alpha_star=1.0 / 3.0, delta1=2.0, delta2=2.0)
    report = gate_thm(tp, "3.4")
    assert not check(report, "weight_ratio").passed
    assert "weight_ratio" in report.failed()


def test_matrix_gate_passes_for_rotations():
    kernel = indicator_kernel(0, 1)
    tp = theorem_params(alpha=1.0, dim=2, octave_bounds=(0, 1))
    report = gate_thm(tp, "4.1", kernel, rotation_dilation_field())
    assert report.passed, report.failed()
    assert check(report, "constant_finite").passed

    tight = theorem_params(alpha=1.0, dim=2, octave_bounds=(0, 1), rho_A=1.5)
    report = gate_thm(tight, "4.1", kernel, rotation_dilation_field())
    assert report.failed() == ["condition_bound"]


def test_rough_gates():
    tp = theorem_params()
    assert not check(gate_thm(tp, "3.1", exp_decay_kernel(1.0)), "kernel_support").passed
    assert gate_thm(tp, "3.1", indicator_kernel(0, 1), omega=constant_symbol(1.0, 1)).passed
    report = gate_thm(theorem_params(dim=2, alpha=1.0), "3.1", indicator_kernel(0, 1), omega=linear_symbol(1.0, [1.0, 0.0]))
    assert report.failed() == ["symbol_constant"]
    assert not check(gate_thm(theorem_params(alpha=0.25), "3.2"), "alpha_range").passed
    with pytest.raises(BoundsError):
        gate_thm(tp, "5.1")


def test_matrix_theorems_need_a_field():
    report = gate_thm(theorem_params(), "4.2", indicator_kernel(0, 1))
    assert "matrix_field" in report.failed()


def _scalar_reduction(theorem, c, tp, log):
    """Value of the shell integral for A(y) = cI in the plane, Phi = chi_(1,2]."""
    n, q, alpha = tp.hp.dim, tp.hp.q, tp.hp.alpha
    beta = tp.hp.w2.beta
    norm, inverse_norm, det_inverse = c * math.sqrt(n), math.sqrt(n) / c, c**-n
    above = inverse_norm > 1.0
    if theorem == "4.4":
        gamma1, gamma2 = gammas(tp)
        weight = det_inverse ** (1.0 / q) * norm ** (n / q) * inverse_norm ** (gamma2 if above else gamma1)
    else:
        if theorem == "4.2":
            power = alpha * (1.0 + tp.hp.w1.beta / n)
        else:
            power = alpha if above else alpha * (tp.delta - 1.0) / tp.delta
        weight = norm ** (-beta / q) * det_inverse ** (1.0 / q) * inverse_norm**power
    factor = 1.0
    if log:
        lg = math.log2(inverse_norm)
        factor = (lg + 1.0 if above else abs(lg)) ** tp.sigma
    return 2.0 * math.pi * LN2 * weight * factor


@pytest.mark.parametrize("c", [3.0, 0.5])
@pytest.mark.parametrize("theorem, family", [("4.2", C7_C8), ("4.3", C9_C10), ("4.4", C11_C12)])
def test_matrix_constants_match_the_scalar_reduction(theorem, family, c):
    tp = theorem_params(
        alpha=1.0, p=0.5, dim=2, beta1=-0.5, beta2=-0.5, delta=1.5, sigma=1.5, alpha_star=0.5, delta1=2.0, delta2=2.0
    )
    plain, logged = family(indicator_kernel(0, 1), constant_field(c * np.eye(2)), tp)
    assert plain.value == pytest.approx(_scalar_reduction(theorem, c, tp, log=False), rel=1e-10)
    assert logged.value == pytest.approx(_scalar_reduction(theorem, c, tp, log=True), rel=1e-10)
    assert set(plain.per_octave) == {math.ceil(math.log2(math.sqrt(2.0) / c))}


def test_index_shift_fixture_passes_and_q_star_perturbation_breaks_the_identity():
    base = dict(alpha=1.0, q=4.0, beta1=-0.5, beta2=-0.5, alpha_star=7.0 / 12.0, delta1=1.5, delta2=1.5)
    for theorem in ("3.4", "4.4"):
        assert gate_thm(theorem_params(q_star=1.5, **base), theorem).passed
    perturbed = gate_thm(theorem_params(q_star=1.51, **base), "3.4")
    assert perturbed.failed() == ["index_identity"]
