import math

import numpy as np
import pytest

from hausdorff import (
    HausdorffError,
    MatrixField,
    apply_hausdorff_1d,
    apply_matrix_hausdorff,
    apply_rough_hausdorff,
    constant_field,
    constant_symbol,
    det_sandwich,
    direct_rough_hausdorff,
    field_from_dict,
    hausdorff_1d_values,
    indicator_kernel,
    kernel_from_dict,
    linear_symbol,
    matrix_image,
    matrix_norm,
    matrix_values,
    piecewise_power_kernel,
    power_dilation_field,
    rotation_dilation_field,
    rough_image,
    rough_values,
    table_kernel,
    RadialKernel,
)
from herz import SampledFunction, combine, indicator_function, power_function


LN2 = math.log(2.0)


def half_line_indicator():
    """chi_[0, 1] on R."""
    return SampledFunction(
        evaluator=lambda p: ((p[:, 0] >= 0.0) & (p[:, 0] <= 1.0)).astype(float),
        dim=1,
        support=(None, 0),
    )


def test_matrix_norm_is_frobenius():
    assert matrix_norm(np.eye(2)) == pytest.approx(math.sqrt(2.0))
    assert matrix_norm(np.diag([3.0, 4.0])) == pytest.approx(5.0)
    assert matrix_norm(np.zeros((3, 3))) == 0.0
    np.testing.assert_allclose(matrix_norm(np.stack([np.eye(2), 2 * np.eye(2)])), [math.sqrt(2.0), 2 * math.sqrt(2.0)])


def test_det_sandwich_holds_for_rotations():
    angle = 0.7
    rotation = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    check = det_sandwich(3.0 * rotation)
    assert check.holds
    assert check.margin >= 0


def test_one_dimensional_operator_examples():
    kernel = indicator_kernel(0, 1)
    f = half_line_indicator()
    assert apply_hausdorff_1d(kernel, f, 0.5).value == pytest.approx(LN2, rel=1e-12)
    assert apply_hausdorff_1d(kernel, f, 4.0).value == 0.0
    assert apply_hausdorff_1d(kernel, SampledFunction.zero(1), 0.5).value == 0.0


def test_rough_operator_examples():
    kernel = indicator_kernel(0, 1)
    f = half_line_indicator()
    assert apply_rough_hausdorff(kernel, constant_symbol(1.0, 1), f, [1.0]).value == pytest.approx(LN2, rel=1e-12)
    assert apply_rough_hausdorff(kernel, constant_symbol(0.0, 1), f, [1.0]).value == 0.0


def test_evaluation_at_the_origin_is_undefined():
    with pytest.raises(HausdorffError, match="x != 0"):
        rough_values(indicator_kernel(0, 1), constant_symbol(1.0, 2), indicator_function(2, -1, 1), [0.0, 0.0])


def test_infinite_kernels_report_truncation():
    kernel = kernel_from_dict({"kind": "exp_decay", "exponent": 1.0})
    result = apply_hausdorff_1d(kernel, indicator_function(1, -1, 1), 0.75)
    assert result.truncated
    assert result.notes


def test_kernel_validation():
    with pytest.raises(HausdorffError):
        indicator_kernel(1, 1)
    with pytest.raises(HausdorffError):
        RadialKernel(profile=lambda t: np.where(t > 1.5, np.inf, 1.0), support=(0, 1))
    with pytest.raises(HausdorffError):
        table_kernel([1.0, 0.5], [1.0, 1.0])
    with pytest.raises(HausdorffError):
        kernel_from_dict({"kind": "gaussian"})


def test_kernel_specs_round_trip():
    spec = {"kind": "piecewise_power", "pieces": [[0, 1.0, 0.5], [1, 2.0, -1.0]]}
    kernel = kernel_from_dict(spec)
    assert kernel.support == (-1, 1)
    assert kernel.to_dict() == spec
    t = np.array([0.75, 1.5, 3.0])
    np.testing.assert_allclose(kernel(t), [0.75**0.5, 2.0 / 1.5, 0.0])


def test_linearity():
    kernel = indicator_kernel(-1, 1)
    omega = linear_symbol(1.0, [0.5, -0.25])
    f1 = indicator_function(2, -1, 1)
    f2 = power_function(2, 0.5, 0, 2)
    xs = np.array([[0.6, 0.3], [-1.2, 2.0], [0.1, -0.05]])
    combined = rough_values(kernel, omega, combine([f1, f2], [2.0, -3.0]), xs)
    separate = 2.0 * rough_values(kernel, omega, f1, xs) - 3.0 * rough_values(kernel, omega, f2, xs)
    np.testing.assert_allclose(combined, separate, rtol=1e-10, atol=1e-14)


def test_kernel_additivity_over_octaves():
    kernel = piecewise_power_kernel([(0, 1.0, 0.5), (1, 2.0, -1.0)])
    omega = constant_symbol(1.0, 2)
    f = indicator_function(2, -1, 1)
    xs = np.array([[0.6, 0.3], [1.5, -0.4]])
    whole = rough_values(kernel, omega, f, xs)
    split = sum(rough_values(kernel.restrict(k), omega, f, xs) for k in kernel.octaves())
    np.testing.assert_allclose(split, whole, rtol=1e-10)


@pytest.mark.parametrize("lam", [2.0, 0.5])
def test_dilation_covariance(lam):
    kernel = indicator_kernel(-1, 1)
    omega = linear_symbol(1.0, [0.3, 0.4])
    f = indicator_function(2, -1, 1)
    rng = np.random.default_rng(0)
    xs = rng.uniform(-2.0, 2.0, size=(50, 2))
    np.testing.assert_allclose(
        rough_values(kernel, omega, f.dilated(lam), xs),
        rough_values(kernel, omega, f, lam * xs),
        rtol=1e-10,
        atol=1e-14,
    )


@pytest.mark.parametrize("x", [[0.9, 0.4], [-0.3, 1.7]])
def test_direct_integral_form_matches_polar_form(x):
    kernel = indicator_kernel(0, 1)
    omega = linear_symbol(1.0, [0.5, 0.0])
    f = indicator_function(2, -1, 1)
    np.testing.assert_allclose(
        direct_rough_hausdorff(kernel, omega, f, x), apply_rough_hausdorff(kernel, omega, f, x).value, rtol=1e-10
    )


def test_direct_integral_form_in_one_dimension():
    kernel = indicator_kernel(0, 1)
    omega = constant_symbol(1.0, 1)
    f = power_function(1, 1.0, -1, 1)
    np.testing.assert_allclose(
        direct_rough_hausdorff(kernel, omega, f, [0.8]), apply_rough_hausdorff(kernel, omega, f, [0.8]).value, rtol=1e-10
    )


def test_matrix_operator_of_constant_function():
    f = SampledFunction(evaluator=lambda p: np.ones(p.shape[0]), dim=2, support=(None, 60), radial=True)
    kernel = indicator_kernel(0, 1)
    for matrix_field in (constant_field([[2.0, 1.0], [0.0, 1.0]]), rotation_dilation_field(1.5, 0.0, 1.0)):
        result = apply_matrix_hausdorff(kernel, matrix_field, f, [0.4, -0.7])
        assert result.value == pytest.approx(2.0 * math.pi * LN2, rel=1e-12)
        assert sum(result.per_octave.values()) == pytest.approx(result.value, rel=1e-12)


def test_identity_field_is_a_constant_pullback():
    kernel = indicator_kernel(0, 1)
    f = indicator_function(2, -1, 1)
    x = np.array([[0.3, 0.4], [1.5, 0.0]])
    values = matrix_values(kernel, constant_field(np.eye(2)), f, x)
    np.testing.assert_allclose(values, 2.0 * math.pi * LN2 * f(x), rtol=1e-12)


def test_matrix_operator_in_one_dimension_doubles_the_1d_operator():
    kernel = indicator_kernel(0, 1)
    f = indicator_function(1, -1, 1)
    xs = np.array([[0.75], [-1.25], [3.0]])
    np.testing.assert_allclose(
        matrix_values(kernel, power_dilation_field(1), f, xs),
        2.0 * hausdorff_1d_values(kernel, f, xs),
        rtol=1e-12,
        atol=1e-15,
    )


def test_matrix_operator_matches_rough_operator_for_radial_dilations():
    kernel = indicator_kernel(-1, 1)
    f = indicator_function(2, -2, 1)
    xs = np.array([[0.6, 0.3], [1.1, -0.9], [0.05, 0.1]])
    np.testing.assert_allclose(
        matrix_values(kernel, power_dilation_field(2), f, xs),
        rough_values(kernel, constant_symbol(1.0, 2), f, xs),
        rtol=1e-10,
    )


def test_singular_field_names_the_point():
    singular = MatrixField(matrix=lambda ys: np.zeros((ys.shape[0], 2, 2)), dim=2)
    with pytest.raises(HausdorffError, match="singular at y"):
        matrix_values(indicator_kernel(0, 1), singular, indicator_function(2, -1, 1), [[0.5, 0.5]])
    with pytest.raises(HausdorffError):
        constant_field([[1.0, 2.0], [2.0, 4.0]])


def test_field_properties():
    kernel = indicator_kernel(0, 1)
    rotation = rotation_dilation_field()
    assert rotation.max_condition(kernel) == pytest.approx(2.0)
    assert rotation.shell_range(kernel) == (0, 1)
    field = field_from_dict({"kind": "power_dilation", "c0": 2.0, "exponent": -1.0, "octave_bounds": [-1, 1]}, 2)
    assert field.octave_bounds == (-1, 1)
    assert field.conformal
    with pytest.raises(HausdorffError):
        field_from_dict({"kind": "rotation_dilation"}, 3)


def test_rough_image_declares_its_support():
    kernel = indicator_kernel(0, 1)
    f = indicator_function(2, -1, 1)
    image = rough_image(kernel, constant_symbol(1.0, 2), f)
    assert image.support == (-1, 2)
    assert image(np.array([[5.0, 0.0]]))[0] == 0.0


def test_symbol_norms():
    omega = constant_symbol(2.0, 2)
    assert omega.lq_norm(2.0) == pytest.approx(2.0 * math.sqrt(2.0 * math.pi), rel=1e-12)
    assert linear_symbol(0.0, [1.0, 0.0]).lq_norm(math.inf) == pytest.approx(1.0)


def test_matrix_image_support_uses_the_callers_rho():
    kernel = indicator_kernel(0, 1)
    f = indicator_function(2, -1, 1)
    undeclared = MatrixField(
        matrix=lambda ys: np.broadcast_to(2.0 * np.eye(2), (ys.shape[0], 2, 2)),
        dim=2,
        octave_bounds=(-1, 0),
    )
    assert matrix_image(kernel, undeclared, f).support == (None, 1)

    image = matrix_image(kernel, undeclared, f, rho_A=2.0)
    assert image.support == (-4, 1)
    assert matrix_image(kernel, constant_field(2.0 * np.eye(2)), f).support == image.support
    x = np.array([[0.2, 0.0], [0.9, 0.3]])
    np.testing.assert_allclose(image(x), matrix_values(kernel, undeclared, f, x), rtol=1e-12)
