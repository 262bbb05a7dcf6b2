import math

import numpy as np
import pytest

from atoms import make_central_atom, make_dyadic_unit
from herz import (
    HerzError,
    HerzParams,
    SampledFunction,
    block_norm_upper_bound,
    combine,
    finite_atomic_norm,
    function_from_dict,
    herz_norm,
    indicator_function,
    power_function,
    weighted_lq_norm,
)
from weights import Ball, Weight


def params(alpha=0.5, p=1.0, q=2.0, dim=1, beta1=0.0, beta2=0.0):
    return HerzParams(alpha=alpha, p=p, q=q, w1=Weight.power(beta1, dim), w2=Weight.power(beta2, dim))


def test_params_validation():
    with pytest.raises(HerzError):
        params(p=0.0)
    with pytest.raises(HerzError):
        params(q=0.5)
    with pytest.raises(HerzError):
        HerzParams(alpha=1.0, p=1.0, q=2.0, w1=Weight.power(0.0, 1), w2=Weight.power(0.0, 2))


def test_moment_order_and_admissibility():
    hp = params(alpha=1.5, dim=2)
    assert hp.critical_alpha == pytest.approx(1.0)
    assert hp.min_moment_order == 0
    assert params(alpha=2.5, dim=2).min_moment_order == 1
    assert not params(alpha=0.25).hardy_admissible


def test_weighted_lq_norm_examples():
    unit_annulus = indicator_function(1, 0, 0)
    assert weighted_lq_norm(unit_annulus, 2.0, Weight.power(0.0, 1)) == pytest.approx(1.0, rel=1e-12)

    disk = indicator_function(2, None, 0, value=-3.0)
    assert weighted_lq_norm(disk, 1.0, Weight.power(0.0, 2)) == pytest.approx(3.0 * math.pi, rel=1e-10)

    ramp = power_function(1, 1.0, 0, 0)
    assert weighted_lq_norm(ramp, 2.0, Weight.power(-1.0, 1)) == pytest.approx(math.sqrt(0.75), rel=1e-12)


def test_weighted_lq_norm_over_a_ball_cuts_the_support():
    f = indicator_function(2, 1, 2)
    inside = weighted_lq_norm(f, 2.0, Weight.power(0.0, 2), region=Ball.explicit(3.0))
    assert inside == pytest.approx(math.sqrt(math.pi * (9.0 - 1.0)), rel=1e-12)


def test_herz_norm_single_annulus():
    norm = herz_norm(indicator_function(1, 0, 0), params())
    assert norm.value == pytest.approx(math.sqrt(2.0), rel=1e-12)
    assert norm.k_range == (-1, 1)
    assert norm.per_annulus[-1] == 0.0
    assert norm.tail_estimate == 0.0


def test_herz_norm_of_zero_function():
    assert herz_norm(SampledFunction.zero(2), params(dim=2, alpha=1.0)).value == 0.0


@pytest.mark.parametrize("c", [-2.0, 0.5, 10.0])
def test_herz_norm_homogeneity(c):
    hp = params(alpha=1.0, dim=2)
    f = indicator_function(2, -1, 1)
    np.testing.assert_allclose(herz_norm(f.scaled(c), hp).value, abs(c) * herz_norm(f, hp).value, rtol=1e-12)


def test_herz_norm_is_sum_of_annulus_terms():
    hp = params(alpha=0.75, p=0.5, q=2.0)
    f = power_function(1, -0.25, -2, 2)
    norm = herz_norm(f, hp)
    resummed = sum(herz_norm(f, hp, (k, k)).value ** hp.p for k in range(-3, 4))
    np.testing.assert_allclose(norm.value**hp.p, resummed, rtol=1e-12)


def test_herz_norm_reaching_the_origin():
    hp = params(alpha=0.5, dim=2)
    norm = herz_norm(indicator_function(2, None, 0), hp)
    # term_k = pi^(1/4) sqrt(3 pi / 4) 2^(3k/2) for k <= 0
    first = math.pi**0.25 * math.sqrt(3.0 * math.pi / 4.0)
    assert norm.value == pytest.approx(first / (1.0 - 2.0**-1.5), rel=1e-9)


def test_herz_norm_reports_the_truncated_tail():
    hp = params()
    f = indicator_function(1, 1, 2)
    narrow = herz_norm(f, hp, (1, 1))
    wide = herz_norm(f, hp, (0, 3))
    assert narrow.tail_estimate > 0
    assert wide.value >= narrow.value
    with pytest.raises(HerzError):
        herz_norm(f, hp, (2, 1))


def test_finite_atomic_norm_formula():
    assert finite_atomic_norm([(1.0, None)], 1.0, validate=False) == 1.0
    assert finite_atomic_norm([(3.0, None), (4.0, None)], 1.0, validate=False) == pytest.approx(7.0)
    assert finite_atomic_norm([(3.0, None), (-4.0, None)], 0.5, validate=False) == pytest.approx(
        (math.sqrt(3.0) + 2.0) ** 2
    )
    assert block_norm_upper_bound([(3.0, None), (4.0, None)], 1.0, validate=False) == pytest.approx(7.0)
    with pytest.raises(HerzError):
        finite_atomic_norm([(1.0, None)], 2.0, validate=False)


def test_combine_and_dilate():
    f = indicator_function(1, 1, 2)
    g = indicator_function(1, -1, 0)
    both = combine([f, g], [2.0, -1.0])
    assert both.support == (-1, 2)
    np.testing.assert_allclose(both(np.array([[1.5], [0.5], [-3.0]])), [2.0, -1.0, 2.0])

    shrunk = f.dilated(2.0)
    assert shrunk.support == (0, 1)
    assert shrunk(np.array([[0.75]]))[0] == 1.0


def test_function_from_dict():
    hp = params()
    f = function_from_dict({"kind": "indicator", "k_lo": 0, "k_hi": 0}, hp)
    assert f.support == (0, 0)
    with pytest.raises(HerzError):
        function_from_dict({"kind": "spline"}, hp)


def test_herz_norm_grows_with_the_window():
    hp = params(alpha=0.75, p=0.5, q=2.0)
    f = power_function(1, -0.25, -2, 2)
    norms = [herz_norm(f, hp, (-w, w)) for w in range(4)]
    values = [n.value for n in norms]
    tails = [n.tail_estimate for n in norms]
    assert values == sorted(values)
    assert tails == sorted(tails, reverse=True)
    assert tails[-1] == 0.0
    assert values[-1] == pytest.approx(herz_norm(f, hp).value, rel=1e-12)


def test_unit_sums_are_controlled_by_their_coefficients():
    hp = params()
    rng = np.random.default_rng(11)
    ratios = []
    for _ in range(20):
        size = int(rng.integers(1, 5))
        ks = rng.integers(-3, 4, size=size)
        shapes = rng.choice(["constant", "bump"], size=size)
        lambdas = rng.uniform(0.1, 3.0, size=size)
        units = [make_dyadic_unit(int(k), hp, shape=str(shape)) for k, shape in zip(ks, shapes)]
        assembled = combine([u.profile for u in units], lambdas)
        bound = block_norm_upper_bound(list(zip(lambdas, units)), hp.p, hp)
        ratios.append(herz_norm(assembled, hp).value / bound)
    assert min(ratios) > 0
    assert max(ratios) / min(ratios) < 2.0


def test_atomic_norms_validate_when_given_params():
    hp = params()
    atom = make_central_atom(0, hp)
    assert finite_atomic_norm([(2.0, atom)], 1.0, hp) == pytest.approx(2.0)
    inflated = atom.scaled(2.0)
    with pytest.raises(HerzError, match="size"):
        finite_atomic_norm([(1.0, atom), (1.0, inflated)], 1.0, hp)
    with pytest.raises(HerzError, match="Unit 0"):
        block_norm_upper_bound([(1.0, inflated)], 1.0, hp)
    assert finite_atomic_norm([(1.0, inflated)], 1.0, hp, validate=False) == 1.0
