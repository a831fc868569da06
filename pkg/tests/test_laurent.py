import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgsov.errors import NumericError
from sgsov.laurent import (LaurentPoly, average, evaluate, from_samples, interpolate, is_real,
                           roots, sample_points)

coef = st.complex_numbers(min_magnitude=0.1, max_magnitude=3.0, allow_nan=False, allow_infinity=False)


@st.composite
def polys(draw, parity=None):
    k_min = draw(st.integers(-4, 2))
    n = draw(st.integers(1, 6))
    c = draw(st.lists(coef, min_size=n, max_size=n))
    if parity is not None:
        if (k_min % 2 == 0) != (parity == "even"):
            k_min += 1
        return LaurentPoly.from_dict({k_min + 2 * j: v for j, v in enumerate(c)}, parity)
    return LaurentPoly(k_min, c)


points = st.complex_numbers(min_magnitude=0.5, max_magnitude=2.0, allow_nan=False, allow_infinity=False)


@given(polys(), polys(), points)
def test_ring_operations_pointwise(f, g, x):
    scale = (abs(f(x)) + 1) * (abs(g(x)) + 1)
    assert abs((f + g)(x) - (f(x) + g(x))) < 1e-10 * scale
    assert abs((f * g)(x) - f(x) * g(x)) < 1e-10 * scale
    assert abs((f - g)(x) - (f(x) - g(x))) < 1e-10 * scale


@given(polys(), points, st.integers(-3, 3))
def test_shift_scale_conj(f, x, m):
    assert abs(f.shifted(m)(x) - x ** m * f(x)) < 1e-9 * (abs(f(x)) + 1) * abs(x) ** m
    assert abs(f.scaled(1.3)(x) - f(1.3 * x)) < 1e-9 * (abs(f(1.3 * x)) + 1)
    assert abs(f.conj()(x) - np.conj(f(np.conj(x)))) < 1e-9 * (abs(f(x)) + 1)


@given(polys(parity="even"), polys(parity="odd"))
def test_parity_is_multiplicative(f, g):
    assert (f * f).parity == "even"
    assert (f * g).parity == "odd"
    assert (g * g).parity == "even"


def test_parity_flag_rejects_wrong_coefficients():
    with pytest.raises(ValueError):
        LaurentPoly(0, [1.0, 1.0], "even")


@settings(max_examples=40)
@given(polys(parity="even"))
def test_interpolation_round_trip(f):
    lo, hi = f.window
    xs = sample_points(len(range(lo, hi + 1, 2)) + 2, 1.0, "even", 0.3)
    g, resid = from_samples(xs, [f(x) for x in xs], (lo, hi), "even", full=True)
    assert g.distance(f) < 1e-10 * max(f.norm(), 1)
    assert resid < 1e-10 * max(f.norm(), 1)


def test_interpolate_reports_misfit_for_non_polynomial():
    _, resid = interpolate(np.exp, (-2, 2), extra=3)
    assert resid > 1e-4


@settings(max_examples=40)
@given(st.lists(st.complex_numbers(min_magnitude=0.4, max_magnitude=2.5, allow_nan=False,
                                   allow_infinity=False), min_size=1, max_size=5, unique=True),
       st.integers(-3, 3))
def test_roots_recovered(rs, shift):
    # keep roots well separated so clustering is unambiguous
    for i, a in enumerate(rs):
        for b in rs[:i]:
            if abs(a - b) < 0.1:
                return
    f = LaurentPoly.from_roots(rs, lead=1.7, shift=shift)
    found = roots(f).values()
    assert len(found) == len(rs)
    for r in rs:
        assert min(abs(r - z) for z in found) < 1e-6 * abs(r)


def test_roots_even_polynomial_come_in_pairs():
    f = LaurentPoly.from_dict({-2: 1.0, 0: -5.0, 2: 4.0}, "even")
    vals = sorted(roots(f).values(), key=lambda z: z.real)
    assert np.allclose(vals, [-1, -0.5, 0.5, 1])


def test_roots_of_zero_raise():
    with pytest.raises(NumericError):
        roots(LaurentPoly.zero())


@settings(max_examples=30)
@given(polys(), st.sampled_from([3, 5]), points)
def test_average_is_orbit_product(f, p, x):
    F = average(f, p)
    w = np.exp(2j * np.pi / p)
    direct = np.prod([f(w ** k * x) for k in range(p)])
    assert abs(F(x ** p) - direct) < 1e-8 * max(abs(direct), 1)


def test_average_of_constant_power():
    f = LaurentPoly.constant(2.0)
    assert abs(average(f, 5)(1.0) - 32.0) < 1e-12


def test_is_real_and_evaluate():
    f = LaurentPoly.from_dict({-1: 1.0, 1: 2.0})
    assert is_real(f)
    assert not is_real(f * 1j)
    assert evaluate(f, 2.0) == pytest.approx(4.5)


def test_json_round_trip():
    f = LaurentPoly.from_dict({-2: 1 + 2j, 0: 3.0, 2: -1j}, "even")
    g = LaurentPoly.from_json(f.to_json())
    assert g.distance(f) == 0 and g.parity == "even"
