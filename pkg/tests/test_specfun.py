import decimal
import math

import numpy as np
import pytest
from scipy import special

from errors import ConvergenceError, DomainError, RangeError, ValidationError
from specfun import (J1_FIRST_ZERO, RadialProfile, bessel_j0, bessel_j1, encircled_energy,
                     first_ring_fraction, j1_zero, radius_for_fraction, somb, somb_power)

# Reference values (Abramowitz & Stegun tables)
J0_REF = {1.0: 0.7651976865579666, 5.0: -0.1775967713143383, 10.0: -0.2459357644513483,
          20.0: 0.1670246643405832}
J1_REF = {1.0: 0.4400505857449335, 5.0: -0.3275791375914652, 10.0: 0.0434727461688614,
          20.0: 0.0668331241758502}


@pytest.mark.parametrize('x', sorted(J0_REF))
def test_bessel_j0_reference(x):
    assert bessel_j0(x) == pytest.approx(J0_REF[x], abs=1e-10)


@pytest.mark.parametrize('x', sorted(J1_REF))
def test_bessel_j1_reference(x):
    assert bessel_j1(x) == pytest.approx(J1_REF[x], abs=1e-10)


def test_bessel_symmetry_and_origin():
    assert bessel_j0(0.0) == 1.0
    assert bessel_j1(0.0) == 0.0
    assert bessel_j0(-3.3) == pytest.approx(bessel_j0(3.3), abs=1e-15)
    assert bessel_j1(-3.3) == pytest.approx(-bessel_j1(3.3), abs=1e-15)


def test_bessel_continuous_across_series_limit():
    below, above = bessel_j1(8.0 - 1e-9), bessel_j1(8.0 + 1e-9)
    assert below == pytest.approx(above, abs=1e-9)


def test_array_shape_preserved_and_scalar_is_float():
    x = np.linspace(0.0, 30.0, 12).reshape(3, 4)
    assert bessel_j0(x).shape == (3, 4)
    assert somb(x).shape == (3, 4)
    assert isinstance(somb(0.5), float)


def test_non_finite_argument_rejected():
    with pytest.raises(DomainError):
        bessel_j0(float('nan'))
    with pytest.raises(DomainError):
        somb(np.array([1.0, np.inf]))


def test_somb_values():
    assert somb(0.0) == 1.0
    assert somb(1e-6) == pytest.approx(1.0, abs=1e-12)
    assert somb(J1_FIRST_ZERO) == pytest.approx(0.0, abs=1e-12)
    assert somb(-2.5) == pytest.approx(somb(2.5), abs=1e-15)
    assert somb(2.0) == pytest.approx(bessel_j1(2.0), abs=1e-15)


def test_somb_power_keeps_sign_for_odd_exponents():
    x = 5.0  # inside the first negative lobe
    assert somb(x) < 0
    assert somb_power(x, 3) < 0
    assert somb_power(x, 4) == pytest.approx(somb(x) ** 4)


def test_j1_zeros():
    assert j1_zero(1) == pytest.approx(J1_FIRST_ZERO, abs=1e-12)
    assert j1_zero(2) == pytest.approx(7.015586669815619, abs=1e-12)
    assert j1_zero(3) == pytest.approx(10.173468135062722, abs=1e-12)
    with pytest.raises(RangeError):
        j1_zero(0)


def test_profile_validation():
    with pytest.raises(ValidationError):
        RadialProfile(exponent=3, cutoff_radius=10.0)
    with pytest.raises(ValidationError):
        RadialProfile(exponent=2, cutoff_radius=0.0)
    with pytest.raises(ValidationError):
        RadialProfile(exponent=2, cutoff_radius=10.0, node_count=8)
    with pytest.raises(RangeError):
        RadialProfile.for_photon_number(0)


def test_default_cutoff_shrinks_with_photon_number():
    p1 = RadialProfile.for_photon_number(1)
    p4 = RadialProfile.for_photon_number(4)
    assert p1.exponent == 2 and p4.exponent == 8
    assert p1.cutoff_radius == pytest.approx(50.0 * J1_FIRST_ZERO)
    assert p4.cutoff_radius == pytest.approx(p1.cutoff_radius / 2.0)


def test_encircled_energy_matches_closed_form():
    # int_0^r somb^2(t) t dt = 2 (1 - J0(r)^2 - J1(r)^2)
    profile = RadialProfile.for_photon_number(1)
    c = profile.cutoff_radius

    def closed(r):
        return 1.0 - bessel_j0(r) ** 2 - bessel_j1(r) ** 2

    for r in (0.5, 2.0, J1_FIRST_ZERO, 9.0):
        assert encircled_energy(profile, r) == pytest.approx(closed(r) / closed(c), abs=1e-7)


def test_encircled_energy_bounds_and_monotone():
    profile = RadialProfile.for_photon_number(3)
    assert encircled_energy(profile, 0.0) == 0.0
    assert encircled_energy(profile, profile.cutoff_radius) == 1.0
    radii = np.linspace(0.0, 6.0, 40)
    values = [encircled_energy(profile, r) for r in radii]
    assert all(b >= a for a, b in zip(values, values[1:]))
    with pytest.raises(RangeError):
        encircled_energy(profile, profile.cutoff_radius * 1.01)
    with pytest.raises(RangeError):
        encircled_energy(profile, -0.1)


def test_first_ring_fraction_near_airy_value():
    assert first_ring_fraction() == pytest.approx(0.838, abs=0.005)


def test_default_fraction_puts_single_photon_radius_on_first_zero():
    profile = RadialProfile.for_photon_number(1)
    assert radius_for_fraction(profile) == pytest.approx(J1_FIRST_ZERO, rel=1e-5)


def test_radius_for_fraction_inverts_encircled_energy():
    profile = RadialProfile.for_photon_number(2)
    r = radius_for_fraction(profile, 0.5)
    assert encircled_energy(profile, r) == pytest.approx(0.5, abs=1e-5)


def test_radius_for_fraction_rejects_bad_fraction():
    profile = RadialProfile.for_photon_number(1)
    for bad in (0.0, 1.0, 1.5, -0.2):
        with pytest.raises(RangeError):
            radius_for_fraction(profile, bad)


def test_fraction_beyond_cutoff_reports_non_convergence():
    short = RadialProfile(exponent=2, cutoff_radius=5.0, node_count=1024)
    with pytest.raises(ConvergenceError, match='cutoff'):
        radius_for_fraction(short, 0.9999)


def test_radius_shrinks_with_exponent():
    radii = [radius_for_fraction(RadialProfile.for_photon_number(n)) for n in (1, 2, 4, 8)]
    assert all(b < a for a, b in zip(radii, radii[1:]))
    assert radii[2] / radii[0] < 0.5
    assert math.isfinite(radii[-1])


# ========== independent oracles ==========

def _decimal_bessel(x: float, order: int, digits: int = 60) -> float:
    """Power series in 60-digit decimal arithmetic, free of float cancellation."""
    with decimal.localcontext() as ctx:
        ctx.prec = digits
        half = decimal.Decimal(repr(x)) / 2
        term = half ** order / math.factorial(order)
        total = term
        k = 1
        while abs(term) > decimal.Decimal(10) ** (-digits + 5):
            term = -term * half * half / (k * (k + order))
            total += term
            k += 1
        return float(total)


@pytest.mark.parametrize('x', [0.1, 0.5, 2.7, 7.9, 8.1, 12.0, 25.0, 41.3])
def test_bessel_matches_high_precision_series(x):
    assert bessel_j0(x) == pytest.approx(_decimal_bessel(x, 0), abs=1e-12)
    assert bessel_j1(x) == pytest.approx(_decimal_bessel(x, 1), abs=1e-12)


def test_bessel_matches_scipy_over_range():
    x = np.linspace(0.0, 60.0, 2401)
    assert np.allclose(bessel_j0(x), special.j0(x), rtol=0, atol=1e-12)
    assert np.allclose(bessel_j1(x), special.j1(x), rtol=0, atol=1e-12)


def test_small_argument_vectors():
    assert bessel_j1(0.1) == pytest.approx(0.0499375260, abs=1e-10)
    assert somb(0.5) == pytest.approx(0.9690738309, abs=1e-9)


def test_j1_derivative_recurrence():
    x = np.linspace(0.55, 29.55, 59)
    h = 1e-5
    slope = (bessel_j1(x + h) - bessel_j1(x - h)) / (2 * h)
    assert np.allclose(slope, bessel_j0(x) - bessel_j1(x) / x, rtol=0, atol=1e-8)
