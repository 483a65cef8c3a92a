import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadtest.core import closed_form, spectra
from quadtest.core.quantile import two_sided_critical_value
from quadtest.errors import DomainError
from quadtest.models.coefficients import SobolevDerivative


def test_derivative_constant_for_the_first_order_ellipsoid():
    """Gamma(1/2) / ((2 pi) Gamma(5/2)) = 2 / (3 pi)."""
    kappa_parts, kappa, C_dsa, p = closed_form.derivative_constants(SobolevDerivative([1.0], [0.0]))
    assert kappa_parts.tolist() == pytest.approx([0.5])
    assert kappa == pytest.approx(0.5)
    assert C_dsa == pytest.approx(2.0 / (3.0 * math.pi), rel=1e-12)
    assert p == pytest.approx(0.5)


def test_rate_for_the_smooth_ellipsoid():
    rate = closed_form.closed_form_rate_derivative([2.0], [0.0], 1, 1e6, 0.05)
    assert rate.rate_exponent == pytest.approx(4.0 / 9.0)
    assert rate.kappa == pytest.approx(0.25)
    assert rate.delta == 0.0
    assert rate.r_n == pytest.approx(1e6 ** (-4.0 / 9.0))
    assert rate.r_star == pytest.approx(rate.C_star * rate.r_n)


def test_derivative_constant_agrees_with_the_generic_formula():
    rate = closed_form.closed_form_rate_derivative([2.0], [0.0], 1, 1e6, 0.05)
    C0 = rate.constants["I0_constant"]
    C1 = rate.constants["I1_constant"]
    p = rate.constants["sum_exponent"]
    generic = closed_form.sharp_constant(C0, C1, p, two_sided_critical_value(0.05))
    assert rate.C_star == pytest.approx(generic, rel=1e-12)


def test_derivative_order_slows_the_rate():
    plain = closed_form.closed_form_rate_derivative([2.0, 2.0], [0.0, 0.0], 2, 1e6, 0.05)
    derivative = closed_form.closed_form_rate_derivative([2.0, 2.0], [0.5, 0.0], 2, 1e6, 0.05)
    assert derivative.delta == pytest.approx(0.25)
    assert derivative.rate_exponent < plain.rate_exponent


def test_derivative_rate_rejects_bad_parameters():
    with pytest.raises(DomainError):
        closed_form.closed_form_rate_derivative([1.0], [1.0], 1, 1e6, 0.05)
    with pytest.raises(DomainError):
        closed_form.closed_form_rate_derivative([1.0, 1.0], [0.0, 0.0], 1, 1e6, 0.05)


def test_cubature_of_smooth_integrands():
    integrals, error, cells = closed_form.adaptive_cubature(
        lambda u: (u[:, 0] ** 2, np.cos(u[:, 0])), np.array([0.0]), np.array([1.0]), 1e-10)
    assert integrals[0] == pytest.approx(1.0 / 3.0, rel=1e-12)
    assert integrals[1] == pytest.approx(math.sin(1.0), rel=1e-10)
    assert cells >= 1
    assert error >= 0.0


def test_cubature_in_two_dimensions():
    integrals, _, _ = closed_form.adaptive_cubature(
        lambda u: (u[:, 0] * u[:, 1], np.ones(u.shape[0])), np.array([0.0, 0.0]), np.array([1.0, 2.0]), 1e-10)
    assert integrals[0] == pytest.approx(1.0, rel=1e-10)
    assert integrals[1] == pytest.approx(2.0, rel=1e-10)


def test_support_half_widths_cover_the_bracket():
    widths = closed_form.support_half_widths(np.array([1.0, 0.0]), 2.0)
    # along the second axis the set {u2^2 > u2^4} ends at 1
    assert widths[1] >= 1.0
    assert np.all(widths <= math.sqrt(2.0))


@pytest.mark.slow
def test_single_index_constants():
    consts = closed_form.single_index_constants([1.0, 0.0], 2.0, 2, tol=1e-3)
    assert consts.C1_bar > consts.C0_bar > 0.0
    assert consts.C2_bar == pytest.approx(consts.C1_bar - consts.C0_bar)


@pytest.mark.slow
def test_single_index_rate():
    rate = closed_form.closed_form_rate_single_index([1.0, 0.0], 2.0, 2, 1e6, 0.05, tol=1e-3)
    assert rate.rate_exponent == pytest.approx(0.2)
    assert rate.C_star > 0.0
    assert rate.constants["sum_exponent"] == pytest.approx(3.0)


def test_single_index_needs_sigma_above_one():
    with pytest.raises(DomainError):
        closed_form.single_index_constants([1.0, 0.0], 1.0, 2)


def test_single_index_dimension_mismatch():
    with pytest.raises(DomainError):
        closed_form.single_index_constants([1.0, 0.0], 2.0, 3)


@pytest.mark.parametrize("sigma, alpha, levels", [
    ([1.0], [0.0], [1e5, 1e7]),
    ([2.0], [0.5], [1e6, 1e9]),
    ([1.0, 1.0], [0.0, 0.0], [1e4, 1e6]),
])
def test_lattice_sums_approach_their_leading_constants(sigma, alpha, levels):
    """I0 T^{-p} -> 2 C / (kappa + 2) and I1 T^{-p} -> C, e.g. C = 2/(3 pi) and p = 1/2 for sigma = 1, d = 1."""
    spec = SobolevDerivative(sigma, alpha)
    _, kappa, C_dsa, p = closed_form.derivative_constants(spec)
    errors = []
    for T in levels:
        sums = spectra.spectral_sums(spectra.active_set(spec, T), T)
        scale = T ** -p
        errors.append(abs(sums.I1 * scale / C_dsa - 1.0))
        assert sums.I0 * scale == pytest.approx(2.0 * C_dsa / (kappa + 2.0), rel=0.05)
    assert errors[0] < 0.05
    assert errors[-1] < 0.01


@pytest.mark.slow
def test_single_index_constants_against_monte_carlo():
    """For beta = e1, sigma = 2 the set {A > B} lies in [-1, 1]^2."""
    consts = closed_form.single_index_constants([1.0, 0.0], 2.0, 2, tol=1e-4)
    rng = np.random.default_rng(4)
    u = rng.uniform(-1.0, 1.0, size=(2000000, 2))
    A = u[:, 1] ** 2
    bracket = np.clip(A - np.sum(u ** 4, axis=1), 0.0, None)
    volume = 4.0 / (2.0 * math.pi) ** 2
    assert consts.C0_bar == pytest.approx(volume * float(np.mean(bracket ** 2)), rel=0.02)
    assert consts.C1_bar == pytest.approx(volume * float(np.mean(A * bracket)), rel=0.02)


@given(
    C0=st.floats(min_value=0.01, max_value=10.0),
    C2=st.floats(min_value=0.01, max_value=10.0),
    sigma=st.floats(min_value=1.05, max_value=6.0),
    d=st.integers(min_value=2, max_value=5),
    gamma=st.floats(min_value=0.01, max_value=0.5),
)
@settings(max_examples=50, deadline=None)
def test_single_index_constant_in_its_own_exponent(C0, C2, sigma, d, gamma):
    """With p = (d + 4)/(2(sigma - 1)) the generic C* carries the exponent (sigma - 1)/(4 sigma + d)."""
    z = two_sided_critical_value(gamma)
    C1 = C0 + C2
    p = (d + 4.0) / (2.0 * (sigma - 1.0))
    direct = math.sqrt(C1 / C2) * (8.0 * z * z * C2 * C2 / C0) ** ((sigma - 1.0) / (4.0 * sigma + d))
    assert closed_form.sharp_constant(C0, C1, p, z) == pytest.approx(direct, rel=1e-12)
