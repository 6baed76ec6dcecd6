import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from deanflow.geometry import (
    FluidParameters,
    GeometryError,
    basic_velocity,
    branch_swapped,
    coefficient_exact,
    coefficient_narrow_gap,
    lambda_parameter,
    profile_constants,
)


def test_constants_unit_annulus():
    c = profile_constants(FluidParameters(1.0, 2.0))
    assert c.A == pytest.approx(-1.590863, abs=1e-6)
    assert c.B == pytest.approx(5.590863, abs=1e-6)


def test_constants_solve_wall_system():
    # independent oracle: the 2x2 linear system imposed by the wall values
    R1, R2 = 1.0, 2.0
    M = np.array([[R1, 1 / R1], [R2, 1 / R2]])
    rhs = np.array([R2**2 - R1 * math.log(R1), R1**2 - R2 * math.log(R2)])
    A, B = np.linalg.solve(M, rhs)
    c = profile_constants(FluidParameters(R1, R2))
    assert c.A == pytest.approx(A, rel=1e-13)
    assert c.B == pytest.approx(B, rel=1e-13)


def test_closed_form_matches_textbook_expression():
    R1, R2 = 3.0, 4.5
    A_ref = -(R2**2 * math.log(R2) - R1**2 * math.log(R1) + R2**2 * R1 - R1**2 * R2) / (R2**2 - R1**2)
    assert profile_constants(FluidParameters(R1, R2)).A == pytest.approx(A_ref, rel=1e-13)


def test_degenerate_annulus_rejected():
    with pytest.raises(GeometryError):
        profile_constants(FluidParameters(1.0, 1.0))
    with pytest.raises(GeometryError):
        FluidParameters(2.0, 1.0)
    with pytest.raises(GeometryError):
        FluidParameters(1.0, 2.0, nu=0.0)


def test_admissibility():
    assert FluidParameters(1.0, 2.0).admissible
    assert not FluidParameters(1.0, 4.0).admissible
    assert FluidParameters(100.0, 101.0).asymptotics_trusted
    assert not FluidParameters(1.0, 2.0).asymptotics_trusted
    with pytest.raises(GeometryError):
        FluidParameters(1.0, 4.0).validate()


def test_profile_hits_wall_values():
    p = FluidParameters(1.0, 2.0, rho=1.0, nu=0.5, dp_dtheta0=1.0)
    c = profile_constants(p)
    assert basic_velocity(p, c, 1.0) == pytest.approx(4.0, rel=1e-14)
    assert basic_velocity(p, c, 2.0) == pytest.approx(1.0, rel=1e-14)


def test_zero_forcing_and_radius_check():
    p = FluidParameters(1.0, 2.0)
    c = profile_constants(p)
    assert np.all(basic_velocity(p, c, np.linspace(1, 2, 7)) == 0)
    with pytest.raises(GeometryError):
        basic_velocity(p, c, 2.5)


def test_coefficients_unit_annulus():
    p = FluidParameters(1.0, 2.0)
    ct, cr = coefficient_exact(p, profile_constants(p), 1.0)
    assert ct == pytest.approx(-1.090863, abs=1e-6)
    assert cr == pytest.approx(4.0, rel=1e-12)


def test_narrow_gap_limits():
    ct, cr = coefficient_narrow_gap(FluidParameters(100.0, 101.0))
    assert ct == pytest.approx(-50.248756, abs=1e-6)
    assert cr == pytest.approx(100.497512, abs=1e-6)
    assert coefficient_narrow_gap(FluidParameters(3.0, 3.0)) == pytest.approx((-1.5, 3.0))


@given(st.floats(0.1, 1e3), st.floats(1e-3, 1.0))
def test_narrow_gap_ratio(R1, frac):
    ct, cr = coefficient_narrow_gap(FluidParameters(R1, R1 * (1 + frac)))
    assert cr / ct == pytest.approx(-2.0, rel=1e-14)


def test_lambda_parameter():
    lam = lambda_parameter(FluidParameters(100.0, 101.0, dp_dtheta0=3.0))
    assert lam == pytest.approx(3 * math.sqrt(2) * 10100 / 201, rel=1e-14)
    assert lam == pytest.approx(213.19, abs=5e-3)
    assert lambda_parameter(FluidParameters(1.0, 2.0)) == 0.0
    assert lambda_parameter(FluidParameters(5.0, 5.0, dp_dtheta0=1.0)) == pytest.approx(math.sqrt(2) * 2.5)


def test_negative_lambda_flagged(caplog):
    lam = lambda_parameter(FluidParameters(1.0, 2.0, dp_dtheta0=-1.0))
    assert lam < 0 and branch_swapped(lam)
    assert "swap" in caplog.text


@settings(max_examples=50)
@given(st.floats(0.5, 50.0), st.floats(1.1, 5.0))
def test_scaling_law_of_A(R1, s):
    # the wall values R2^2, R1^2 scale like s^2, so A picks up a linear term besides -ln s
    p = FluidParameters(R1, 1.5 * R1)
    A = profile_constants(p).A
    As = profile_constants(FluidParameters(s * R1, s * 1.5 * R1)).A
    rr = p.R1 * p.R2 / (p.R1 + p.R2)
    assert As == pytest.approx(A - math.log(s) - (s - 1) * rr, abs=1e-10 * max(1.0, abs(As)))


@pytest.mark.xfail(strict=True, reason="A(sR1, sR2) = A - ln s does not hold for these wall values")
def test_scaling_law_pure_log_shift():
    A = profile_constants(FluidParameters(1.0, 2.0)).A
    As = profile_constants(FluidParameters(2.0, 4.0)).A
    assert As == pytest.approx(A - math.log(2.0), abs=1e-12)
