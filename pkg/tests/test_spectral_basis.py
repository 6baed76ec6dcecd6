import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from deanflow.spectral_basis import (
    Branch,
    ModeIndex,
    QuadratureGrid,
    ScalarKind,
    SpectralField,
    boundary_residual,
    divergence_residual,
    evaluate_components,
    gram_matrix,
    inner_product,
    inner_product_exact,
    laplacian_eigenvalue,
    minus,
    plus,
    scalar_mode_value,
    theta_mean,
    truncation_modes,
    vector_mode,
)

modes_st = st.builds(
    lambda m, n, b: ModeIndex(0, n, Branch.THETA_MEAN) if b == 0 else ModeIndex(m, n, Branch(b)),
    st.integers(1, 5), st.integers(1, 5), st.integers(0, 2),
)


def test_laplacian_examples():
    assert laplacian_eigenvalue(1, 1, 1.0) == pytest.approx(-2 * math.pi**2)
    assert laplacian_eigenvalue(0, 1, 3.3) == pytest.approx(-math.pi**2)
    assert laplacian_eigenvalue(2, 1, 2.0) == pytest.approx(-2 * math.pi**2)


def test_scalar_mode_values():
    assert scalar_mode_value(ScalarKind.W1, 1, 1, 0.0, 0.3, 2.0) == 0.0
    assert scalar_mode_value("W2", 3, 2, 0.4, 0.0, 2.0) == 0.0
    assert scalar_mode_value(ScalarKind.W1, 1, 1, 0.5, 0.0, 2.0) == pytest.approx(1.0)


def test_mode_index_rules():
    with pytest.raises(ValueError):
        ModeIndex(1, 1, Branch.THETA_MEAN)
    with pytest.raises(ValueError):
        ModeIndex(0, 1, Branch.PLUS)
    with pytest.raises(ValueError):
        ModeIndex(1, 0, Branch.MINUS)
    assert ModeIndex.parse("MINUS_3_2") == minus(3, 2)
    assert str(theta_mean(4)) == "THETA_MEAN_0_4"


def test_truncation_count():
    assert len(truncation_modes(4, 3)) == 2 * 4 * 3 + 3
    assert len(set(truncation_modes(6, 6))) == len(truncation_modes(6, 6))


def test_vector_mode_raw_shape():
    vm = vector_mode(plus(1, 1), 2.0)
    assert vm.raw == pytest.approx((1 / math.sqrt(5), 1.0, -2 / math.sqrt(5)))
    vm2 = vector_mode(minus(1, 1), 2.0)
    assert vm2.c_r == pytest.approx(-vm.c_r)
    assert vm2.c_z == pytest.approx(-vm.c_z)
    assert vm2.c_theta == pytest.approx(vm.c_theta)


@given(modes_st, st.floats(0.3, 6.0))
def test_modal_divergence_free(idx, L):
    vm = vector_mode(idx, L)
    assert abs(idx.n * vm.c_r + idx.m / L * vm.c_z) < 1e-12


@given(modes_st, st.floats(0.3, 6.0))
def test_unit_norm(idx, L):
    f = SpectralField.single(idx)
    assert inner_product_exact(f, f, L) == pytest.approx(1.0, abs=1e-12)


def test_gram_identity():
    modes = truncation_modes(4, 4)
    L = 2.0
    G_q = gram_matrix(modes, L, QuadratureGrid.for_truncation(4, 4, L))
    G_x = gram_matrix(modes, L)
    eye = np.eye(len(modes))
    assert np.max(np.abs(G_q - eye)) < 1e-10
    assert np.max(np.abs(G_x - eye)) < 1e-14


def test_plus_minus_orthogonal_same_wavenumbers():
    L = 1.7
    grid = QuadratureGrid.for_truncation(3, 2, L)
    a = SpectralField.single(plus(3, 2))
    b = SpectralField.single(minus(3, 2))
    assert abs(inner_product(a, b, grid)) < 1e-12
    assert inner_product(SpectralField(truncation=(3, 2)), a, grid) == 0.0


def test_coarse_grid_rejected():
    with pytest.raises(ValueError):
        gram_matrix(truncation_modes(4, 4), 2.0, QuadratureGrid(9, 9, 2.0))
    with pytest.raises(ValueError):
        QuadratureGrid(10, 9, 2.0)


def test_divergence_residual(rng):
    L = 2.0
    grid = QuadratureGrid.for_truncation(4, 4, L)
    modes = truncation_modes(4, 4)
    field = SpectralField.from_vector(modes, rng.standard_normal(len(modes)), (4, 4))
    assert divergence_residual(field, grid) < 1e-12
    assert divergence_residual(SpectralField(truncation=(4, 4)), grid) == 0.0


def test_divergence_detects_corruption(monkeypatch):
    import deanflow.spectral_basis as sb
    L = 2.0
    grid = QuadratureGrid.for_truncation(2, 2, L)
    orig = sb.vector_mode

    def corrupt(idx, L):
        vm = orig(idx, L)
        return sb.VectorMode(vm.index, vm.c_r, vm.c_theta, 1.3 * vm.c_z, vm.norm)

    monkeypatch.setattr(sb, "vector_mode", corrupt)
    assert divergence_residual(SpectralField.single(plus(1, 1), 1.0, (2, 2)), grid) > 1e-3


def test_boundary_conditions_all_modes():
    L = 2.0
    for idx in truncation_modes(4, 4):
        assert boundary_residual(SpectralField.single(idx, 1.0, (4, 4)), L) < 1e-12, idx


def test_laplacian_is_exact_eigenvalue():
    L = 1.3
    grid = QuadratureGrid.for_truncation(3, 3, L)
    for idx in truncation_modes(3, 3):
        u = evaluate_components(SpectralField.single(idx, 1.0, (3, 3)), grid.rho, grid.z, L, 2)
        lam = laplacian_eigenvalue(idx.m, idx.n, L)
        for c in ("ur", "uth", "uz"):
            assert np.max(np.abs(u["lap_" + c] - lam * u[c])) < 1e-12


def test_field_arithmetic():
    a = SpectralField({plus(1, 1): 2.0}, (2, 2))
    b = SpectralField({minus(2, 1): 1.0}, (2, 2))
    c = 3 * a - b
    assert c[plus(1, 1)] == 6.0 and c[minus(2, 1)] == -1.0
    assert c[theta_mean(1)] == 0.0
    assert c.norm() == pytest.approx(math.sqrt(37))
    with pytest.raises(ValueError):
        SpectralField({plus(3, 1): 1.0}, (2, 2))
