import math
import random

import numpy as np
import pytest

from deanflow.linear_stability import critical_point
from deanflow.nonlinear_reduction import (
    InteractionTensor,
    bifurcated_state,
    critical_self_interaction,
    equilibrium_amplitude,
    gamma_coefficient,
    gamma_sum,
    quadrature_tensor,
    trilinear,
    trilinear_exact,
    triple_integral,
    _gamma_terms,
)
from deanflow.spectral_basis import (
    Branch,
    QuadratureGrid,
    SpectralField,
    plus,
    theta_mean,
    truncation_modes,
)


def test_triple_integral_against_quadrature():
    x = np.linspace(0, 1, 20001)
    for kinds, a, b, c in [("ccc", 1, 2, 3), ("ssc", 2, 1, 1), ("scs", 3, 1, 2), ("sss", 1, 1, 1)]:
        f = {"c": np.cos, "s": np.sin}
        vals = f[kinds[0]](a * np.pi * x) * f[kinds[1]](b * np.pi * x) * f[kinds[2]](c * np.pi * x)
        assert triple_integral(kinds, a, b, c) == pytest.approx(np.trapezoid(vals, x), abs=1e-8)


def test_tensor_vs_refined_quadrature():
    L = 2.0
    T = InteractionTensor.assemble(3, 3, L)
    Q = quadrature_tensor(T.modes, L, QuadratureGrid.for_truncation(3, 3, L, refine=4))
    assert np.max(np.abs(T.dense() - Q)) < 1e-9


def test_tensor_other_length():
    L = 1.37
    T = InteractionTensor.assemble(2, 2, L)
    Q = quadrature_tensor(T.modes, L, QuadratureGrid.for_truncation(2, 2, L, refine=4))
    assert np.max(np.abs(T.dense() - Q)) < 1e-9


def test_skew_and_diagonal():
    D = InteractionTensor.assemble(6, 6, 2.0).dense()
    assert np.max(np.abs(D + D.transpose(0, 2, 1))) < 1e-10
    assert np.max(np.abs(np.einsum("jkk->jk", D))) < 1e-10


def test_trilinear_identities(rng):
    L = 2.0
    modes = truncation_modes(2, 2)
    grid = QuadratureGrid.for_truncation(2, 2, L, refine=2)
    u, v, w = (SpectralField.from_vector(modes, rng.standard_normal(len(modes)), (2, 2)) for _ in range(3))
    assert abs(trilinear(u, v, v, grid)) < 1e-12
    assert abs(trilinear(u, v, w, grid) + trilinear(u, w, v, grid)) < 1e-12
    assert trilinear(SpectralField(truncation=(2, 2)), v, w, grid) == 0.0
    assert trilinear(u, v, w, grid) == pytest.approx(trilinear_exact(u, v, w, L), abs=1e-12)


def test_advect_matches_dense(tensor_l2, rng):
    y = rng.standard_normal(tensor_l2.size)
    D = tensor_l2.dense()
    assert np.allclose(tensor_l2.advect(y), np.einsum("jkl,j,k->l", D, y, y), atol=1e-12)
    eps = 1e-6
    dy = rng.standard_normal(y.size)
    fd = (tensor_l2.advect(y + eps * dy) - tensor_l2.advect(y - eps * dy)) / (2 * eps)
    assert np.allclose(tensor_l2.jacobian(y) @ dy, fd, atol=1e-7)
    assert np.dot(tensor_l2.advect(y), y) == pytest.approx(0.0, abs=1e-10)


def test_selection_rule_and_mean_flow():
    L = 2.0
    grid = QuadratureGrid.for_truncation(6, 6, L)
    f = SpectralField.single(plus(1, 1), 1.0, (6, 6))
    forcing = critical_self_interaction(1, L, (6, 6))
    assert forcing[plus(1, 1)] == 0.0
    for idx in truncation_modes(6, 6):
        q = trilinear(f, f, SpectralField.single(idx, 1.0, (6, 6)), grid)
        assert q == pytest.approx(forcing[idx], abs=1e-10)
        if idx.m not in (0, 2):
            assert abs(q) < 1e-10
    assert abs(forcing[theta_mean(2)]) > 0.1


def test_gamma_L2_converged():
    res = gamma_coefficient(1, 2.0, truncation=(8, 8))
    assert res.gamma > 0
    assert res.gamma == pytest.approx(0.0125, rel=1e-12)
    assert res.convergence < 1e-2
    assert res.amplitude_coefficient == pytest.approx(1 / math.sqrt(res.gamma))
    # the literal "m > 1" reading drops the only contributor
    assert res.gamma_literal == 0.0 and res.literal_reading_differs


def test_gamma_L4():
    cp = critical_point(4.0)
    res = gamma_coefficient(cp.m0, 4.0, cp.lambda0, (12, 8))
    assert res.gamma > 0 and res.convergence < 1e-2


def test_gamma_support_and_order():
    cp = critical_point(2.0)
    _, terms = _gamma_terms(1, 2.0, cp.lambda0, (8, 8))
    full = gamma_sum(terms)
    support = gamma_sum({k: v for k, v in terms.items() if k.m in (0, 2)})
    assert support == pytest.approx(full, abs=1e-12)
    keys = list(terms)
    random.Random(7).shuffle(keys)
    assert gamma_sum(terms, keys) == pytest.approx(full, abs=1e-10)


def test_equilibrium_amplitudes():
    res = gamma_coefficient(1, 2.0, check_convergence=False)
    lam0 = res.lambda0
    a = equilibrium_amplitude(lam0, res)
    assert a.subcritical and (a.y_plus, a.y_minus) == (0.0, 0.0)
    a = equilibrium_amplitude(1.03 * lam0, res)
    assert a.y_plus == -a.y_minus > 0
    h = 1e-7 * lam0
    slope = equilibrium_amplitude(lam0 + h, res).y_plus ** 2 / h
    assert slope == pytest.approx(res.slope(), rel=1e-5)


def test_bifurcated_state_structure():
    res = gamma_coefficient(1, 2.0, check_convergence=False)
    lam = 1.01 * res.lambda0
    up, dn = bifurcated_state(lam, res, 1), bifurcated_state(lam, res, -1)
    c = res.critical
    assert up[c] == -dn[c]
    for idx in up.coefficients:
        if idx != c:
            assert up[idx] == dn[idx]
    with pytest.raises(ValueError):
        bifurcated_state(0.99 * res.lambda0, res)


def test_residual_order_three_halves(system_l2):
    res = gamma_coefficient(1, 2.0, check_convergence=False)
    r = {}
    for eps in (0.04, 0.01, 0.0025):
        lam = (1 + eps) * res.lambda0
        r[eps] = system_l2.at_lambda(lam).residual(bifurcated_state(lam, res))
    assert r[0.04] / r[0.01] >= 6
    assert r[0.01] / r[0.0025] >= 6


def test_tensor_text_export(tmp_path):
    T = InteractionTensor.assemble(2, 2, 2.0)
    path = tmp_path / "t.txt"
    T.write_text(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# j k l value"
    assert len(lines) == T.nnz + 1
    j, k, l, v = lines[1].split()
    assert float(v) == T.values[0]
    assert j.split("_")[0] in Branch.__members__
