import numpy as np
import pytest
from scipy.integrate import fixed_quad
from scipy.interpolate import CubicSpline

from robrsvd.penalties import (
    TwoWayPenaltySpec,
    build_roughness_penalty,
    conditional_penalty_u,
    conditional_penalty_v,
    second_difference_penalty,
    two_way_penalty,
)
from conftest import dense_conditional_penalty_v, random_psd


def spline_curvature_energy(values, grid):
    """Independent oracle: int (g'')^2 for the natural spline, by quadrature."""
    cs = CubicSpline(grid, values, bc_type="natural")
    d2 = cs.derivative(2)
    total = 0.0
    for a, b in zip(grid[:-1], grid[1:]):
        # (g'')^2 is piecewise quadratic, so order-5 Gauss is exact
        total += fixed_quad(lambda t: d2(t) ** 2, a, b, n=5)[0]
    return total


def test_roughness_null_space():
    grid = np.array([0.0, 0.3, 0.45, 0.8, 1.0])
    omega = build_roughness_penalty(grid)
    const = np.ones(5)
    lin = 2.0 - 3.0 * grid
    assert const @ omega @ const == pytest.approx(0.0, abs=1e-10)
    assert lin @ omega @ lin == pytest.approx(0.0, abs=1e-10)


def test_roughness_matches_quadrature_oracle_on_parabola():
    grid = np.linspace(0.0, 1.0, 5)
    f = grid**2
    omega = build_roughness_penalty(grid)
    assert f @ omega @ f == pytest.approx(spline_curvature_energy(f, grid), rel=1e-10)


def test_roughness_matches_quadrature_oracle_random():
    rng = np.random.default_rng(11)
    for _ in range(5):
        k = int(rng.integers(4, 12))
        grid = np.sort(rng.random(k)) + np.arange(k) * 0.02
        f = rng.standard_normal(k)
        omega = build_roughness_penalty(grid)
        assert f @ omega @ f == pytest.approx(spline_curvature_energy(f, grid), rel=1e-8)


def test_roughness_rank_and_definiteness():
    rng = np.random.default_rng(12)
    grid = np.sort(rng.random(9)) + np.arange(9) * 0.05
    omega = build_roughness_penalty(grid)
    np.testing.assert_allclose(omega, omega.T, atol=1e-12)
    eigs = np.linalg.eigvalsh(omega)
    radius = eigs[-1]
    assert eigs[0] >= -1e-10 * radius
    # exactly two zero eigenvalues (constants and the linear grid)
    assert np.sum(np.abs(eigs) <= 1e-9 * radius) == 2


def test_roughness_contract_violations():
    with pytest.raises(ValueError):
        build_roughness_penalty(np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        build_roughness_penalty(np.array([0.0, 0.5, 0.5, 1.0]))


def test_second_difference_penalty_banded_and_null_space():
    grid = np.linspace(0.0, 1.0, 8)
    omega = second_difference_penalty(grid)
    lin = 1.0 + 2.0 * grid
    assert lin @ omega @ lin == pytest.approx(0.0, abs=1e-9)
    # pentadiagonal: nothing beyond the second off-diagonal
    assert np.all(np.triu(np.abs(omega), k=3) == 0)
    with pytest.raises(ValueError):
        second_difference_penalty(np.array([0.0, 0.1, 1.0]))


def test_two_way_penalty_zero_when_unpenalized():
    rng = np.random.default_rng(13)
    spec = TwoWayPenaltySpec(random_psd(rng, 4), random_psd(rng, 5), 0.0, 0.0)
    assert two_way_penalty(rng.standard_normal(4), rng.standard_normal(5), spec) == 0.0


def test_two_way_penalty_scale_invariance_exact_for_pow2():
    rng = np.random.default_rng(14)
    spec = TwoWayPenaltySpec(random_psd(rng, 6), random_psd(rng, 4), 0.7, 1.3)
    u = rng.standard_normal(6)
    v = rng.standard_normal(4)
    assert two_way_penalty(2.0 * u, v / 2.0, spec) == two_way_penalty(u, v, spec)


def test_two_way_penalty_dense_oracle():
    rng = np.random.default_rng(15)
    gu = np.linspace(0, 1, 6)
    gv = np.linspace(0, 1, 5)
    spec = TwoWayPenaltySpec(build_roughness_penalty(gu), build_roughness_penalty(gv), 1.0, 1.0)
    u = rng.standard_normal(6)
    v = rng.standard_normal(5)
    pu = spec.lambda_u * (u @ spec.omega_u @ u)
    pv = spec.lambda_v * (v @ spec.omega_v @ v)
    expected = pu * (v @ v) + pv * (u @ u) + pu * pv
    assert two_way_penalty(u, v, spec) == pytest.approx(expected, rel=1e-12)


def test_penalty_decomposition_identity():
    # u'(I+lu Ou)u * v'(I+lv Ov)v - u'u v'v  ==  two-way penalty
    rng = np.random.default_rng(16)
    for _ in range(10):
        m, n = 5, 7
        spec = TwoWayPenaltySpec(random_psd(rng, m), random_psd(rng, n),
                                 float(rng.random()), float(rng.random()))
        u = rng.standard_normal(m)
        v = rng.standard_normal(n)
        lhs = (u @ (np.eye(m) + spec.lambda_u * spec.omega_u) @ u) * (
            v @ (np.eye(n) + spec.lambda_v * spec.omega_v) @ v
        ) - (u @ u) * (v @ v)
        assert lhs == pytest.approx(two_way_penalty(u, v, spec), rel=1e-10)


def test_conditional_penalty_v_reductions():
    rng = np.random.default_rng(17)
    m, n = 5, 6
    omega_u, omega_v = random_psd(rng, m), random_psd(rng, n)
    u = rng.standard_normal(m)

    zero = conditional_penalty_v(u, TwoWayPenaltySpec(omega_u, omega_v, 0.0, 0.0))
    np.testing.assert_allclose(zero, 0.0, atol=1e-14)

    lam_u = 0.8
    ridge = conditional_penalty_v(u, TwoWayPenaltySpec(omega_u, omega_v, lam_u, 0.0))
    np.testing.assert_allclose(ridge, lam_u * (u @ omega_u @ u) * np.eye(n), rtol=1e-12)


def test_conditional_penalties_match_dense_formula():
    rng = np.random.default_rng(18)
    for _ in range(8):
        m, n = int(rng.integers(3, 8)), int(rng.integers(3, 8))
        spec = TwoWayPenaltySpec(random_psd(rng, m), random_psd(rng, n),
                                 float(rng.random()), float(rng.random()))
        u = rng.standard_normal(m)
        v = rng.standard_normal(n)
        got = conditional_penalty_v(u, spec)
        want = dense_conditional_penalty_v(u, spec)
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12 * np.abs(want).max())
        got_u = conditional_penalty_u(v, spec)
        want_u = dense_conditional_penalty_v(v, spec.swapped())
        np.testing.assert_allclose(got_u, want_u, rtol=1e-12, atol=1e-12 * np.abs(want_u).max())


def test_conditional_penalty_nonnegative_definite():
    rng = np.random.default_rng(19)
    for _ in range(10):
        spec = TwoWayPenaltySpec(random_psd(rng, 6), random_psd(rng, 5),
                                 float(rng.random() * 2), float(rng.random() * 2))
        u = rng.standard_normal(6)
        omega = conditional_penalty_v(u, spec)
        eigs = np.linalg.eigvalsh(omega)
        assert eigs[0] >= -1e-10 * max(eigs[-1], 1.0)


def test_conditional_penalty_quadratic_form_equals_joint_penalty():
    rng = np.random.default_rng(20)
    spec = TwoWayPenaltySpec(random_psd(rng, 4), random_psd(rng, 6), 0.3, 1.7)
    u = rng.standard_normal(4)
    v = rng.standard_normal(6)
    assert v @ conditional_penalty_v(u, spec) @ v == pytest.approx(
        two_way_penalty(u, v, spec), rel=1e-12)
    assert u @ conditional_penalty_u(v, spec) @ u == pytest.approx(
        two_way_penalty(u, v, spec), rel=1e-12)


def test_spec_validation():
    rng = np.random.default_rng(21)
    omega = random_psd(rng, 4)
    with pytest.raises(ValueError):
        TwoWayPenaltySpec(omega, omega, lambda_u=-0.1)
    asym = omega.copy()
    asym[0, 1] += 1.0
    with pytest.raises(ValueError):
        TwoWayPenaltySpec(asym, omega)
