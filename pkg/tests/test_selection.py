import numpy as np
import pytest

from robrsvd.penalties import TwoWayPenaltySpec, build_roughness_penalty
from robrsvd.selection import (
    GcvTrace,
    LambdaGrid,
    gcv_u,
    gcv_u_with_trace,
    gcv_v,
    gcv_v_with_trace,
    select_lambda,
)
from robrsvd.updates import hat_trace_v, update_v_given_u
from conftest import dense_gcv_v, mirror, random_psd


def spline_spec(m, n, lam_u=0.0, lam_v=0.0):
    return TwoWayPenaltySpec(
        build_roughness_penalty(np.linspace(0, 1, m)),
        build_roughness_penalty(np.linspace(0, 1, n)),
        lam_u,
        lam_v,
    )


def test_gcv_guard_returns_infinity_when_unpenalized():
    rng = np.random.default_rng(60)
    X = rng.standard_normal((5, 4))
    u = rng.standard_normal(5)
    w = np.full((5, 4), 2.0)
    assert gcv_v(X, u, w, spline_spec(5, 4, 0.0, 0.0)) == np.inf


def test_gcv_matches_dense_oracle():
    rng = np.random.default_rng(61)
    X = rng.standard_normal((4, 3))
    u = rng.standard_normal(4)
    w = rng.uniform(0.3, 2.0, (4, 3))
    spec = spline_spec(4, 3, 0.2, 0.7)
    got, got_tr = gcv_v_with_trace(X, u, w, spec)
    want, want_tr = dense_gcv_v(X, u, w, spec)
    assert got == pytest.approx(want, rel=1e-10)
    assert got_tr == pytest.approx(want_tr, rel=1e-10)


def test_gcv_u_matches_dense_oracle():
    rng = np.random.default_rng(62)
    X = rng.standard_normal((5, 3))
    v = rng.standard_normal(3)
    w = rng.uniform(0.3, 2.0, (5, 3))
    spec = spline_spec(5, 3, 0.9, 0.1)
    got, got_tr = gcv_u_with_trace(X, v, w, spec)
    xt, wt, sw = mirror(X, w, spec)
    want, want_tr = dense_gcv_v(xt, v, wt, sw)
    assert got == pytest.approx(want, rel=1e-10)
    assert got_tr == pytest.approx(want_tr, rel=1e-10)


def test_gcv_small_suite_oracle_equivalence(small_suite):
    for inst in small_suite:
        got, got_tr = gcv_v_with_trace(inst.values, inst.u, inst.weights, inst.spec)
        want, want_tr = dense_gcv_v(inst.values, inst.u, inst.weights, inst.spec)
        assert got_tr == pytest.approx(want_tr, rel=1e-10)
        if np.isinf(want):
            assert np.isinf(got)
        else:
            assert got == pytest.approx(want, rel=1e-10)


def test_gcv_zero_weight_column_error():
    rng = np.random.default_rng(63)
    X = rng.standard_normal((4, 3))
    u = rng.standard_normal(4)
    w = rng.uniform(0.5, 2.0, (4, 3))
    w[:, 2] = 0.0
    with pytest.raises(ValueError, match=r"\[2\]"):
        gcv_v(X, u, w, spline_spec(4, 3, 0.0, 0.5))


def test_distance_to_unpenalized_update_grows_with_lambda():
    rng = np.random.default_rng(64)
    X = rng.standard_normal((6, 5))
    u = rng.standard_normal(6)
    w = rng.uniform(0.5, 2.0, (6, 5))
    spec0 = spline_spec(6, 5)
    d = (u * u) @ w
    v_star = (u @ (w * X)) / d
    dists = []
    for lam in np.logspace(-6, 4, 12):
        v_hat = update_v_given_u(X, u, w, spec0.with_lambdas(0.0, lam))
        dists.append(np.linalg.norm(v_hat - v_star))
    assert np.all(np.diff(dists) >= -1e-9)


def test_selected_lambda_invariant_under_u_rescaling():
    rng = np.random.default_rng(65)
    X = rng.standard_normal((7, 6)) * 2.0
    u = rng.standard_normal(7)
    w = rng.uniform(0.5, 2.0, (7, 6))
    spec0 = spline_spec(7, 6)
    grid = LambdaGrid.log_default(1e-6, 1e2, 12)

    def chooser(scale):
        lam, _ = select_lambda(
            grid, lambda lv: gcv_v_with_trace(X, scale * u, w, spec0.with_lambdas(0.0, lv))
        )
        return lam

    assert chooser(1.0) == chooser(7.5)


def test_select_lambda_basic_and_ties():
    scores = {0.1: 3.0, 1.0: 1.0, 10.0: 2.0}
    lam, trace = select_lambda(LambdaGrid((0.1, 1.0, 10.0)), lambda l: scores[l])
    assert lam == 1.0
    assert trace.chosen.lam == 1.0
    assert sum(r.chosen for r in trace.records) == 1

    tie = {0.1: 1.0, 1.0: 1.0, 10.0: 5.0}
    lam, _ = select_lambda(LambdaGrid((0.1, 1.0, 10.0)), lambda l: tie[l])
    assert lam == 0.1  # ties break toward smaller lambda


def test_select_lambda_all_nonfinite_errors():
    with pytest.raises(ValueError, match="degenerate"):
        select_lambda(LambdaGrid((0.1, 1.0)), lambda l: np.inf)


def test_select_lambda_grid_argmin_near_continuous_argmin():
    # quadratic in log-lambda with its minimum at log10 = 0.3
    def score(lam):
        return (np.log10(lam) - 0.3) ** 2 + 1.0

    grid = LambdaGrid(tuple(np.logspace(-2, 2, 17)))  # quarter-decade spacing
    lam, _ = select_lambda(grid, score)
    assert abs(np.log10(lam) - 0.3) <= 0.25 + 1e-12


def test_lambda_grid_validation():
    with pytest.raises(ValueError):
        LambdaGrid(())
    with pytest.raises(ValueError):
        LambdaGrid((1.0, 1.0))
    with pytest.raises(ValueError):
        LambdaGrid((-1.0, 1.0))
    with pytest.raises(ValueError):
        LambdaGrid((0.0, np.inf))
    grid = LambdaGrid.log_default()
    assert len(grid) == 20
    assert grid.values[0] == pytest.approx(1e-6)
    assert grid.values[-1] == pytest.approx(1e4)
    assert 0.0 not in grid.values


def test_trace_csv_schema(tmp_path):
    scores = {0.1: 3.0, 1.0: 1.0}
    _, trace = select_lambda(LambdaGrid((0.1, 1.0)), lambda l: (scores[l], 4.2))
    path = tmp_path / "trace.csv"
    trace.write_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "lambda,gcv,hat_trace,chosen"
    assert len(lines) == 3
    assert lines[2].endswith(",1")  # lambda=1.0 chosen


def test_shared_hat_trace_code_path():
    rng = np.random.default_rng(66)
    X = rng.standard_normal((5, 4))
    u = rng.standard_normal(5)
    w = rng.uniform(0.5, 2.0, (5, 4))
    spec = spline_spec(5, 4, 0.1, 0.8)
    _, trace = gcv_v_with_trace(X, u, w, spec)
    assert trace == hat_trace_v(u, w, spec)
