"""Generalized cross-validation for the two smoothing parameters.

Each conditional update has its own GCV score, evaluated with the weights
frozen at the current iteration: the squared distance between the penalized
and unpenalized updates, normalized by the squared complement of the average
hat-matrix trace. Selection is a plain grid search; the two parameters are
decoupled because each score conditions on the other side's current value.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from .penalties import TwoWayPenaltySpec, conditional_penalty_v
from .updates import _as_data, _as_weights, _factor_conditional, design_v

__all__ = ["LambdaGrid", "GcvRecord", "GcvTrace", "gcv_v", "gcv_u", "select_lambda"]


@dataclass(frozen=True)
class LambdaGrid:
    """Strictly increasing, finite, nonnegative smoothing-parameter candidates."""

    values: tuple

    def __post_init__(self):
        vals = tuple(float(x) for x in np.atleast_1d(np.asarray(self.values, dtype=float)))
        if len(vals) == 0:
            raise ValueError("lambda grid must be nonempty")
        if not all(np.isfinite(vals)) or any(x < 0 for x in vals):
            raise ValueError("lambda grid values must be finite and nonnegative")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("lambda grid must be strictly increasing")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    @classmethod
    def log_default(cls, lo: float = 1e-6, hi: float = 1e4, num: int = 20) -> "LambdaGrid":
        """Log-spaced default grid; excludes an exact 0, where GCV degenerates to 0/0."""
        return cls(tuple(np.logspace(np.log10(lo), np.log10(hi), num)))


@dataclass(frozen=True)
class GcvRecord:
    lam: float
    score: float
    hat_trace: float
    chosen: bool


@dataclass(frozen=True)
class GcvTrace:
    """Per-candidate GCV scores with exactly one chosen (minimum-score) record."""

    records: tuple

    @property
    def chosen(self) -> GcvRecord:
        return next(r for r in self.records if r.chosen)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["lambda", "gcv", "hat_trace", "chosen"])
            for r in self.records:
                writer.writerow([repr(r.lam), repr(r.score), repr(r.hat_trace), int(r.chosen)])


def _gcv_from_design(d, b, omega_cond, n) -> tuple[float, float]:
    """Score and hat trace from the collapsed design quantities."""
    if np.any(d <= 0):
        dead = np.flatnonzero(d <= 0)
        raise ValueError(
            f"unpenalized update undefined: zero total weight at index(es) {dead.tolist()}"
        )
    factor = _factor_conditional(d, omega_cond, "index")
    v_hat = cho_solve(factor, b, check_finite=False)
    inv = cho_solve(factor, np.eye(n), check_finite=False)
    trace = float(np.sum(np.diagonal(inv) * d))
    if trace / n >= 1.0 - 1e-12:
        return np.inf, trace
    v_star = b / d
    num = float(np.sum((v_hat - v_star) ** 2)) / n
    return num / (1.0 - trace / n) ** 2, trace


def gcv_v(X, u: np.ndarray, weights, spec: TwoWayPenaltySpec) -> float:
    """GCV score for the v-update at the candidate ``spec.lambda_v``.

    Compares the penalized update against the unpenalized one (the plain
    weighted least-squares solution b/d) and inflates by the effective
    degrees of freedom. Returns +inf when the hat trace reaches n, the 0/0
    guard hit at lambda_u = lambda_v = 0.
    """
    score, _ = gcv_v_with_trace(X, u, weights, spec)
    return score


def gcv_v_with_trace(X, u, weights, spec: TwoWayPenaltySpec) -> tuple[float, float]:
    d, b = design_v(X, u, weights)
    omega_cond = conditional_penalty_v(u, spec)
    return _gcv_from_design(d, b, omega_cond, d.size)


def gcv_u(X, v: np.ndarray, weights, spec: TwoWayPenaltySpec) -> float:
    """Mirror of :func:`gcv_v` for the u-update at ``spec.lambda_u``."""
    score, _ = gcv_u_with_trace(X, v, weights, spec)
    return score


def gcv_u_with_trace(X, v, weights, spec: TwoWayPenaltySpec) -> tuple[float, float]:
    values = _as_data(X)
    w = _as_weights(weights)
    return gcv_v_with_trace(values.T, v, w.T, spec.swapped())


def select_lambda(grid: LambdaGrid, score) -> tuple[float, GcvTrace]:
    """Evaluate ``score`` at every grid value and return the argmin with its trace.

    ``score(lam)`` may return a bare number or a (score, hat_trace) pair.
    Ties break toward the smaller lambda. Raises if no grid point yields a
    finite score.
    """
    if isinstance(grid, (list, tuple, np.ndarray)):
        grid = LambdaGrid(tuple(grid))
    scores, traces = [], []
    for lam in grid:
        out = score(lam)
        if isinstance(out, tuple):
            s, tr = out
        else:
            s, tr = out, np.nan
        scores.append(float(s))
        traces.append(float(tr))
    finite = [s for s in scores if np.isfinite(s)]
    if not finite:
        raise ValueError("GCV degenerate on grid: no candidate produced a finite score")
    best = min(finite)
    chosen_idx = next(i for i, s in enumerate(scores) if s == best)
    records = tuple(
        GcvRecord(lam, s, tr, i == chosen_idx)
        for i, (lam, s, tr) in enumerate(zip(grid, scores, traces))
    )
    return grid.values[chosen_idx], GcvTrace(records)
