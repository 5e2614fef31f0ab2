"""Shared numerical kernels: least squares, fixed-step RK4 and ABCD cascades."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DegenerateFit,
    EmptyList,
    NonConvergence,
    NonFiniteDerivative,
    SingularJacobian,
)

# Termination thresholds for nonlinear_fit.
FIT_RTOL = 1e-10
FIT_MAX_ITER = 200


@dataclass(frozen=True)
class LinearFitResult:
    intercept: float
    slope: float
    covariance: np.ndarray
    residual_rms: float

    def __call__(self, x):
        return self.intercept + self.slope * np.asarray(x, dtype=float)

    @property
    def slope_stderr(self) -> float:
        return float(np.sqrt(self.covariance[1, 1]))

    @property
    def intercept_stderr(self) -> float:
        return float(np.sqrt(self.covariance[0, 0]))


def _xy(points) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[-1] != 2:
        arr = arr.reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def linear_fit(points) -> LinearFitResult:
    """Ordinary least-squares straight line through ``(x, y)`` pairs.

    The covariance uses unit weights with the residual variance estimated
    from the data (``n - 2`` degrees of freedom); with only two points it is
    reported as zero.
    """
    x, y = _xy(points)
    n = x.size
    if n < 2:
        raise DegenerateFit(f"linear fit needs at least 2 points, got {n}")
    if np.ptp(x) == 0:
        raise DegenerateFit("linear fit needs at least 2 distinct x values")

    # centred form keeps exact lines exact
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    slope = float(dx @ (y - ym)) / sxx
    intercept = float(ym - slope * xm)

    resid = y - (intercept + slope * x)
    rss = float(resid @ resid)
    s2 = rss / (n - 2) if n > 2 else 0.0
    var_slope = s2 / sxx
    var_int = s2 * (1.0 / n + xm * xm / sxx)
    cov_ab = -xm * s2 / sxx
    cov = np.array([[var_int, cov_ab], [cov_ab, var_slope]])
    return LinearFitResult(intercept, slope, cov, float(np.sqrt(rss / n)))


@dataclass
class NonlinearFitResult:
    params: np.ndarray
    covariance: np.ndarray
    cost: float
    iterations: int
    converged: bool
    cost_history: list = field(default_factory=list)


def _jacobian(fun, p, f0):
    J = np.empty((f0.size, p.size))
    eps = np.sqrt(np.finfo(float).eps)
    for j in range(p.size):
        h = eps * max(abs(p[j]), 1.0)
        q = p.copy()
        q[j] += h
        J[:, j] = (fun(q) - f0) / h
    return J


def nonlinear_fit(
    model: Callable[[np.ndarray, np.ndarray], np.ndarray],
    initial,
    points,
    *,
    rtol: float = FIT_RTOL,
    max_iter: int = FIT_MAX_ITER,
    raise_on_failure: bool = False,
) -> NonlinearFitResult:
    """Levenberg-Marquardt least squares for ``y ~ model(x, p)``.

    Only steps that lower the sum of squared residuals are accepted, so the
    recorded cost history is non-increasing. Iteration stops once an accepted
    step changes the cost by less than ``rtol`` relative, the cost reaches
    round-off level, or ``max_iter`` iterations have run. In the last case the
    result is flagged ``converged=False`` (or :class:`NonConvergence` is raised
    when ``raise_on_failure`` is set).
    """
    x, y = _xy(points)
    p = np.array(initial, dtype=float).ravel()
    if x.size < p.size:
        raise DegenerateFit(f"{x.size} points cannot determine {p.size} parameters")

    def resid(q):
        return np.asarray(model(x, q), dtype=float) - y

    r = resid(p)
    if not np.all(np.isfinite(r)):
        raise DegenerateFit("model is not finite at the initial parameters")
    cost = 0.5 * float(r @ r)
    history = [cost]
    floor = (np.finfo(float).eps * max(float(np.abs(y).max()), 1e-300)) ** 2 * y.size

    J = _jacobian(resid, p, r)
    if np.linalg.matrix_rank(J) < p.size:
        raise SingularJacobian("jacobian is rank deficient at the initial parameters")

    lam = 1e-3
    converged = cost <= floor
    it = 0
    while not converged and it < max_iter:
        it += 1
        A = J.T @ J
        g = J.T @ r
        d = np.diag(A).copy()
        d[d == 0] = 1.0
        accepted = False
        while lam < 1e20:
            try:
                step = np.linalg.solve(A + lam * np.diag(d), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            q = p + step
            rq = resid(q)
            cq = 0.5 * float(rq @ rq) if np.all(np.isfinite(rq)) else np.inf
            if cq < cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            # no descent direction left: we are at the minimum to round-off
            converged = True
            break
        change = (cost - cq) / cost
        p, r, cost = q, rq, cq
        history.append(cost)
        lam = max(lam / 10.0, 1e-12)
        if change < rtol or cost <= floor or np.all(np.abs(step) <= 1e-15 * np.maximum(np.abs(p), 1e-300)):
            converged = True
            break
        J = _jacobian(resid, p, r)

    J = _jacobian(resid, p, r)
    dof = x.size - p.size
    s2 = 2.0 * cost / dof if dof > 0 else 0.0
    try:
        cov = np.linalg.inv(J.T @ J) * s2
    except np.linalg.LinAlgError:
        cov = np.full((p.size, p.size), np.nan)

    result = NonlinearFitResult(p, cov, cost, it, converged, history)
    if not converged and raise_on_failure:
        raise NonConvergence(f"no convergence after {max_iter} iterations", result)
    return result


@dataclass
class OdeState:
    position: float
    amplitudes: np.ndarray


def integrate_ode(
    derivative: Callable[[float, np.ndarray], np.ndarray],
    initial: OdeState,
    end: float,
    steps: int,
    *,
    observer: Callable[[float, np.ndarray], None] | None = None,
) -> OdeState:
    """Classical fixed-step fourth-order Runge-Kutta from ``initial`` to ``end``.

    ``amplitudes`` may be any complex array; the derivative must return the
    same shape. ``observer`` (if given) is called after each step.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x = float(initial.position)
    y = np.array(initial.amplitudes, dtype=complex)
    h = (end - x) / steps

    def f(xx, yy):
        dy = derivative(xx, yy)
        if not np.all(np.isfinite(dy)):
            raise NonFiniteDerivative(f"derivative is not finite at x={xx!r}")
        return dy

    x0 = x
    for i in range(steps):
        k1 = f(x, y)
        k2 = f(x + 0.5 * h, y + 0.5 * h * k1)
        k3 = f(x + 0.5 * h, y + 0.5 * h * k2)
        k4 = f(x + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        x = x0 + (i + 1) * h
        if observer is not None:
            observer(x, y)
    return OdeState(x, y)


def abcd(a, b, c, d) -> np.ndarray:
    """Pack ABCD entries (scalars or broadcastable arrays) into ``(..., 2, 2)``."""
    a, b, c, d = np.broadcast_arrays(*(np.asarray(v, dtype=complex) for v in (a, b, c, d)))
    m = np.empty(a.shape + (2, 2), dtype=complex)
    m[..., 0, 0] = a
    m[..., 0, 1] = b
    m[..., 1, 0] = c
    m[..., 1, 1] = d
    return m


def cascade(matrices: Sequence[np.ndarray]) -> np.ndarray:
    """Ordered product of 2x2 (or stacked ``(..., 2, 2)``) ABCD matrices.

    The first matrix is on the source side.
    """
    if len(matrices) == 0:
        raise EmptyList("cascade needs at least one matrix")
    return reduce(np.matmul, (np.asarray(m, dtype=complex) for m in matrices))


def determinant(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m)
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
