"""Critical front of the comoving Ginzburg-Landau equation and its tail constants.

Solves q'' + 2 q' + q - q^3 = 0 with q -> 1 on the left (wake) and q -> 0 on
the right (leading edge), normalized by the phase condition q(0) = 1/2.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
import scipy.sparse.linalg
import scipy.stats

from .errors import DomainTooSmall, NonConvergence, WindowTooNoisy
from .grids import Field, Grid, differentiate

CRITICAL_SPEED = 2.0
# wake decay rate: positive root of nu^2 + c nu - 2 = 0 at c = 2
WAKE_RATE = -1.0 + np.sqrt(3.0)
EDGE_RATE = -1.0  # double root at the leading edge
CUBIC_FRONT_SPEED = 3.0 / np.sqrt(2.0)


@dataclass
class AsymptoticsReport:
    a: float
    b: float
    c1: float
    edge_rate: float
    wake_rate: float
    edge_window: tuple[float, float]
    wake_window: tuple[float, float]
    edge_resid: float
    wake_resid: float


@dataclass
class FrontProfile:
    grid: Grid
    q: np.ndarray
    qprime: np.ndarray
    asymptotics: AsymptoticsReport | None = field(default=None)

    def q_field(self) -> Field:
        return Field(self.grid, self.q)

    def residual(self, c: float = CRITICAL_SPEED) -> np.ndarray:
        """Discrete ODE residual on interior nodes (central stencils)."""
        return ode_residual(self.grid, self.q, c)


def ode_residual(grid: Grid, q: np.ndarray, c: float = CRITICAL_SPEED) -> np.ndarray:
    h = grid.h
    return (
        (q[2:] - 2 * q[1:-1] + q[:-2]) / h**2
        + c * (q[2:] - q[:-2]) / (2 * h)
        + q[1:-1]
        - q[1:-1] ** 3
    )


def exact_cubic_front(x):
    """Closed-form front for speed c = 3/sqrt(2): q = (1 - tanh(x/(2 sqrt 2)))/2.

    Returns (q, q', q''); plugging into the c = 3/sqrt(2) residual gives zero.
    """
    s = np.asarray(x, dtype=float) / (2.0 * np.sqrt(2.0))
    t = np.tanh(s)
    sech2 = 1.0 - t**2
    q = (1.0 - t) / 2.0
    qp = -sech2 / (4.0 * np.sqrt(2.0))
    qpp = sech2 * t / 8.0
    return q, qp, qpp


def solve_critical_front(
    x_min: float,
    x_max: float,
    n: int,
    tol: float = 1e-10,
    phase_x: float = 0.0,
    phase_value: float = 0.5,
    wake_rate: float = WAKE_RATE,
    max_iter: int = 30,
) -> FrontProfile:
    """Newton solve of the front BVP with asymptotic boundary closures.

    Left closure q' + wake_rate*(1 - q) = 0 suppresses the one mode that grows
    into the wake. At the leading edge both linearized modes e^{-x}, x e^{-x}
    decay (double root at the critical speed), so no boundary row is imposed
    there; the phase row q(phase_x) = phase_value, where the translation mode
    has an O(1) footprint, makes the system square.
    """
    if not (x_min < -10 and x_max > 10):
        raise ValueError("domain must contain [-10, 10] on both sides")
    if n < 512:
        raise ValueError("n must be at least 512")
    if tol <= 0:
        raise ValueError("tol must be positive")

    grid = Grid(x_min, x_max, n)
    x = grid.x
    h = grid.h
    c = CRITICAL_SPEED

    # phase row: linear interpolation at phase_x
    i0 = int(np.searchsorted(x, phase_x)) - 1
    i0 = min(max(i0, 0), n - 2)
    theta = (phase_x - x[i0]) / h

    def residual_vec(q):
        r = np.empty(n)
        r[0] = (-3 * q[0] + 4 * q[1] - q[2]) / (2 * h) + wake_rate * (1.0 - q[0])
        r[1:-1] = ode_residual(grid, q, c)
        r[-1] = (1 - theta) * q[i0] + theta * q[i0 + 1] - phase_value
        return r

    def jacobian(q):
        idx = np.arange(1, n - 1)
        sub = 1 / h**2 - c / (2 * h)
        sup = 1 / h**2 + c / (2 * h)
        rows = np.concatenate([idx, idx, idx, [0, 0, 0], [n - 1, n - 1]])
        cols = np.concatenate([idx - 1, idx, idx + 1, [0, 1, 2], [i0, i0 + 1]])
        vals = np.concatenate([
            np.full(n - 2, sub),
            -2 / h**2 + 1 - 3 * q[idx] ** 2,
            np.full(n - 2, sup),
            [-3 / (2 * h) - wake_rate, 2 / h, -1 / (2 * h)],
            [1 - theta, theta],
        ])
        return scipy.sparse.csc_matrix((vals, (rows, cols)), shape=(n, n))

    # shifted tanh through (phase_x, phase_value)
    if not 0.0 < phase_value < 1.0:
        raise ValueError("phase_value must lie in (0, 1)")
    x0 = phase_x - np.arctanh(1.0 - 2.0 * phase_value) / 0.6
    q = (1.0 - np.tanh(0.6 * (x - x0))) / 2.0
    # stencil rounding floor: residual entries carry ~eps/h^2 noise
    floor = 100 * np.finfo(float).eps / h**2
    r = residual_vec(q)
    for _ in range(max_iter):
        nr = np.abs(r).max()
        if nr <= tol:
            break
        lu = scipy.sparse.linalg.splu(jacobian(q))
        step = lu.solve(-r)
        lam = 1.0
        while lam > 1e-4:
            q_new = q + lam * step
            r_new = residual_vec(q_new)
            if np.abs(r_new).max() < nr:
                break
            lam /= 2
        else:
            if nr <= max(tol, floor):
                break
            raise NonConvergence("front Newton line search stalled")
        q, r = q_new, r_new
    else:
        if np.abs(r).max() > max(tol, floor):
            raise NonConvergence(
                f"front Newton did not reach tol={tol:g} in {max_iter} iterations"
            )

    if abs(1.0 - q[0]) > 10 * tol or abs(q[-1]) > 10 * tol:
        raise DomainTooSmall(
            f"boundary values off the rest states: 1-q(x_min)={1 - q[0]:.2e}, q(x_max)={q[-1]:.2e}"
        )

    qprime = differentiate(Field(grid, q), 1).values
    return FrontProfile(grid=grid, q=q, qprime=qprime)


def fit_front_asymptotics(
    profile: FrontProfile,
    edge_window: tuple[float, float] | None = None,
    wake_window: tuple[float, float] | None = None,
    noise_threshold: float = 5e-2,
) -> AsymptoticsReport:
    """Least-squares tail fits: q ~ (a+bx)e^{-x} on the right, 1 - c1 e^{nu x} on the left.

    The edge fit regresses q e^x on (1, x), which separates a and b exactly
    within the double-root degeneracy; the wake rate is fitted freely from
    log(1-q). edge_rate reports -1 plus the residual slope of log q + x - log(a+bx).
    """
    grid, q = profile.grid, profile.q
    if edge_window is None:
        edge_window = (grid.x_max / 4.0, grid.x_max / 2.0)
    if wake_window is None:
        wake_window = (0.4 * grid.x_min, -10.0)
    if not (edge_window[0] >= 10 and edge_window[1] <= grid.x_max):
        raise ValueError("edge window must lie in [10, x_max]")
    if not (wake_window[1] <= -10 and wake_window[0] >= grid.x_min):
        raise ValueError("wake window must lie in [x_min, -10]")

    x = grid.x

    sel = (x >= edge_window[0]) & (x <= edge_window[1])
    xe, qe = x[sel], q[sel]
    if np.any(qe <= 0):
        raise WindowTooNoisy("edge window contains non-positive q")
    w = qe * np.exp(xe)
    design = np.vstack([np.ones_like(xe), xe]).T
    (a, b), res, *_ = np.linalg.lstsq(design, w, rcond=None)
    edge_resid = float(np.sqrt(np.mean((w - design @ [a, b]) ** 2)) / np.mean(np.abs(w)))
    if edge_resid > noise_threshold:
        raise WindowTooNoisy(f"edge fit residual {edge_resid:g} > {noise_threshold:g}")
    corr = np.log(qe) + xe - np.log(a + b * xe)
    edge_rate = -1.0 + scipy.stats.linregress(xe, corr).slope

    sel = (x >= wake_window[0]) & (x <= wake_window[1])
    xw, uw = x[sel], 1.0 - q[sel]
    if np.any(uw <= 0):
        raise WindowTooNoisy("wake window contains values at or above 1")
    fitw = scipy.stats.linregress(xw, np.log(uw))
    wake_resid = float(
        np.sqrt(np.mean((np.log(uw) - (fitw.intercept + fitw.slope * xw)) ** 2))
    )
    if wake_resid > noise_threshold:
        raise WindowTooNoisy(f"wake fit residual {wake_resid:g} > {noise_threshold:g}")

    report = AsymptoticsReport(
        a=float(a),
        b=float(b),
        c1=float(np.exp(fitw.intercept)),
        edge_rate=float(edge_rate),
        wake_rate=float(fitw.slope),
        edge_window=edge_window,
        wake_window=wake_window,
        edge_resid=edge_resid,
        wake_resid=wake_resid,
    )
    profile.asymptotics = report
    return report
