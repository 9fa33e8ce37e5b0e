"""Semigroup evaluation two independent ways (implicit time stepping and
inverse-Laplace contour quadrature) plus the linear decay-rate experiments.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import FitWindowTooShort, QuadratureDivergence, SolveFailure
from .front import FrontProfile
from .grids import Field, Grid
from .operators import DiscreteOperator, OperatorKind, assemble_operator
from .ratefit import FitResult, fit_power_law
from .resolvent import ResolventWorkspace, farfield_core_solve
from .weights import AlgWeight, NormKind, WeightSpec, weighted_norm


@dataclass(frozen=True)
class ContourSpec:
    """Inverse-Laplace contour families.

    left_parabola_rays: the near-origin parabola {i a - c a^2 : |a| <= delta}
    continued by rays into the left half plane (split-mode left piece).
    right_arc_rays: circular arc of radius arc_radius_scale/t around the
    origin continued by rays (whole-resolvent contour for the amplitude
    operator; its rays cross the phase Fredholm border, so whole-resolvent
    use on the phase operator fails the node-doubling check).
    shifted_parabola: {shift_scale/t + i a - c a^2} truncated by the e^{lam t}
    decay; stays strictly right of every Fredholm border of both operators
    and is the whole-resolvent contour that works for the phase operator.
    """

    kind: str
    c: float = 0.2
    delta: float = 0.5
    arc_radius_scale: float = 1.0
    ray_angle: float = 3.0 * np.pi / 4.0
    n_nodes: int = 256
    shift_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("left_parabola_rays", "right_arc_rays", "shifted_parabola"):
            raise ValueError(f"unknown contour kind {self.kind!r}")
        if self.n_nodes < 64:
            raise ValueError("n_nodes must be at least 64")
        if self.kind != "right_arc_rays" and not 0.0 < self.c < 0.25:
            # Re lam = -Im(lam)^2/4 is the phase-operator Fredholm border near 0;
            # c must keep the parabola strictly to its right
            raise ValueError("parabola coefficient c must lie in (0, 0.25)")
        if not np.pi / 2 < self.ray_angle < np.pi:
            raise ValueError("ray_angle must point into the left half plane")


def _trapz_weights(sgrid: np.ndarray) -> np.ndarray:
    w = np.full(sgrid.shape, sgrid[1] - sgrid[0])
    w[0] /= 2
    w[-1] /= 2
    return w


def _ray_piece(start: complex, angle: float, t: float, n: int):
    """Outgoing ray start + s e^{i angle}, s in [0, s_max], with nodes
    exponentially clustered on the e^{lam t} decay length 1/(t |cos angle|);
    truncated where the exponential factor reaches ~1e-20."""
    ell = 1.0 / (t * abs(np.cos(angle)))
    sigma = np.log(47.0)  # s_max = 46 * ell
    u = np.linspace(0.0, 1.0, n)
    s = ell * (np.exp(sigma * u) - 1.0)
    ds = ell * sigma * np.exp(sigma * u)
    lam = start + s * np.exp(1j * angle)
    wts = _trapz_weights(u) * ds * np.exp(1j * angle)
    return lam, wts


def contour_nodes(spec: ContourSpec, t: float, n_nodes: int | None = None):
    """Quadrature nodes and weights (lam_j, w_j) for int F(lam) dlam, oriented
    upward (incoming lower ray, arc/parabola, outgoing upper ray)."""
    n = n_nodes or spec.n_nodes
    alpha = spec.ray_angle
    n_ray = max(n // 4, 24)
    n_mid = n - 2 * n_ray
    lams, wts = [], []

    if spec.kind == "shifted_parabola":
        sigma0 = spec.shift_scale / t
        a_max = np.sqrt((46.0 + sigma0 * t) / (spec.c * t))
        a = np.linspace(-a_max, a_max, n)
        return sigma0 + 1j * a - spec.c * a**2, _trapz_weights(a) * (1j - 2.0 * spec.c * a)

    if spec.kind == "right_arc_rays":
        r = spec.arc_radius_scale / t
        lam, w = _ray_piece(r * np.exp(-1j * alpha), -alpha, t, n_ray)
        lams.append(lam)
        wts.append(-w)  # lower ray traversed inward
        th = np.linspace(-alpha, alpha, n_mid)
        lams.append(r * np.exp(1j * th))
        wts.append(_trapz_weights(th) * 1j * r * np.exp(1j * th))
        lam, w = _ray_piece(r * np.exp(1j * alpha), alpha, t, n_ray)
        lams.append(lam)
        wts.append(w)
    else:
        end = 1j * spec.delta - spec.c * spec.delta**2
        lam, w = _ray_piece(np.conj(end), -alpha, t, n_ray)
        lams.append(lam)
        wts.append(-w)
        a = np.linspace(-spec.delta, spec.delta, n_mid)
        lams.append(1j * a - spec.c * a**2)
        wts.append(_trapz_weights(a) * (1j - 2.0 * spec.c * a))
        lam, w = _ray_piece(end, alpha, t, n_ray)
        lams.append(lam)
        wts.append(w)

    return np.concatenate(lams), np.concatenate(wts)


@dataclass
class Trajectory:
    times: np.ndarray
    fields: list[Field]
    recorded_norms: dict[str, np.ndarray] = field(default_factory=dict)


@dataclass
class DecayReport:
    quantity: str
    exponent: float
    stderr: float
    window: tuple[float, float]
    target: float
    tolerance: float
    passed: bool
    fit: FitResult | None = None


def evolution_bands(op: DiscreteOperator, left: str, right: str, sponge: np.ndarray | None = None):
    """Tridiagonal generator rows with ghost-node closures.

    Dirichlet ends get an all-zero generator row (the value is frozen);
    Neumann ends get the mirrored-ghost second-order row. An optional sponge
    adds -sigma(x) to the diagonal.
    """
    g = op.grid
    h = g.h
    n = g.n
    dl = np.zeros(n)
    d = np.zeros(n)
    du = np.zeros(n)
    dl[1:-1] = 1 / h**2 - op.adv[1:-1] / (2 * h)
    d[1:-1] = -2 / h**2 + op.pot[1:-1]
    du[1:-1] = 1 / h**2 + op.adv[1:-1] / (2 * h)
    if left == "neumann":
        d[0] = -2 / h**2 + op.pot[0]
        du[0] = 2 / h**2
    elif left != "dirichlet":
        raise ValueError(f"unsupported evolution closure {left!r}")
    if right == "neumann":
        d[-1] = -2 / h**2 + op.pot[-1]
        dl[-1] = 2 / h**2
    elif right != "dirichlet":
        raise ValueError(f"unsupported evolution closure {right!r}")
    if sponge is not None:
        d = d - sponge
    return dl, d, du


def default_closures(kind: OperatorKind) -> tuple[str, str]:
    """Evolution closures: the phase variable keeps its wake plateau (Neumann
    on the left); everything else is frozen at zero."""
    if kind in (OperatorKind.Lpsi, OperatorKind.LpsiMinus, OperatorKind.LpsiPlus):
        return "neumann", "dirichlet"
    return "dirichlet", "dirichlet"


def checkpoint_times(dt: float, T: float, t0: float = 0.1, factor: float = 1.2) -> np.ndarray:
    """Geometric checkpoint times snapped to whole steps, always including T."""
    ts = []
    t = max(t0, dt)
    while t < T:
        ts.append(t)
        t *= factor
    ts.append(T)
    steps = sorted(set(int(round(s / dt)) for s in ts if s > 0))
    return np.array([k * dt for k in steps if k * dt <= T + 1e-12])


def evolve_linear(
    op: DiscreteOperator,
    u0: Field,
    dt: float,
    T: float,
    record: dict[str, tuple[WeightSpec | None, NormKind, bool]] | None = None,
    closures: tuple[str, str] | None = None,
    checkpoints: np.ndarray | None = None,
    store_fields: bool = True,
) -> Trajectory:
    """Implicit-trapezoid (Crank-Nicolson) evolution with checkpointed norms.

    `record` maps a series name to (weight, norm kind, on_derivative).
    """
    if dt <= 0 or T < dt:
        raise ValueError("need dt > 0 and T >= dt")
    left, right = closures or default_closures(op.kind)
    dl, d, du = evolution_bands(op, left, right)
    one = np.ones(op.grid.n)
    a_bands = (-0.5 * dt * dl, one - 0.5 * dt * d, -0.5 * dt * du)
    b_bands = (0.5 * dt * dl, one + 0.5 * dt * d, 0.5 * dt * du)
    if checkpoints is None:
        checkpoints = checkpoint_times(dt, T)
    u = u0.values.astype(complex if np.iscomplexobj(u0.values) else float).copy()
    times = [0.0]
    fields = [Field(op.grid, u.copy())]
    step_now = 0
    for t in checkpoints:
        target = int(round(t / dt))
        try:
            u = kernels.cn_chunk(a_bands, b_bands, u, target - step_now)
        except Exception as exc:  # pragma: no cover
            raise SolveFailure(str(exc)) from exc
        if not np.all(np.isfinite(u)):
            raise SolveFailure(f"non-finite state at t={t:g}")
        step_now = target
        times.append(target * dt)
        fields.append(Field(op.grid, u.copy()))
    traj = Trajectory(np.array(times), fields)
    if record:
        from .grids import differentiate

        for name, (w, nk, on_deriv) in record.items():
            vals = []
            for fld in traj.fields:
                g = differentiate(fld, 1) if on_deriv else fld
                vals.append(weighted_norm(g, w, nk))
            traj.recorded_norms[name] = np.array(vals)
    if not store_fields:
        traj.fields = [traj.fields[-1]]
    return traj


def _shifted_bands(op: DiscreteOperator, left: str, right: str, lam: complex):
    """(L - lam) in tridiagonal form consistent with the evolution closures."""
    dl, d, du = evolution_bands(op, left, right)
    d = d.astype(complex) - lam
    if left == "dirichlet":
        d[0] = 1.0
        du = du.astype(complex)
        du[0] = 0.0
    if right == "dirichlet":
        d[-1] = 1.0
        dl = dl.astype(complex)
        dl[-1] = 0.0
    return dl.astype(complex), d, du.astype(complex)


def contour_apply(
    op: DiscreteOperator,
    contour: ContourSpec,
    t: float,
    f: Field,
    split: str = "whole",
    closures: tuple[str, str] | None = None,
    ws: ResolventWorkspace | None = None,
    check: bool = True,
    stability_tol: float = 1e-3,
) -> Field:
    """e^{L t} f via -1/(2 pi i) * int e^{lam t} (L - lam)^{-1} f dlam.

    split "whole" solves the closed discrete resolvent at each node; split
    "left_right" integrates the far-field/core left component over a
    left_parabola_rays contour and the right component over right_arc_rays
    (Cauchy lets the two pieces ride separate contours). With check=True the
    quadrature is repeated at doubled node count and QuadratureDivergence is
    raised if the two disagree beyond stability_tol (relative, sup norm).
    """
    if t <= 0:
        raise ValueError("t must be positive")

    def integrate(n_nodes):
        if split == "whole":
            left, right = closures or default_closures(op.kind)
            lams, wts = contour_nodes(contour, t, n_nodes)
            acc = np.zeros(f.grid.n, dtype=complex)
            b = f.values.astype(complex).copy()
            for lam, w in zip(lams, wts):
                dl, d, du = _shifted_bands(op, left, right, lam)
                rhs = b.copy()
                if left == "dirichlet":
                    rhs[0] = 0.0
                if right == "dirichlet":
                    rhs[-1] = 0.0
                acc += w * np.exp(lam * t) * kernels.thomas_solve(dl, d, du, rhs)
            return -acc / (2j * np.pi)
        if ws is None:
            raise ValueError("left_right split needs a resolvent workspace")
        left_spec = ContourSpec("left_parabola_rays", c=contour.c, delta=contour.delta,
                                ray_angle=contour.ray_angle, n_nodes=n_nodes)
        right_spec = ContourSpec("right_arc_rays", arc_radius_scale=contour.arc_radius_scale,
                                 ray_angle=contour.ray_angle, n_nodes=n_nodes)
        acc = np.zeros(f.grid.n, dtype=complex)
        for spec, comp in ((left_spec, "left"), (right_spec, "right")):
            lams, wts = contour_nodes(spec, t, n_nodes)
            for lam, w in zip(lams, wts):
                g = np.sqrt(lam)
                dec = farfield_core_solve(
                    ws, op.kind, g, f, delta=np.inf, limiting_solver="kernel", strict=False
                )
                part = dec.left_component() if comp == "left" else dec.right_component()
                acc += w * np.exp(lam * t) * part.values
        return -acc / (2j * np.pi)

    u = integrate(contour.n_nodes)
    if check:
        u2 = integrate(2 * contour.n_nodes)
        scale = np.abs(u2).max()
        diff = np.abs(u - u2).max()
        if scale > 0 and diff > stability_tol * scale:
            raise QuadratureDivergence(
                f"node doubling moved the contour integral by {diff / scale:g} relative"
            )
        u = u2
    if not np.iscomplexobj(f.values) and np.abs(u.imag).max() <= 1e-9 * max(np.abs(u.real).max(), 1e-300):
        return Field(f.grid, u.real)
    return Field(f.grid, u)


LINEAR_DECAY_EXPERIMENTS: dict[str, tuple[OperatorKind, WeightSpec | None, NormKind, bool, float, float]] = {
    # name: (operator, weight, norm, on_derivative, target exponent, tolerance)
    "p_W1inf_weighted": (OperatorKind.Lp, AlgWeight(0, -1), NormKind.W1inf, False, -1.5, 0.15),
    "p_L1": (OperatorKind.Lp, None, NormKind.L1, False, -0.5, 0.1),
    "psi_Linf": (OperatorKind.Lpsi, None, NormKind.Linf, False, -0.5, 0.1),
    "psi_Linf_m10": (OperatorKind.Lpsi, AlgWeight(-1, 0), NormKind.Linf, False, -1.0, 0.15),
    "psix_L1": (OperatorKind.Lpsi, None, NormKind.L1, True, -0.5, 0.1),
    "psix_Linf": (OperatorKind.Lpsi, None, NormKind.Linf, True, -1.0, 0.15),
}


def linear_decay_experiment(
    name: str,
    front: FrontProfile,
    dt: float = 0.01,
    T: float = 200.0,
    window: tuple[float, float] = (20.0, 200.0),
    u0: Field | None = None,
) -> DecayReport:
    """Evolve localized data under one weighted linearization and fit the
    decay exponent of the proposition's norm over the window."""
    if name not in LINEAR_DECAY_EXPERIMENTS:
        raise ValueError(f"unknown experiment {name!r}; pick from {sorted(LINEAR_DECAY_EXPERIMENTS)}")
    kind, w, nk, on_deriv, target, tol = LINEAR_DECAY_EXPERIMENTS[name]
    op = assemble_operator(kind, front, front.grid)
    if u0 is None:
        u0 = Field.from_callable(front.grid, lambda x: np.exp(-(x**2)))
    traj = evolve_linear(op, u0, dt, T, record={name: (w, nk, on_deriv)}, store_fields=False)
    ts, vs = traj.times, traj.recorded_norms[name]
    try:
        fit = fit_power_law(ts, vs, window)
    except Exception as exc:
        raise FitWindowTooShort(str(exc)) from exc
    return DecayReport(
        quantity=name,
        exponent=fit.exponent,
        stderr=fit.stderr,
        window=window,
        target=target,
        tolerance=tol,
        passed=bool(abs(fit.exponent - target) <= tol),
        fit=fit,
    )


def small_time_suite(op: DiscreteOperator, dt: float = 1e-3, ts=(0.01, 0.02, 0.05, 0.1, 0.2, 0.5)) -> dict:
    """Short-time regularity probes: sup-norm decay from near-delta data and
    W1inf non-amplification for smooth bounded data."""
    grid = op.grid
    h = grid.h
    width = 4 * h
    delta_like = Field.from_callable(grid, lambda x: np.exp(-(x / width) ** 2) / (width * np.sqrt(np.pi)))
    smooth = Field.from_callable(grid, lambda x: np.exp(-(x**2) / 4) * (1 + 0.3 * np.sin(x)))
    ts = np.asarray(sorted(ts))
    checkpoints = np.array([int(round(t / dt)) * dt for t in ts])
    rec = {"sup": (None, NormKind.Linf, False), "w1inf": (None, NormKind.W1inf, False)}
    traj_d = evolve_linear(op, delta_like, dt, float(ts[-1]), record=rec, checkpoints=checkpoints, store_fields=False)
    traj_s = evolve_linear(op, smooth, dt, float(ts[-1]), record=rec, checkpoints=checkpoints, store_fields=False)
    sup = traj_d.recorded_norms["sup"][1:]
    fit = fit_power_law(traj_d.times[1:], sup, (ts[0] / 2, ts[-1] * 2))
    w0 = weighted_norm(smooth, None, NormKind.W1inf)
    ratios = traj_s.recorded_norms["w1inf"][1:] / w0
    return {
        "sup_slope": fit.exponent,
        "sup_values": sup,
        "w1inf_amplification": float(ratios.max()),
        "times": traj_d.times[1:],
    }
