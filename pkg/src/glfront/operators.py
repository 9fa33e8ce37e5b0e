"""Discrete weighted linearizations, their spatial limits, dispersion curves,
Fredholm indices, and eigenvalue scans.

Both full operators are realized through the exponential-weight conjugation
(amplitude: w ∘ (dxx + 2 dx + 1 - 3q^2) ∘ w^-1, phase: (w q) ∘ L_phi ∘ (w q)^-1),
which gives, with m = log w,

    dxx + 2(1 - m') dx + (m'^2 - m'' - 2 m' + 1 - s q^2),   s = 3 (amplitude), 1 (phase).

The coefficients attain the limits dxx (right) and dxx + 2 dx - 2 resp.
dxx + 2 dx (left) exponentially fast, and the phase operator annihilates
w*q (and the amplitude operator annihilates w*q') to stencil accuracy.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegenerateRoot, EigensolveFailure, GridMismatch
from .front import FrontProfile
from .grids import BandedMatrix, Field, Grid
from .weights import OMEGA


class OperatorKind(enum.Enum):
    Lp = "Lp"
    Lpsi = "Lpsi"
    LpPlus = "LpPlus"
    LpMinus = "LpMinus"
    LpsiPlus = "LpsiPlus"
    LpsiMinus = "LpsiMinus"


FULL_KINDS = (OperatorKind.Lp, OperatorKind.Lpsi)


class DispersionCurve(enum.Enum):
    SigmaPlus = "SigmaPlus"
    SigmaPMinus = "SigmaPMinus"
    SigmaPsiMinus = "SigmaPsiMinus"


@dataclass(frozen=True)
class ClosureSpec:
    kind: str  # "dirichlet" | "neumann" | "robin"
    rate: complex = 0.0

    def __post_init__(self):
        if self.kind not in ("dirichlet", "neumann", "robin"):
            raise ValueError(f"unknown closure kind {self.kind!r}")


@dataclass(frozen=True)
class BoundaryClosure:
    left: ClosureSpec
    right: ClosureSpec

    @classmethod
    def dirichlet(cls) -> "BoundaryClosure":
        return cls(ClosureSpec("dirichlet"), ClosureSpec("dirichlet"))

    @classmethod
    def robin(cls, left_rate: complex, right_rate: complex) -> "BoundaryClosure":
        return cls(ClosureSpec("robin", left_rate), ClosureSpec("robin", right_rate))


@dataclass
class DiscreteOperator:
    kind: OperatorKind
    grid: Grid
    bc: BoundaryClosure
    adv: np.ndarray  # first-order coefficient a(x) in dxx + a dx + c
    pot: np.ndarray  # zeroth-order coefficient c(x)
    matrix: BandedMatrix

    def shifted(self, lam: complex = 0.0) -> BandedMatrix:
        """Matrix of (L - lam) with boundary-closure rows left untouched."""
        return self.matrix.shift_diagonal(slice(1, self.grid.n - 1), -lam)

    def apply_interior(self, u: np.ndarray, lam: complex = 0.0) -> np.ndarray:
        """(L - lam) u on interior nodes via the central stencils; 0 at the ends."""
        h = self.grid.h
        out = np.zeros(self.grid.n, dtype=np.result_type(u, self.adv, complex if lam else float))
        out[1:-1] = (
            (u[2:] - 2 * u[1:-1] + u[:-2]) / h**2
            + self.adv[1:-1] * (u[2:] - u[:-2]) / (2 * h)
            + (self.pot[1:-1] - lam) * u[1:-1]
        )
        return out

    def with_closure(self, bc: BoundaryClosure) -> "DiscreteOperator":
        dtype = np.result_type(self.matrix.ab, bc.left.rate, bc.right.rate)
        m = BandedMatrix(
            self.matrix.n, self.matrix.lower, self.matrix.upper, self.matrix.ab.astype(dtype)
        )
        _stamp_closure_rows(m, self.grid, bc)
        return DiscreteOperator(self.kind, self.grid, bc, self.adv, self.pot, m)


def _coefficients(kind: OperatorKind, grid: Grid, front: FrontProfile | None):
    x = grid.x
    if kind in (OperatorKind.LpPlus, OperatorKind.LpsiPlus):
        return np.zeros(grid.n), np.zeros(grid.n)
    if kind is OperatorKind.LpMinus:
        return np.full(grid.n, 2.0), np.full(grid.n, -2.0)
    if kind is OperatorKind.LpsiMinus:
        return np.full(grid.n, 2.0), np.zeros(grid.n)
    if front is None:
        raise ValueError(f"{kind} needs a front profile")
    if front.grid != grid:
        raise GridMismatch("front profile lives on a different grid")
    m1, m2 = OMEGA.log_deriv(x)
    s = 3.0 if kind is OperatorKind.Lp else 1.0
    adv = 2.0 * (1.0 - m1)
    pot = m1**2 - m2 - 2.0 * m1 + 1.0 - s * front.q**2
    return adv, pot


def _stamp_closure_rows(m: BandedMatrix, grid: Grid, bc: BoundaryClosure):
    h = grid.h
    n = grid.n
    m.clear_row(0)
    m.clear_row(n - 1)
    # left row: one-sided u' - rate*u = 0 (dirichlet: u = 0)
    if bc.left.kind == "dirichlet":
        m.set(0, 0, 1.0)
    else:
        rate = bc.left.rate if bc.left.kind == "robin" else 0.0
        m.set(0, 0, -3 / (2 * h) - rate)
        m.set(0, 1, 2 / h)
        m.set(0, 2, -1 / (2 * h))
    if bc.right.kind == "dirichlet":
        m.set(n - 1, n - 1, 1.0)
    else:
        rate = bc.right.rate if bc.right.kind == "robin" else 0.0
        m.set(n - 1, n - 1, 3 / (2 * h) - rate)
        m.set(n - 1, n - 2, -2 / h)
        m.set(n - 1, n - 3, 1 / (2 * h))


def assemble_operator(
    kind: OperatorKind,
    front: FrontProfile | None,
    grid: Grid,
    bc: BoundaryClosure | None = None,
) -> DiscreteOperator:
    """Banded realization with second-order interior stencils and closure rows."""
    if bc is None:
        bc = BoundaryClosure.dirichlet()
    adv, pot = _coefficients(kind, grid, front)
    h = grid.h
    n = grid.n
    dtype = complex if (np.iscomplexobj(bc.left.rate) or np.iscomplexobj(bc.right.rate)) else float
    m = BandedMatrix.zeros(n, 2, 2, dtype=dtype)
    idx = np.arange(1, n - 1)
    m.ab[m.upper + 1, idx - 1] = 1 / h**2 - adv[idx] / (2 * h)  # sub-diagonal
    m.ab[m.upper, idx] = -2 / h**2 + pot[idx]
    m.ab[m.upper - 1, idx + 1] = 1 / h**2 + adv[idx] / (2 * h)  # super-diagonal
    _stamp_closure_rows(m, grid, bc)
    return DiscreteOperator(kind, grid, bc, adv, pot, m)


def dispersion(curve: DispersionCurve, k: float) -> complex:
    """Essential-spectrum curves of the limiting operators, lam(k)."""
    k = complex(k)
    if curve is DispersionCurve.SigmaPlus:
        return -(k**2)
    if curve is DispersionCurve.SigmaPMinus:
        return -(k**2) + 2j * k - 2.0
    if curve is DispersionCurve.SigmaPsiMinus:
        return -(k**2) + 2j * k
    raise ValueError(f"unknown curve {curve}")


def fredholm_index(kind: OperatorKind, eta: float) -> int:
    """Index on the eta-exponentially-weighted spaces.

    Counts positive real parts among the roots of the shifted limiting
    dispersion polynomials d^-(0, nu+eta) and d^+(0, nu-eta) and returns
    (left count) - (right count).
    """
    if kind not in FULL_KINDS:
        raise ValueError("fredholm_index is defined for the full operators")
    if eta <= 0:
        raise ValueError("eta must be positive")
    # d^+(0, nu) = nu^2 for both operators: double root of the shift at nu = eta
    right_roots = np.array([eta, eta], dtype=complex)
    # d^-(0, nu) = nu^2 + 2 nu - 2 (amplitude) or nu^2 + 2 nu (phase)
    const = -2.0 if kind is OperatorKind.Lp else 0.0
    mu = np.roots([1.0, 2.0, const])
    left_roots = mu - eta
    roots = np.concatenate([left_roots, right_roots])
    if np.any(np.abs(roots.real) < 1e-10):
        raise DegenerateRoot(f"shifted root on the imaginary axis at eta={eta:g}")
    return int(np.sum(left_roots.real > 0) - np.sum(right_roots.real > 0))


def _closed_dense(op: DiscreteOperator) -> np.ndarray:
    """Dense matrix with boundary unknowns eliminated through the closure rows."""
    a = op.matrix.to_dense()
    n = op.grid.n
    if op.bc.left.kind == "dirichlet":
        pass  # u0 = 0: dropping row/column 0 is exact
    else:
        r = a[0]
        for i in (1, 2):
            c = a[i, 0]
            if c != 0:
                a[i, 1:] -= c * r[1:] / r[0]
                a[i, 0] = 0.0
    if op.bc.right.kind != "dirichlet":
        r = a[n - 1]
        for i in (n - 2, n - 3):
            c = a[i, n - 1]
            if c != 0:
                a[i, : n - 1] -= c * r[: n - 1] / r[n - 1]
                a[i, n - 1] = 0.0
    return a[1:-1, 1:-1]


def eigen_scan(op: DiscreteOperator, halfplane_cut: float) -> np.ndarray:
    """Eigenvalues of the closed operator with Re >= halfplane_cut, sorted by
    descending real part (dense eigensolve)."""
    if op.grid.n > 8192:
        raise ValueError("eigen_scan dense budget: n <= 8192")
    a = _closed_dense(op)
    if np.iscomplexobj(a) and np.abs(a.imag).max() == 0.0:
        a = a.real
    try:
        lam = scipy.linalg.eigvals(a)
    except (scipy.linalg.LinAlgError, ValueError) as exc:  # pragma: no cover
        raise EigensolveFailure(str(exc)) from exc
    lam = lam[lam.real >= halfplane_cut]
    return lam[np.argsort(-lam.real)]
