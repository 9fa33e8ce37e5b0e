"""Uniform 1D grids, sampled fields, derivative stencils, banded solves."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import GridMismatch, SingularMatrix


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("grid needs at least 3 nodes")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @cached_property
    def x(self) -> np.ndarray:
        x = np.linspace(self.x_min, self.x_max, self.n)
        x.setflags(write=False)
        return x

    @property
    def symmetric(self) -> bool:
        return abs(self.x_min + self.x_max) < 1e-12 * max(1.0, abs(self.x_max))


@dataclass
class Field:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != (self.grid.n,):
            raise GridMismatch(
                f"field has {self.values.shape} values for an n={self.grid.n} grid"
            )

    @classmethod
    def from_callable(cls, grid: Grid, fn) -> "Field":
        return cls(grid, fn(grid.x))

    @classmethod
    def zeros(cls, grid: Grid, dtype=float) -> "Field":
        return cls(grid, np.zeros(grid.n, dtype=dtype))


def same_grid(a: Field | Grid, b: Field | Grid) -> Grid:
    ga = a.grid if isinstance(a, Field) else a
    gb = b.grid if isinstance(b, Field) else b
    if ga != gb:
        raise GridMismatch(f"grids differ: {ga} vs {gb}")
    return ga


def differentiate(f: Field, order: int = 1) -> Field:
    """Second-order derivative: central stencils inside, one-sided at the ends."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    u = f.values
    h = f.grid.h
    out = np.empty_like(u, dtype=np.result_type(u, float))
    if order == 1:
        out[1:-1] = (u[2:] - u[:-2]) / (2 * h)
        out[0] = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * h)
        out[-1] = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * h)
    else:
        out[1:-1] = (u[2:] - 2 * u[1:-1] + u[:-2]) / h**2
        out[0] = (2 * u[0] - 5 * u[1] + 4 * u[2] - u[3]) / h**2
        out[-1] = (2 * u[-1] - 5 * u[-2] + 4 * u[-3] - u[-4]) / h**2
    return Field(f.grid, out)


@dataclass
class BandedMatrix:
    """(l, u)-banded matrix in LAPACK ab layout; bandwidth <= 2.

    ab[u + i - j, j] = A[i, j]. Interior rows are tridiagonal stencils;
    boundary-closure rows may reach two nodes in (Robin one-sided rows),
    which is what pushes the bandwidth to 2.
    """

    n: int
    lower: int
    upper: int
    ab: np.ndarray

    @classmethod
    def zeros(cls, n: int, lower: int = 2, upper: int = 2, dtype=complex) -> "BandedMatrix":
        return cls(n, lower, upper, np.zeros((lower + upper + 1, n), dtype=dtype))

    def set(self, i: int, j: int, val):
        if abs(i - j) > max(self.lower, self.upper):
            raise ValueError(f"entry ({i},{j}) outside bandwidth")
        self.ab[self.upper + i - j, j] = val

    def get(self, i: int, j: int):
        if abs(i - j) > max(self.lower, self.upper):
            return 0.0
        return self.ab[self.upper + i - j, j]

    def copy(self) -> "BandedMatrix":
        return BandedMatrix(self.n, self.lower, self.upper, self.ab.copy())

    def shift_diagonal(self, rows: slice, amount) -> "BandedMatrix":
        """Return a copy with `amount` added to the diagonal on `rows`."""
        dtype = np.result_type(self.ab, amount)
        out = BandedMatrix(self.n, self.lower, self.upper, self.ab.astype(dtype))
        out.ab[self.upper, rows] += amount
        return out

    def clear_row(self, i: int):
        for j in range(max(0, i - self.lower), min(self.n, i + self.upper + 1)):
            self.ab[self.upper + i - j, j] = 0.0

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=self.ab.dtype)
        for k in range(-self.lower, self.upper + 1):
            diag = self.ab[self.upper - k, max(k, 0): self.n + min(k, 0)]
            a += np.diag(diag, k=k)
        return a

    def matvec(self, u: np.ndarray) -> np.ndarray:
        out = np.zeros(self.n, dtype=np.result_type(self.ab, u))
        for k in range(-self.lower, self.upper + 1):
            diag = self.ab[self.upper - k, max(k, 0): self.n + min(k, 0)]
            if k >= 0:
                out[: self.n - k] += diag * u[k:]
            else:
                out[-k:] += diag * u[:k]
        return out

    @property
    def row_scale(self) -> float:
        return float(np.abs(self.ab).sum(axis=0).max())


def solve_banded(A: BandedMatrix, rhs: Field | np.ndarray) -> Field | np.ndarray:
    """Solve A u = rhs via LAPACK gbsv.

    Postcondition is enforced in backward-error form
    |A u - rhs|_inf <= 1e-10 (|A|_inf |u|_inf + |rhs|_inf); violations (and
    LAPACK pivot failures) raise SingularMatrix.
    """
    b = rhs.values if isinstance(rhs, Field) else np.asarray(rhs)
    try:
        u = scipy.linalg.solve_banded((A.lower, A.upper), A.ab, b)
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError, ValueError) as exc:
        raise SingularMatrix(str(exc)) from exc
    resid = np.abs(A.matvec(u) - b).max()
    scale = A.row_scale * np.abs(u).max() + np.abs(b).max()
    if not np.isfinite(resid) or resid > 1e-10 * scale:
        raise SingularMatrix(f"banded solve residual {resid:g} exceeds 1e-10*{scale:g}")
    if isinstance(rhs, Field):
        return Field(rhs.grid, u)
    return u


def trapezoid_weights(grid: Grid) -> np.ndarray:
    w = np.full(grid.n, grid.h)
    w[0] = w[-1] = grid.h / 2
    return w
