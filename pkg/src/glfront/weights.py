"""Exponential and algebraic weight families and the weighted norms built on them.

Weights match their closed forms exactly for |x| >= 1 and are C^2-blended on
(-1, 1): exponential weights blend the exponent eta_-*x -> eta_+*x, algebraic
weights blend the exponent r_- -> r_+ of (1+x^2)^(r/2), both through the
quintic smoothstep S(u) = u^3 (10 - 15u + 6u^2). All derivatives are analytic.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch
from .grids import Field, differentiate, trapezoid_weights


class NormKind(enum.Enum):
    L1 = "L1"
    Linf = "Linf"
    W11 = "W11"
    W1inf = "W1inf"


def smoothstep(u, order: int = 0):
    """Quintic smoothstep on [0,1] (clamped outside) and its derivatives."""
    u = np.clip(u, 0.0, 1.0)
    if order == 0:
        return u**3 * (10.0 - 15.0 * u + 6.0 * u**2)
    if order == 1:
        return 30.0 * u**2 * (1.0 - u) ** 2
    if order == 2:
        return 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u)
    raise ValueError("order must be 0, 1 or 2")


def _blend(x):
    """b(x) with b = 0 for x <= -1, b = x for x >= 1, C^2 in between.

    Returns (b, b', b'')."""
    x = np.asarray(x, dtype=float)
    u = (x + 1.0) / 2.0
    s0 = smoothstep(u, 0)
    s1 = smoothstep(u, 1)
    s2 = smoothstep(u, 2)
    b = x * s0
    b1 = s0 + x * s1 / 2.0
    b2 = s1 + x * s2 / 4.0
    return b, b1, b2


class WeightSpec:
    """Base class; subclasses provide (value, d1, d2) at arbitrary points."""

    def profile(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.profile(x)[0]


@dataclass(frozen=True)
class ExpWeight(WeightSpec):
    """omega_{eta-,eta+}: e^{eta_- x} for x <= -1, e^{eta_+ x} for x >= 1."""

    eta_minus: float
    eta_plus: float

    def profile(self, x):
        x = np.asarray(x, dtype=float)
        b, b1, b2 = _blend(x)
        d = self.eta_plus - self.eta_minus
        m = self.eta_minus * x + d * b
        m1 = self.eta_minus + d * b1
        m2 = d * b2
        w = np.exp(m)
        return w, m1 * w, (m2 + m1**2) * w

    def log_deriv(self, x):
        """(log w)' and (log w)'' — the m', m'' entering operator coefficients."""
        x = np.asarray(x, dtype=float)
        _, b1, b2 = _blend(x)
        d = self.eta_plus - self.eta_minus
        return self.eta_minus + d * b1, d * b2


@dataclass(frozen=True)
class AlgWeight(WeightSpec):
    """rho_{r-,r+}: (1+x^2)^{r_-/2} for x <= -1, (1+x^2)^{r_+/2} for x >= 1."""

    r_minus: float
    r_plus: float

    def profile(self, x):
        x = np.asarray(x, dtype=float)
        u = (x + 1.0) / 2.0
        d = self.r_plus - self.r_minus
        r = self.r_minus + d * smoothstep(u, 0)
        r1 = d * smoothstep(u, 1) / 2.0
        r2 = d * smoothstep(u, 2) / 4.0
        L = np.log1p(x**2)
        L1 = 2.0 * x / (1.0 + x**2)
        L2 = 2.0 * (1.0 - x**2) / (1.0 + x**2) ** 2
        g = r * L / 2.0
        g1 = r1 * L / 2.0 + r * L1 / 2.0
        g2 = r2 * L / 2.0 + r1 * L1 + r * L2 / 2.0
        w = np.exp(g)
        return w, g1 * w, (g2 + g1**2) * w


@dataclass(frozen=True)
class ProductWeight(WeightSpec):
    factors: tuple[WeightSpec, ...]

    def profile(self, x):
        vals = [f.profile(x) for f in self.factors]
        w, w1, w2 = vals[0]
        for v, v1, v2 in vals[1:]:
            w, w1, w2 = w * v, w1 * v + w * v1, w2 * v + 2 * w1 * v1 + w * v2
        return w, w1, w2


# the paper's principal weight: 1 on the left, e^x on the right
OMEGA = ExpWeight(0.0, 1.0)


def eval_weight(w: WeightSpec, x, derivative: int = 0):
    """Weight value (or first/second derivative) at x; analytic, vectorized."""
    if derivative not in (0, 1, 2):
        raise ValueError("derivative must be 0, 1 or 2")
    return w.profile(x)[derivative]


def weighted_norm(f: Field, w: WeightSpec | None, kind: NormKind) -> float:
    """Norm of w*f: L1 by trapezoid quadrature, Linf by node max.

    W1-variants add the derivative term with the same weight:
    |w f| + |w f'| in the corresponding base norm.
    """
    if w is not None and isinstance(w, Field):
        raise GridMismatch("weight must be a WeightSpec, not a Field")
    wx = 1.0 if w is None else w(f.grid.x)
    base = np.abs(wx * f.values)
    if kind is NormKind.L1:
        return float(np.sum(trapezoid_weights(f.grid) * base))
    if kind is NormKind.Linf:
        return float(base.max())
    dbase = np.abs(wx * differentiate(f, 1).values)
    if kind is NormKind.W11:
        tw = trapezoid_weights(f.grid)
        return float(np.sum(tw * base) + np.sum(tw * dbase))
    if kind is NormKind.W1inf:
        return float(base.max() + dbase.max())
    raise ValueError(f"unknown norm kind {kind}")
