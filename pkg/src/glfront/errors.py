"""Exception types shared across the package."""


class GlfrontError(Exception):
    """Base class for all package errors."""


class NonConvergence(GlfrontError):
    """Newton/shooting iteration exhausted its budget."""


class DomainTooSmall(GlfrontError):
    """Boundary values differ from the asymptotic rest states by too much."""


class WindowTooNoisy(GlfrontError):
    """Tail-fit residual exceeds the configured threshold."""


class GridMismatch(GlfrontError):
    """Fields/operators living on different grids were combined."""


class SingularMatrix(GlfrontError):
    """Banded solve hit a (near-)singular system."""


class DegenerateRoot(GlfrontError):
    """A shifted dispersion root sits on the imaginary axis."""


class EigensolveFailure(GlfrontError):
    """Dense eigensolver failed to converge."""


class GammaAtOrigin(GlfrontError):
    """Kernel requested at gamma = 0 where the closed form is singular."""


class BranchPoint(GlfrontError):
    """Kernel requested at the branch point lambda = -1."""


class BorderedSingular(GlfrontError):
    """Far-field/core bordered system is rank deficient."""


class QuadratureDivergence(GlfrontError):
    """Contour quadrature failed its node-doubling stability check."""


class FitWindowTooShort(GlfrontError):
    """Decay-fit window contains too few checkpoints."""


class SolveFailure(GlfrontError):
    """Linear solve inside a time stepper failed."""


class GuardViolation(GlfrontError):
    """Taylor guard |omega^-1 q_*^-1 p| <= 1/2 failed during a run."""

    def __init__(self, time: float, value: float):
        super().__init__(f"Taylor guard violated at t={time:g} (|w^-1 q^-1 p|_inf = {value:g})")
        self.time = time
        self.value = value


class PolarSingularity(GlfrontError):
    """|A| vanished at a node where the polar conversion needs it."""


class MissingNorm(GlfrontError):
    """Trajectory lacks a norm series required by the requested quantity."""


class ConfigInvalid(GlfrontError):
    """Configuration failed validation; message names the offending key."""


class NonPositiveValue(GlfrontError):
    """Power-law fit received non-positive values inside the window."""


class TooFewPoints(GlfrontError):
    """Power-law fit window holds fewer than the minimum number of points."""
