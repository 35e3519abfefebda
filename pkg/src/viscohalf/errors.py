"""Exception and warning types raised by the kernel evaluators."""


class GreenError(ValueError):
    """Base class for invalid-input conditions in this package."""


class MaterialError(GreenError):
    pass


class BranchDegenerate(GreenError):
    """The vertical wavenumber touched a real-axis branch point.

    Only reachable with undamped (real) wavenumbers; add damping or move
    the sampling grid off the branch point.
    """


class CoincidentPoints(GreenError):
    pass


class SurfaceSource(GreenError):
    pass


class ModeDegenerate(GreenError):
    pass


class DegenerateBasis(GreenError):
    """The shear eigenvectors are parallel (the line eta1 = 0)."""


class SingularSystem(GreenError):
    pass


class DecayViolation(GreenError):
    pass


class NearSurfaceLimit(GreenError):
    pass


class ParseError(GreenError):
    pass


class ValidationError(GreenError):
    pass


class NoConvergence(RuntimeWarning):
    """Adaptive quadrature stopped above tolerance; the best value is kept."""
