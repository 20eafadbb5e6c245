"""Exception and warning types raised across the package."""


class MpfeecError(Exception):
    """Base class for all package errors."""


class InvalidKnots(MpfeecError):
    pass


class SingularGram(MpfeecError):
    pass


class DimensionMismatch(MpfeecError):
    pass


class DegenerateMapping(MpfeecError):
    pass


class GeometricNonConformity(MpfeecError):
    pass


class NonNestedInterface(MpfeecError):
    pass


class ParametrizationMismatch(MpfeecError):
    pass


class PatchNotOnEdge(MpfeecError):
    pass


class NestednessExpansionFailed(MpfeecError):
    pass


class InvalidTarget(MpfeecError):
    pass


class RegionOutsideNeighborhood(MpfeecError):
    pass


class InvalidSequences(MpfeecError):
    pass


class SurfaceDecompositionFailed(MpfeecError):
    pass


class WrongSequenceKind(MpfeecError):
    pass


class SolverFailure(MpfeecError):
    pass


class ScenarioError(MpfeecError):
    pass


class QuadratureTooCoarse(UserWarning):
    """Advisory: quadrature order below p+1 cannot integrate the Gram entries exactly."""
