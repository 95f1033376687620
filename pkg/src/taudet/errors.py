"""Exception types raised across the package.

Every failure mode that callers are expected to handle gets its own class;
generic numerical trouble that indicates a bug raises plain ValueError /
ArithmeticError instead.
"""


class TaudetError(Exception):
    """Base class for all package-specific errors."""


# --- special functions ---------------------------------------------------

class NonPositiveImaginaryPart(TaudetError):
    """Im sigma <= 0, or Im B not positive definite."""


class TruncationFailure(TaudetError):
    """Required lattice/series radius exceeds the configured cap."""


class InvalidDimension(TaudetError):
    """Size mismatch between z, B, characteristic or derivative index."""


# --- curve / surface geometry -------------------------------------------

class DegenerateBranchPoints(TaudetError):
    """Branch points coincide or violate the minimum separation."""


class HomologyEncodingError(TaudetError):
    """Encoded cycles do not realize the standard symplectic pairing."""


class SheetTrackingError(TaudetError):
    """Analytic continuation of y disagrees with recorded cut crossings."""


class PathThroughBranchPoint(TaudetError):
    """An interior path segment violates the branch-point clearance."""


class PathSelectionFailure(TaudetError):
    """The router found no admissible cut-avoiding path."""


class SingularPeriodMatrix(TaudetError):
    """a-period matrix of the monomial basis is numerically singular."""


class RiemannRelationViolation(TaudetError):
    """B fails symmetry or Im B fails positivity beyond tolerance."""


class ValidationFailure(TaudetError):
    """A defining property re-checked by oracle exceeded tolerance."""


class AllOddCharacteristicsDegenerate(TaudetError):
    """q(P) vanishes for every odd characteristic at the requested point."""


class RadiusCollapse(TaudetError):
    """No Cauchy-circle radius achieves the target accuracy."""


class WronskianVanishes(TaudetError):
    """|W(P)| below threshold; move the evaluation point."""


# --- tau module ----------------------------------------------------------

class DegenerateDivisor(TaudetError):
    """A zero of w sits where the local frame logic cannot classify it."""


class RoundingResidualTooLarge(TaudetError):
    """Lattice-vector rounding residual exceeds the hard cap."""


class AnchorDisagreement(TaudetError):
    """Relative spread of F across anchor points exceeds tolerance."""


class DivisorsNotDisjoint(TaudetError):
    """tau_ratio requires disjoint simple divisors."""


class StepSelectionFailure(TaudetError):
    """Richardson extrapolation over the step ladder did not converge."""


class ContourNearDivisor(TaudetError):
    """A cycle contour passes too close to a zero of w."""


class JacobianSingular(TaudetError):
    """d(coordinates)/d(parameters) is numerically rank-deficient."""


class WrongOrientation(TaudetError):
    """Im(B/A) <= 0 for a torus-type input."""


# --- spectral module -----------------------------------------------------

class ContourQuadratureFailure(TaudetError):
    """Heat-kernel contour quadrature failed to converge."""


class MeshQualityFailure(TaudetError):
    """Triangulation failed a structural or quality check."""


class SolverNonConvergence(TaudetError):
    """Sparse eigensolver did not converge."""


class SpuriousNegativeEigenvalue(TaudetError):
    """Negative eigenvalue beyond tolerance; signals broken gluing."""


class SplitInconsistency(TaudetError):
    """zeta'(0) moves by more than its error bar under T_split change."""


class WindowTooAggressive(TaudetError):
    """Heat-trace fit residual exceeds threshold on the chosen window."""


class ResolutionInsufficient(TaudetError):
    """Requested eigenvalue count exceeds what the mesh supports."""
