"""Exceptions raised by afmass.

`ComputationError` covers every numerical or precondition failure raised by
the library; the CLI reports them as a failed computation (exit code 1).
`ConfigInvalid` is raised for configurations that do not validate (exit 2).
"""


class AFMassError(Exception):
    """Root of the afmass exception hierarchy."""

    pass


class ConfigInvalid(AFMassError):
    """Configuration does not validate against its schema."""

    pass


class IoError(AFMassError):
    """Report could not be written or read."""

    pass


class ComputationError(AFMassError):
    """A numerical operation could not be carried out."""

    pass


class SingularPoint(ComputationError):
    pass


class NotPositiveDefinite(ComputationError):
    pass


class StepTooLarge(ComputationError):
    pass


class AnalyticDerivativesUnavailable(ComputationError):
    pass


class NonPositiveConformalFactor(ComputationError):
    pass


class PoleEvaluation(ComputationError):
    pass


class DegenerateNormal(ComputationError):
    pass


class UnsupportedDimension(ComputationError):
    pass


class FitIllConditioned(ComputationError):
    pass


class ZeroRhoMin(ComputationError):
    pass


class NotAsymptoticallySchwarzschild(ComputationError):
    pass


class TailNotNegligible(ComputationError):
    pass


class GridTooCoarse(ComputationError):
    pass


class NonPositiveU(ComputationError):
    pass


class WindowExitsChart(ComputationError):
    pass


class GridMismatch(ComputationError):
    pass


class MissingCap(ComputationError):
    pass


class EstimatesDisagree(ComputationError):
    pass
