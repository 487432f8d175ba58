"""Exception hierarchy shared by all diskfactor modules."""


class DiskFactorError(Exception):
    """Base class for every error raised by diskfactor."""


class GridError(DiskFactorError, ValueError):
    """Grid size or sample array violates the uniform-grid contract."""


class QuadratureAccuracyError(DiskFactorError, ValueError):
    """Interior evaluation point is too close to the circle for the grid."""


class EmptySetError(DiskFactorError, ValueError):
    """An operation needs a nonempty closed boundary set."""


class ModulusDataError(DiskFactorError, ValueError):
    """A modulus evaluator returned negative or non-finite values."""


class DegenerateModulusError(DiskFactorError, ValueError):
    """A modulus vanishes at a positive argument."""


class UnresolvableScaleError(DiskFactorError, ValueError):
    """A requested separation scale is below the grid resolution."""


class InconsistentSampleError(DiskFactorError, ValueError):
    """Boundary and disk pair sets disagree in a way sampling cannot explain."""


class SingularEvaluationError(DiskFactorError, ValueError):
    """Evaluation requested at a singular point (atom, boundary zero, pole)."""


class NotDivisibleError(DiskFactorError, ValueError):
    """f/U is not bounded: the inner function does not divide f."""


class UnboundedModulusError(DiskFactorError, ValueError):
    """A log-modulus contains +inf or NaN."""


class SpecError(DiskFactorError, ValueError):
    """A textual function/modulus/set specification could not be parsed."""
