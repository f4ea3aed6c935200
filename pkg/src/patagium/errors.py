"""Exception types shared across the package."""


class PatagiumError(Exception):
    """Base class for all domain errors."""


class ConfigError(PatagiumError):
    pass


class NoRealSolution(PatagiumError):
    """Linkage loop cannot close at the requested input angle."""


class BranchAmbiguity(PatagiumError):
    """Both output-angle branches coincide within tolerance (dead point)."""


class DegenerateMembrane(PatagiumError):
    """Wing polygon collapsed below the configured minimum area."""


class TooFewPoints(PatagiumError):
    pass


class PitchSingularity(PatagiumError):
    """Altitude-equilibrium thrust undefined at |pitch| >= 90 deg."""


class SingularAllocation(PatagiumError):
    """Thrust-torque allocation matrix is not invertible."""


class NumericalDivergence(PatagiumError):
    """Simulator state exceeded configured sanity bounds."""


class OutOfRange(PatagiumError):
    pass


class InfeasibleRange(PatagiumError):
    pass


class TooShort(PatagiumError):
    pass


class SchemaMismatch(PatagiumError):
    pass


class CorruptFile(PatagiumError):
    pass


class MissingEvent(PatagiumError):
    pass


class MissingPolicy(PatagiumError):
    pass


class DivergedLoss(PatagiumError):
    pass


class NonFiniteGradient(PatagiumError):
    pass


class StaleSession(PatagiumError):
    pass
