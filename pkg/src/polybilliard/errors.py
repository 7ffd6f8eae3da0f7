"""Exception hierarchy.

Dynamics failures subclass :class:`Termination`; ``propagate`` turns them
into orbit flags instead of letting them escape.
"""


class BilliardError(Exception):
    pass


class DimensionMismatch(BilliardError, ValueError):
    pass


class DegenerateTangent(BilliardError):
    pass


class DegenerateNormal(BilliardError):
    pass


class EmptyRegion(BilliardError, ValueError):
    pass


class AxisTouching(BilliardError, ValueError):
    pass


class OutOfDomain(BilliardError, ValueError):
    pass


class ChartMismatch(BilliardError, ValueError):
    pass


class SingularParametrizationPoint(BilliardError, ValueError):
    pass


class BranchLoss(BilliardError):
    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class Degenerate(BilliardError, ValueError):
    pass


class Termination(BilliardError):
    """Base class for reasons an orbit stops."""

    flag = "terminated"


class NoIntersection(Termination):
    flag = "NoIntersection"


class TangentialImpact(Termination):
    flag = "TangentialImpact"


class EdgeImpact(Termination):
    flag = "EdgeImpact"


class NoReflection(Termination):
    flag = "NoReflection"


class AmbiguousBranch(Termination):
    flag = "AmbiguousBranch"


class DegenerateChord(Termination, ValueError):
    flag = "DegenerateChord"


class ConfigError(BilliardError, ValueError):
    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class SchemaMismatch(BilliardError, ValueError):
    pass
