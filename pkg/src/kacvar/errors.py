"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line front-end:
2 for validation problems, 3 for violated invariants, 4 for numerical failures.
"""


class KacvarError(Exception):
    exit_code = 2


class ValidationError(KacvarError):
    exit_code = 2


class InvariantError(KacvarError):
    exit_code = 3


class NumericalError(KacvarError):
    exit_code = 4


# ensemble
class DegenerateEnsemble(ValidationError):
    pass


class InvalidSpec(ValidationError):
    pass


# roots
class EvalOverflow(NumericalError):
    def __init__(self, x, msg=None):
        self.x = x
        super().__init__(msg or f"polynomial evaluation overflowed at x={x!r}")


class UnresolvedSignChange(NumericalError):
    pass


class ZeroPolynomial(ValidationError):
    pass


# mc
class CalibrationError(InvariantError):
    pass


class ParityViolation(InvariantError):
    pass


class DegenerateDistribution(NumericalError):
    pass


class InsufficientData(ValidationError):
    pass


class InsufficientTrials(ValidationError):
    pass


class InvalidInterval(ValidationError):
    pass


# kacrice
class DiagonalPair(ValidationError):
    pass


class DiagonalBand(NumericalError):
    pass


class NumericalDegeneracy(NumericalError):
    def __init__(self, msg, residual=None, where=None):
        self.residual = residual
        self.where = where
        super().__init__(msg)


class QuadratureFailure(NumericalError):
    pass


class QuadratureWarning(UserWarning):
    pass


# cli
class SpecMismatch(ValidationError):
    pass


class SchemaError(ValidationError):
    pass


class UnsupportedDistribution(ValidationError):
    pass
