"""Exception hierarchy shared by every layer of the prover."""


class DlpError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(DlpError):
    def __init__(self, message, pos=None):
        super().__init__(message if pos is None else f"{message} (at offset {pos})")
        self.pos = pos


class NonIntegralDivision(DlpError, ArithmeticError):
    pass


class UnboundVariable(DlpError, KeyError):
    def __str__(self):
        return f"unbound variable {self.args[0]!r}"


class VariableCapture(DlpError):
    pass


class SubstitutionError(DlpError):
    pass


class UnsupportedConnective(DlpError):
    pass


class KindMismatch(DlpError):
    pass


class BudgetExceeded(DlpError):
    pass


class SolverProcessError(DlpError):
    pass


class RuleError(DlpError):
    """A rule application was rejected by the kernel.

    ``code`` is one of ``NotApplicable``, ``MissingExhaustiveness``,
    ``FreenessViolation`` or ``ObligationFailed``.
    """

    def __init__(self, code, message):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class SequentMismatch(DlpError):
    pass


class OpenGoals(DlpError):
    pass
