"""Exceptions raised while reading or building molecules."""


class ChemError(ValueError):
    """Base class; ``position`` is the offending SMILES character offset when known."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class SmilesSyntaxError(ChemError):
    pass


class UnbalancedParenthesis(SmilesSyntaxError):
    pass


class UnclosedRingBond(SmilesSyntaxError):
    pass


class UnknownElement(ChemError):
    pass


class ValenceViolation(ChemError):
    pass


class KekulizationFailure(ChemError):
    pass
