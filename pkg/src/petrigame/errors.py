"""Exception hierarchy shared by every module of the package."""


class PetriGameError(Exception):
    """Base class for all errors raised by petrigame."""


class InputError(PetriGameError):
    """Something wrong with a user-supplied net, annotation or document."""


class StepNotEnabled(PetriGameError):
    pass


class SafetyViolation(PetriGameError):
    """A firing would put a second token on some place."""

    def __init__(self, message: str, marking=None, step=None):
        super().__init__(message)
        self.marking = marking
        self.step = step


class NotFreeChoice(PetriGameError):
    pass


class UnknownRole(InputError):
    pass


class UnknownTransition(InputError):
    pass


class StateSpaceExceeded(PetriGameError):
    pass


class NotAWorkflowNet(PetriGameError):
    pass


class InitialIsFinal(PetriGameError):
    pass


class InvalidDistribution(InputError):
    pass


class MalformedHistory(PetriGameError):
    pass


class NonStationaryStrategy(PetriGameError):
    pass


class UnsupportedDevice(PetriGameError):
    """Exact best responses need public (broadcast) signals."""


class SolverNonconvergence(PetriGameError):
    pass


class HypothesisViolated(PetriGameError):
    def __init__(self, failures: list[str]):
        super().__init__("theorem hypotheses violated: " + "; ".join(failures))
        self.failures = failures


class ParseError(InputError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnsupportedFeature(InputError):
    pass


class SchemaError(InputError):
    pass
