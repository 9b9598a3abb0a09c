"""Exception hierarchy shared by every module."""


class MinWalkError(ValueError):
    """Base class; subclasses ValueError so callers can catch broadly."""


class OutOfRange(MinWalkError):
    def __init__(self, field, value=None, bound="[0, 1]"):
        self.field = field
        self.value = value
        msg = f"{field} must lie in {bound}"
        if value is not None:
            msg += f", got {value!r}"
        super().__init__(msg)


class DegenerateStep(MinWalkError):
    pass


class CapExceeded(MinWalkError):
    pass


class UnsupportedAlpha(MinWalkError):
    pass


class DegenerateAlpha(MinWalkError):
    pass


class SingularCase(MinWalkError):
    pass


class InsufficientData(MinWalkError):
    pass


class DegenerateFit(MinWalkError):
    pass


class HypothesisViolation(MinWalkError):
    pass
