class EverseError(Exception):
    pass


class SingularMapError(EverseError):
    """A map was evaluated where its denominator vanishes or the result is not finite."""


class ForbiddenStageError(EverseError):
    """Stage parameters fall in the excluded region alpha = xi = 0 with |t| <= 1."""


class DomainError(EverseError):
    pass


class SmoothnessError(EverseError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class DegenerateError(EverseError):
    pass


class ScheduleError(EverseError):
    """A schedule document is malformed or leaves the admissible parameter region."""

    def __init__(self, message, frame=None):
        super().__init__(message)
        self.frame = frame
