"""Exception types shared across the package."""


class HoopError(Exception):
    """Base class for all package errors."""


class InvalidAction(HoopError):
    pass


class MissingParams(HoopError):
    pass


class EmptyFreeSpace(HoopError):
    pass


class UnreachableRegion(HoopError):
    pass


class NoPath(HoopError):
    pass


class PickFailed(HoopError):
    pass


class IllegalAbstractAction(HoopError):
    pass


class NoActions(HoopError):
    pass


class ConstraintUnsatisfiable(HoopError):
    def __init__(self, constraint: str, detail: str = ""):
        self.constraint = constraint
        super().__init__(f"{constraint}: {detail}" if detail else constraint)


class NoCutFound(HoopError):
    pass


class Exhausted(HoopError):
    pass
