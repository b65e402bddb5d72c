"""Exception types raised across the package."""


class PrivselError(Exception):
    """Base class for all package errors."""


class DomainError(PrivselError, ValueError):
    """A point or hypothesis does not live in the expected domain."""


class InvalidParameterError(PrivselError, ValueError):
    """A parameter is outside its documented range."""


class UnsupportedExactError(PrivselError):
    """Exact mass or TV computation was requested for an unsupported family."""


class EmptyInputError(PrivselError, ValueError):
    """A selection primitive received an empty candidate set."""


class CoverSizeError(PrivselError):
    """An explicit cover would exceed the materialization cap.

    Attributes:
        size: exact number of elements the cover would contain.
        cap: the cap that was exceeded.
    """

    def __init__(self, size, cap, formula=""):
        self.size = size
        self.cap = cap
        self.formula = formula
        msg = f"cover would have {size} elements (cap {cap})"
        if formula:
            msg += f"; size = {formula}"
        super().__init__(msg)
