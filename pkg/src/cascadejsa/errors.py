"""Exception hierarchy shared by the library and the command line."""


class CascadeError(Exception):
    """Base class for every error raised by cascadejsa."""

    exit_code = 1


class ConfigError(CascadeError, ValueError):
    """Invalid parameters, grids, presets or configuration files."""

    exit_code = 2


class DSLError(ConfigError):
    """A modulation expression could not be parsed or checked.

    ``offset`` is the byte offset into the UTF-8 encoded source.
    """

    def __init__(self, message, offset, expected=(), found=None):
        self.offset = offset
        self.expected = tuple(sorted(expected))
        self.found = found
        detail = f"{message} at byte {offset}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)}"
            detail += f"; found {found!r})" if found is not None else ")"
        super().__init__(detail)


class NumericalError(CascadeError, ArithmeticError):
    """A decomposition failed or produced values outside its contract."""

    exit_code = 3


class DegenerateFieldError(NumericalError):
    """The spectral field is identically zero and cannot be normalized."""


class ContractError(NumericalError):
    """Inputs violate a numerical precondition (e.g. unnormalized spectrum)."""
