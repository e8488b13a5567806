#SCoRM exceptions
#Every error the package raises on purpose derives from ScormError so the
#   command line can map it onto an exit status.


class ScormError(Exception):
    """Base class of all SCoRMLibrary errors."""
    exit_code = 3


class InvalidParameterError(ScormError, ValueError):
    """A distribution or model parameter is outside its valid range."""


class InvalidInputError(ScormError, ValueError):
    """Input data violates an operation's precondition."""


class InsufficientDataError(InvalidInputError):
    """Too few observations for the requested estimate."""


class TailUnidentifiableError(InsufficientDataError):
    """No candidate threshold leaves enough exceedances to fit the GPD tail."""


class UnidentifiableError(InvalidInputError):
    """The data carry no information about the requested parameter."""


class SchemaError(InvalidInputError):
    """A CSV file does not match the expected schema.

    Parameters
    ----------
    message : str
        Description of the problem.
    column : str, optional
        Offending column name.
    line : int, optional
        1-based line number in the file (the header is line 1).
    """
    def __init__(self, message, column=None, line=None):
        self.column = column
        self.line = line
        location = []
        if column is not None:
            location.append("column '" + str(column) + "'")
        if line is not None:
            location.append("line " + str(line))
        if location:
            message = message + " (" + ", ".join(location) + ")"
        super().__init__(message)


class ConfigurationError(ScormError, ValueError):
    """Options or simulation configuration cannot be used as given."""
    exit_code = 2


class NumericalError(ScormError, RuntimeError):
    """An optimizer or numerical routine failed to produce a usable result."""
    exit_code = 4
