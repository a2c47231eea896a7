"""Exception types shared across the package."""


class QDepthError(Exception):
    """Base class for all package errors."""


class WidthMismatch(QDepthError):
    """An input or output bit string does not have the declared width."""


class ParameterError(QDepthError):
    """A construction parameter is out of the supported range."""


class CapExceeded(QDepthError):
    """A brute-force or materialization step would exceed its configured cap."""


class QubitClash(QDepthError):
    """Two gates in one layer (or one parallel oracle round) touch the same qubit."""


class BudgetExceeded(QDepthError):
    """Executing the next operation would push quantum depth past the budget."""


class IllegalQuantumQuery(QDepthError):
    """A classical part attempted non-classical (superposition) oracle access."""


class SegmentOverflow(QDepthError):
    """A hybrid run attempted more quantum segments than the budget allows."""


class MalformedProof(QDepthError):
    """A serialized proof does not parse into the expected solution shape."""
