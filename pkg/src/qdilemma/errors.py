class QDilemmaError(Exception):
    pass


class InvalidParameter(QDilemmaError, ValueError):
    pass


class NotHermitian(QDilemmaError, ValueError):
    pass


class NotUnitary(QDilemmaError, ValueError):
    pass


class ValidationFailed(QDilemmaError):
    pass


class NumericalInconsistency(QDilemmaError):
    pass


class NotMonotone(QDilemmaError):
    """The NE indicator changes sign more than once along the scanned axis."""
