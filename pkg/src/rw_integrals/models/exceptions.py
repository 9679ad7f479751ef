"""Exception classes for the Riemann-Wirtinger integral toolkit."""


class RWIntegralError(Exception):
    """Base exception class for rw_integrals errors."""

    def __init__(self, message: str, error_code: int = -32000, details: dict = None):
        super().__init__(message)
        self.message = message
        self.error_code = error_code
        self.details = details or {}

    def to_dict(self) -> dict:
        """Convert exception to dictionary for reports and CLI error output."""
        return {
            "code": self.error_code,
            "message": self.message,
            "data": {
                "type": self.__class__.__name__,
                "details": self.details
            }
        }


class ValidationError(RWIntegralError):
    """Exception raised for data validation errors."""

    def __init__(self, message: str, field: str = None):
        super().__init__(message, error_code=-32602)
        if field:
            self.details["field"] = field


class ParseError(RWIntegralError):
    """Exception raised when a problem or settings file is not valid JSON."""

    def __init__(self, path: str, line: int, column: int, message: str = None):
        if message is None:
            message = f"Malformed JSON in '{path}' at line {line}, column {column}"
        super().__init__(message, error_code=-32700)
        self.details["path"] = path
        self.details["line"] = line
        self.details["column"] = column


class NonConvergence(RWIntegralError):
    """Exception raised when a series hits its term cap before the tolerance."""

    def __init__(self, function: str, terms: int, argument: complex = None):
        message = f"{function} did not converge within {terms} terms"
        super().__init__(message, error_code=-33001)
        self.details["function"] = function
        self.details["terms"] = terms
        if argument is not None:
            self.details["argument"] = [float(argument.real), float(argument.imag)]


class NearSingular(RWIntegralError):
    """Exception raised when an argument sits too close to a singular locus."""

    def __init__(self, term: str, argument: complex = None, distance: float = None):
        message = f"Near-singular evaluation of {term}"
        if distance is not None:
            message += f" (distance {distance:.3e} to the lattice)"
        super().__init__(message, error_code=-33002)
        self.details["term"] = term
        if argument is not None:
            self.details["argument"] = [float(argument.real), float(argument.imag)]
        if distance is not None:
            self.details["distance"] = float(distance)


class BranchJump(RWIntegralError):
    """Exception raised when a tracked logarithm turns too far in one step."""

    def __init__(self, factor: str, step: int, angle: float):
        message = f"Branch jump in factor '{factor}' at step {step} (angle {angle:.3f} rad)"
        super().__init__(message, error_code=-33003)
        self.details["factor"] = factor
        self.details["step"] = step
        self.details["angle"] = float(angle)


class GeometryError(RWIntegralError):
    """Exception raised for contours or cycles that violate their placement rules."""

    def __init__(self, reason: str):
        super().__init__(f"Invalid cycle geometry: {reason}", error_code=-33004)
        self.details["reason"] = reason


class QuadratureFailure(RWIntegralError):
    """Exception raised when refinement runs out before the tolerance is met."""

    def __init__(self, level: int, estimate: float, tolerance: float):
        message = (
            f"Quadrature did not reach tolerance {tolerance:.1e} "
            f"(estimate {estimate:.3e} after {level} refinements)"
        )
        super().__init__(message, error_code=-33005)
        self.details["level"] = level
        self.details["estimate"] = float(estimate)
        self.details["tolerance"] = float(tolerance)


class InvalidParameterError(RWIntegralError):
    """Exception raised for invalid command parameters."""

    def __init__(self, parameter: str, message: str = None):
        if message is None:
            message = f"Invalid parameter: {parameter}"
        super().__init__(message, error_code=-32602)
        self.details["parameter"] = parameter


class CommandNotFoundError(RWIntegralError):
    """Exception raised when a requested command is not registered."""

    def __init__(self, command: str, message: str = None):
        if message is None:
            message = f"Command '{command}' not found"
        super().__init__(message, error_code=-32601)
        self.details["command"] = command
