"""
Exception hierarchy for schrodecay.
Every error carries the process exit code the CLI returns for it.
"""
from typing import Any, Dict, Optional


class SchrodecayError(Exception):
    """Base class; exit_code is what the command line returns"""

    exit_code = 5

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.details: Dict[str, Any] = details or {}


class ParseError(SchrodecayError):
    """Malformed symbol file or document"""

    exit_code = 1

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        where = ""
        if path:
            where = f"{path}"
        if line is not None:
            where = f"{where}:{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message, {"line": line, "path": path})
        self.line = line
        self.path = path


class InputError(SchrodecayError):
    """Invalid parameter: dimension mismatch, t = 0, out-of-range option"""

    exit_code = 2


class ClassificationError(SchrodecayError):
    """Symbol fails the degeneracy classification (no L, mixed Hessian signs)"""

    exit_code = 3

    def __init__(self, message: str, witness: Optional[Dict[str, Any]] = None):
        super().__init__(message, {"witness": witness})
        self.witness = witness


class MissingDependencyError(SchrodecayError):
    """An upstream document the command needs does not exist"""

    exit_code = 4

    def __init__(self, path: str, reason: str = "missing upstream document"):
        super().__init__(f"{reason}: {path}", {"path": path})
        self.path = path


class NumericalError(SchrodecayError):
    """Numerical failure (non-finite values, refinement budget exhausted)"""

    exit_code = 5
