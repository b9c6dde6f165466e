"""
Exception hierarchy shared by every quantdim package

Each exception carries an error_type label (used in logs and reports) and the
process exit code the command line maps it to.
"""
from typing import Any, Dict, Optional


class QuantDimError(Exception):
    """Base class for all expected failures"""

    error_type = 'QUANTDIM_ERROR'
    exit_code = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {
            'error_type': self.error_type,
            'message': self.message,
            'details': self.details,
        }


class ValidationError(QuantDimError):
    """Invalid argument or domain object"""

    error_type = 'VALIDATION_ERROR'


class ConfigurationError(ValidationError):
    """Experiment config could not be parsed or validated"""

    error_type = 'CONFIG_ERROR'


class BrokenSystemError(QuantDimError):
    """System definition contradicts the cookie-cutter axioms"""

    error_type = 'SYSTEM_ERROR'


class InsufficientDataError(QuantDimError):
    """Not enough usable samples for a fit or a finite-difference stencil"""

    error_type = 'INSUFFICIENT_DATA_ERROR'


class SaturatedCurveError(InsufficientDataError):
    """An error curve has V = 0 inside the requested fit range"""

    error_type = 'SATURATED_CURVE_ERROR'


class EnumerationCapError(QuantDimError):
    """Requested level or word length exceeds the configured caps"""

    error_type = 'RESOURCE_CAP_ERROR'
    exit_code = 3


class NumericalOverflowError(QuantDimError):
    """A sum left the floating range; rescale t or lower k"""

    error_type = 'OVERFLOW_ERROR'
    exit_code = 3


class VerificationFailure(QuantDimError):
    """One or more checks of a verification suite failed"""

    error_type = 'VERIFICATION_ERROR'
    exit_code = 2
