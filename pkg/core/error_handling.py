"""
Error handling for command-line runs
Catches and classifies every exception the same way and maps it to an exit code
"""
import logging
import uuid
from typing import Any, Dict, Optional

from core.exceptions import QuantDimError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_VERIFY_FAILURE = 2
EXIT_RESOURCE_CAP = 3


class ErrorHandler:
    """
    Turns exceptions into logged error records and exit codes
    """

    def handle(self, exception: BaseException, context: Optional[Dict[str, Any]] = None) -> int:
        """
        Log the exception with a unique error id and return its exit code
        """
        error_id = str(uuid.uuid4())
        context = context or {}
        where = ' | '.join(f"{key}: {value}" for key, value in context.items())

        if isinstance(exception, QuantDimError):
            record = self.create_error_record(
                error_id=error_id,
                message=exception.message,
                error_type=exception.error_type,
                exit_code=exception.exit_code,
                details=exception.details,
            )
            logger.error(
                f"Error ID: {error_id} | {where} | "
                f"{exception.error_type}: {exception.message}"
            )
            for key, value in exception.details.items():
                logger.error(f"Error ID: {error_id} | {key}: {value}")
            return record['exit_code']

        # Generic handler for unexpected exceptions
        logger.error(
            f"Error ID: {error_id} | {where} | Unexpected exception: {exception!s}",
            exc_info=exception,
        )
        record = self.create_error_record(
            error_id=error_id,
            message='An unexpected error occurred',
            error_type='INTERNAL_ERROR',
            exit_code=EXIT_CONFIG_ERROR,
        )
        return record['exit_code']

    def create_error_record(
        self,
        error_id: str,
        message: str,
        error_type: str,
        exit_code: int,
        details: Optional[Dict[str, Any]] = None,
    ) -> Dict[str, Any]:
        """
        Create a standardized error record
        """
        error_data = {
            'id': error_id,
            'type': error_type,
            'message': message,
            'exit_code': exit_code,
        }
        if details:
            error_data['details'] = details
        return error_data
