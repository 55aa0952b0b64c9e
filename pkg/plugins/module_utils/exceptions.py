# -*- coding: utf-8 -*-
"""
Error hierarchy of the gaitlab.msgcn collection.

Every failure raised by the library derives from :class:`MsgcnError`. Each
branch carries the process exit code the ``msgcn`` command returns for it,
and ``to_dict`` renders the error for Ansible results and CLI output.
"""

from __future__ import absolute_import, division, print_function

from typing import Any, Dict, Optional

from ansible.module_utils._text import to_native

__metaclass__ = type

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_LEAKAGE = 4

_CONTEXT_TYPES = (str, int, float, bool, list, type(None))


class MsgcnError(Exception):
    """
    Root of the collection's errors.

    Args:
        message: Human readable description
        exception: Underlying error being wrapped, if any
        **kwargs: Context for the failure (line, path, parameter, trace...)
    """

    exit_code = EXIT_FAILURE

    def __init__(
        self,
        message: Optional[str] = None,
        exception: Optional[Exception] = None,
        **kwargs: Any,
    ) -> None:
        text = message or (str(exception) if exception else None)
        super().__init__(*((text,) if text else ()))
        self.message = message
        self.exception = exception
        self.kwargs: Dict[str, Any] = dict(kwargs)

    def __str__(self) -> str:
        if self.message and self.exception:
            return f"{self.message}: {to_native(self.exception)}"
        return super().__str__()

    def to_dict(self) -> Dict[str, Any]:
        """
        Structured form of the error.

        Context values that are not JSON scalars or lists are left out.
        """
        data: Dict[str, Any] = {
            "error_type": type(self).__name__,
            "message": self.message or str(self),
            "exit_code": self.exit_code,
        }
        if self.exception is not None:
            data["original_exception"] = {
                "type": type(self.exception).__name__,
                "message": str(self.exception),
            }
        context = {k: v for k, v in self.kwargs.items() if isinstance(v, _CONTEXT_TYPES)}
        if context:
            data["context"] = context
        return data


class MsgcnValidationError(MsgcnError):
    """
    Exception raised when inputs, schemas or configuration fail validation.
    """

    exit_code = EXIT_VALIDATION


class MsgcnNumericalError(MsgcnError):
    """
    Exception raised when a computation produces non-finite or degenerate values.
    """

    exit_code = EXIT_NUMERICAL


class MsgcnLeakageError(MsgcnError):
    """
    Exception raised when a cross-validation fold would train on evaluation data.
    """

    exit_code = EXIT_LEAKAGE


class MsgcnOperationError(MsgcnError):
    """
    Exception raised when an operation fails for reasons other than bad input,
    such as I/O failures or misuse of the gradient tape.
    """


class DimensionError(MsgcnValidationError):
    """Array extents disagree; the message names the offending axes."""


class ConfigurationError(MsgcnValidationError):
    """A configuration value is outside the supported range or combination."""


class TrialParseError(MsgcnValidationError):
    """A trial or prediction file violates its schema.

    The offending line number, when known, is stored in ``kwargs["line"]``.
    """


class UndefinedCorrelationError(MsgcnValidationError):
    """Correlation or regression requested on data without variance."""


class SynthesisError(MsgcnValidationError):
    """Requested synthetic episodes cannot be packed into the trial."""


class CheckpointFormatError(MsgcnValidationError):
    """A checkpoint is truncated, has a bad magic or an unsupported version."""


class DegenerateStatisticsError(MsgcnNumericalError):
    """Batch statistics requested over fewer than two valid samples."""


class NonFiniteGradientError(MsgcnNumericalError):
    """A gradient contains NaN or Inf; ``kwargs["parameter"]`` names it."""


class TrainingDivergedError(MsgcnNumericalError):
    """The training loss became non-finite.

    ``kwargs["trace"]`` holds the per-epoch trace recorded before divergence.
    """


class TapeUsageError(MsgcnOperationError):
    """The gradient tape was used out of order (non-scalar root, replay)."""
