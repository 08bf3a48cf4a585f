"""Decorators for CLI commands."""
import functools
import logging
import sys
from typing import Any, Callable, TypeVar, cast

from .errors import OptimalWaitError, UsageError

logger = logging.getLogger(__name__)

F = TypeVar('F', bound=Callable[..., Any])

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


def handle_cli_errors(func: F) -> F:
    """
    Decorator for handling errors in CLI commands.

    Turns a command's exceptions into an exit code and a one-line message on
    standard error: usage errors give 1, data and numerical errors give 2.

    Args:
        func: Command method returning None or an exit code

    Returns:
        Wrapped function returning an exit code
    """
    @functools.wraps(func)
    def wrapper(self, *args: Any, **kwargs: Any) -> int:
        command = func.__name__
        try:
            logger.info(f"Executing command: {command}")
            result = func(self, *args, **kwargs)
            logger.info(f"Command {command} finished.")
            return EXIT_OK if result is None else int(result)
        except UsageError as ue:
            logger.error(f"Usage error in {command}: {ue}")
            print(f"usage error: {ue}", file=sys.stderr)
            return EXIT_USAGE
        except OptimalWaitError as de:
            logger.error(f"Data error in {command}: {de}")
            print(f"error: {de}", file=sys.stderr)
            return EXIT_DATA
        except (ValueError, ArithmeticError) as ve:
            logger.error(f"Numerical error in {command}: {ve}")
            print(f"error: {ve}", file=sys.stderr)
            return EXIT_DATA
        except OSError as oe:
            logger.error(f"I/O error in {command}: {oe}")
            print(f"error: {oe}", file=sys.stderr)
            return EXIT_DATA
        except Exception as e:
            logger.exception(f"Unexpected error in {command}: {e}")
            print(f"error: unexpected failure in {command}: {e}", file=sys.stderr)
            return EXIT_DATA

    return cast(F, wrapper)
