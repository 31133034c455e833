"""Retry utilities with exponential backoff for spawning solver processes."""

import errno
import logging
import time
from functools import wraps
from typing import Any, Callable, Tuple, Type

logger = logging.getLogger(__name__)

# errno values that mean "try again later" when starting a process.
TRANSIENT_ERRNOS = (errno.EAGAIN, errno.EMFILE, errno.ENFILE)


class RetryError(Exception):
    """Raised when all retry attempts are exhausted."""
    pass


def is_transient(error: BaseException) -> bool:
    """True for spawn failures caused by temporary resource exhaustion."""
    if isinstance(error, BlockingIOError):
        return True
    return isinstance(error, OSError) and error.errno in TRANSIENT_ERRNOS


def exponential_backoff_retry(
    max_retries: int = 3,
    initial_delay: float = 0.05,
    max_delay: float = 1.0,
    backoff_factor: float = 2.0,
    retryable_exceptions: Tuple[Type[Exception], ...] = (OSError,),
    should_retry: Callable[[BaseException], bool] = is_transient,
):
    """Decorator for retrying functions with exponential backoff.

    Args:
        max_retries: Maximum number of retry attempts
        initial_delay: Initial delay in seconds
        max_delay: Maximum delay between retries
        backoff_factor: Multiplier for delay after each retry
        retryable_exceptions: Tuple of exception types to consider
        should_retry: Predicate deciding whether a caught exception is worth retrying

    Returns:
        Decorated function with retry logic
    """
    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args, **kwargs) -> Any:
            delay = initial_delay

            for attempt in range(max_retries + 1):
                try:
                    return func(*args, **kwargs)

                except retryable_exceptions as e:
                    if not should_retry(e):
                        raise

                    if attempt >= max_retries:
                        logger.error(f"{func.__name__}: All {max_retries} retries exhausted")
                        raise RetryError(f"Failed after {max_retries} retries: {str(e)}") from e

                    actual_delay = min(delay, max_delay)
                    logger.warning(
                        f"{func.__name__}: Attempt {attempt + 1}/{max_retries} failed. "
                        f"Retrying in {actual_delay:.2f}s... Error: {str(e)}"
                    )
                    time.sleep(actual_delay)
                    delay *= backoff_factor

        return wrapper
    return decorator
