"""Input file checks run before a source file reaches the parser."""

from pathlib import Path
from typing import Optional, Tuple

MAX_FILE_SIZE_MB = 1
MAX_FILE_SIZE_BYTES = MAX_FILE_SIZE_MB * 1024 * 1024


class SourceValidationError(Exception):
    """Raised when an input file cannot be analyzed."""
    pass


def validate_source_file(source_path: str | Path) -> Tuple[bool, Optional[str]]:
    """Validate that a path names a readable MiniC source file.

    Args:
        source_path: Path to the source file

    Returns:
        Tuple of (is_valid, error_message)
        - (True, None) if valid
        - (False, error_message) if invalid
    """
    path = Path(source_path)

    if not path.exists():
        return False, f"File not found: {path}"

    if not path.is_file():
        return False, f"Not a regular file: {path}"

    file_size = path.stat().st_size
    if file_size > MAX_FILE_SIZE_BYTES:
        size_mb = file_size / (1024 * 1024)
        return False, f"File too large: {size_mb:.2f}MB (max {MAX_FILE_SIZE_MB}MB)"

    try:
        path.read_bytes().decode("utf-8")
    except PermissionError:
        return False, f"Permission denied: {path}"
    except UnicodeDecodeError as e:
        return False, f"Not valid UTF-8: {path} (byte {e.start})"
    except OSError as e:
        return False, f"Cannot read {path}: {e.strerror}"

    return True, None


def validate_and_raise(source_path: str | Path) -> None:
    """Validate a source file and raise SourceValidationError if invalid.

    Raises:
        SourceValidationError: If validation fails
    """
    is_valid, error = validate_source_file(source_path)
    if not is_valid:
        raise SourceValidationError(error)
