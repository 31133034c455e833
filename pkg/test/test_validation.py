import pytest

from refutelint.validation import (
    MAX_FILE_SIZE_BYTES, SourceValidationError, validate_and_raise, validate_source_file,
)


def test_valid_file(tmp_path):
    path = tmp_path / "ok.c"
    path.write_text("int f(void) { return 0; }\n")
    assert validate_source_file(path) == (True, None)
    validate_and_raise(str(path))


def test_missing_file(tmp_path):
    ok, message = validate_source_file(tmp_path / "missing.c")
    assert not ok
    assert message.startswith("File not found:")


def test_directory(tmp_path):
    ok, message = validate_source_file(tmp_path)
    assert not ok
    assert message.startswith("Not a regular file:")


def test_too_large(tmp_path):
    path = tmp_path / "big.c"
    path.write_bytes(b" " * (MAX_FILE_SIZE_BYTES + 1))
    ok, message = validate_source_file(path)
    assert not ok
    assert message.startswith("File too large:")


def test_not_utf8(tmp_path):
    path = tmp_path / "latin1.c"
    path.write_bytes(b"/* caf\xe9 */ int f(void) { return 0; }\n")
    ok, message = validate_source_file(path)
    assert not ok
    assert message.startswith("Not valid UTF-8:")
    assert "byte 6" in message


def test_validate_and_raise(tmp_path):
    with pytest.raises(SourceValidationError, match="File not found"):
        validate_and_raise(tmp_path / "missing.c")
