from refutelint.version import __version__, get_version_string, runtime_versions


def test_version_string_names_runtime_packages():
    text = get_version_string()
    assert text.startswith(f"refutelint v{__version__} (build ")
    assert set(runtime_versions()) == {"pycparser", "numpy"}
    assert "pycparser " in text and "numpy " in text
