"""Version information for refutelint."""

from importlib import metadata

__version__ = "0.1.0"
__build__ = 1792195200  # Unix timestamp: seconds since epoch

# Third-party packages whose behaviour shows up in analysis results.
_RUNTIME_PACKAGES = ("pycparser", "numpy")


def runtime_versions() -> dict:
    """Installed versions of the parser and oracle dependencies."""
    versions = {}
    for package in _RUNTIME_PACKAGES:
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = "missing"
    return versions


def get_version_string() -> str:
    """Version line logged at the start of a run."""
    deps = ", ".join(f"{name} {version}" for name, version in runtime_versions().items())
    return f"refutelint v{__version__} (build {__build__}; {deps})"
