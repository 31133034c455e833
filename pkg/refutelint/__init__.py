"""Path-sensitive static analysis of MiniC with SMT-based refutation of false positives."""

from refutelint.version import __version__, __build__
