"""MiniCpp separation-logic verifier."""

from ._core import (
    Diagnostic,
    FileReport,
    Obligation,
    exit_code,
    format_assertion,
    render_structured,
    verify_file,
    verify_source,
)

__all__ = [
    "Diagnostic",
    "FileReport",
    "Obligation",
    "exit_code",
    "format_assertion",
    "render_structured",
    "verify_file",
    "verify_source",
]
