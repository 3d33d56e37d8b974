"""Diagnostics and error types shared by the frontend and the CLI."""

from __future__ import annotations

from dataclasses import dataclass


class ParseError(Exception):
    """Unrecoverable syntax error, carrying the source position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class TransformError(Exception):
    """Raised when a tree that fails validation is handed to the transformer."""


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    line: int
    col: int

    def format(self, filename: str = "<input>") -> str:
        return f"{filename}:{self.line}:{self.col}: {self.severity}: {self.message}"


def has_errors(diagnostics) -> bool:
    return any(d.severity == "error" for d in diagnostics)
