"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: usage problems exit 2, resource-guard
refusals exit 3, and internal invariant violations exit 4.
"""


class UsageError(Exception):
    """Malformed input: bad file, bad formula, bad flag combination."""

    exit_code = 2


class ParseError(UsageError):
    """Syntax error in a formula, with source position."""

    def __init__(self, message, line, column):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class ResourceLimit(Exception):
    """A guard refused to run an unboundedly expensive computation."""

    exit_code = 3


class InternalError(Exception):
    """An invariant the code relies on was violated."""

    exit_code = 4
