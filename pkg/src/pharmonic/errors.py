"""Exception types.

Every error carries a short machine-readable ``code`` (e.g. ``"origin-not-interior"``)
and the CLI maps the class to a process exit code.
"""


class PharmonicError(Exception):
    exit_code = 1

    def __init__(self, code: str, message: str = ""):
        self.code = code
        super().__init__(f"{code}: {message}" if message else code)


class ValidationError(PharmonicError, ValueError):
    """Bad input: parameters out of domain, invalid bodies or targets."""

    exit_code = 2


class ConvergenceError(PharmonicError, RuntimeError):
    """An iteration hit its cap; ``info`` keeps whatever diagnostics were available."""

    exit_code = 3

    def __init__(self, code: str, message: str = "", info=None):
        super().__init__(code, message)
        self.info = info


class InputOutputError(PharmonicError, OSError):
    exit_code = 4
