class TreeBranchError(Exception):
    """Base class for every error raised by the solver and training stack."""


class NumericalBreakdown(TreeBranchError):
    """The simplex could not find an acceptable pivot or lost its basis."""


class DimensionMismatch(TreeBranchError, ValueError):
    pass


class TooLarge(TreeBranchError):
    """Brute-force enumeration would exceed the configured cap."""

    def __init__(self, size, cap):
        super().__init__(f"enumeration space {size} exceeds cap {cap}")
        self.size = size
        self.cap = cap


class ParseError(TreeBranchError, ValueError):
    def __init__(self, message, *, path=None, line=None, field=None):
        location = []
        if path is not None:
            location.append(str(path))
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field '{field}'")
        prefix = f"{', '.join(location)}: " if location else ''
        super().__init__(prefix + message)
        self.detail = message
        self.path = path
        self.line = line
        self.field = field


class VersionMismatch(ParseError):
    pass


class InvalidConfig(TreeBranchError, ValueError):
    pass


class InvalidInstance(TreeBranchError, ValueError):
    pass


class MalformedTree(TreeBranchError, ValueError):
    pass


class DepthCapExceeded(TreeBranchError):
    pass


class TrainingAborted(TreeBranchError):
    pass


class PolicyNotFound(TreeBranchError, FileNotFoundError):
    pass
