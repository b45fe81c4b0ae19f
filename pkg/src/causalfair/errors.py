"""Exception hierarchy shared by every module."""


class CausalFairError(Exception):
    """Base class for all library errors."""


class CycleError(CausalFairError, ValueError):
    pass


class UnknownNodeError(CausalFairError, KeyError):
    def __str__(self):
        return f"unknown node: {self.args[0]!r}"


class NotAdjacentError(CausalFairError, ValueError):
    pass


class TooLargeError(CausalFairError, ValueError):
    pass


class UnknownVariableError(CausalFairError, KeyError):
    def __str__(self):
        return f"unknown variable: {self.args[0]!r}"


class ZeroProbabilityEventError(CausalFairError, ValueError):
    pass


class MissingRoleError(CausalFairError, KeyError):
    def __str__(self):
        return f"missing role variable: {self.args[0]!r}"


class SchemaError(CausalFairError, ValueError):
    """Malformed input file (CSV, edge list, SCM or policy JSON)."""
