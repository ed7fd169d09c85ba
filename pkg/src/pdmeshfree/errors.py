"""Exception types raised by the solver stack."""


class PDError(Exception):
    """Base class for solver-specific failures."""


class DegenerateNeighborhoodError(PDError):
    """A node's family cannot support the requested operator order."""

    def __init__(self, node, message):
        self.node = int(node) if node is not None else None
        super().__init__(f"node {self.node}: {message}")


class UnisolvencyError(DegenerateNeighborhoodError):
    """Too few neighbors for polynomial unisolvency."""

    def __init__(self, node, count, required):
        self.count = count
        self.required = required
        super().__init__(node, f"{count} neighbors, at least {required} required for unisolvency")


class AssemblyError(PDError):
    pass


class SolverError(PDError):
    pass


class PointCloudParseError(ValueError):
    def __init__(self, lineno, message):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


class ValidationError(ValueError):
    pass
