"""Exception hierarchy shared by every pipeline stage."""


class PcrcaError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class GraphError(PcrcaError, ValueError):
    """Structural problem with a causal graph."""

    exit_code = 2


class CycleDetected(GraphError):
    def __init__(self, cycle):
        self.cycle = tuple(cycle)
        super().__init__("cycle detected: " + " -> ".join(self.cycle))


class MultipleExogenousParents(GraphError):
    def __init__(self, node, parents):
        self.node = node
        self.parents = tuple(parents)
        super().__init__(
            f"endogenous node {node!r} has {len(self.parents)} exogenous parents "
            f"({', '.join(self.parents)}); the model must be quasi-Markovian"
        )


class ExogenousHasParent(GraphError):
    def __init__(self, node, parent):
        self.node = node
        self.parent = parent
        super().__init__(f"exogenous node {node!r} has parent {parent!r}")


class UnknownVariable(PcrcaError, KeyError):
    exit_code = 2

    def __init__(self, name, where="graph"):
        self.name = name
        super().__init__(f"unknown variable {name!r} in {where}")

    def __str__(self):
        return self.args[0]


class DistributionError(PcrcaError, ValueError):
    exit_code = 2


class EmptyDataset(DistributionError):
    def __init__(self):
        super().__init__("dataset has no rows")


class ZeroConditioningEvent(DistributionError):
    def __init__(self, given, hint=True):
        self.given = dict(given)
        text = ", ".join(f"{k}={v}" for k, v in self.given.items()) or "<empty>"
        msg = f"conditioning event ({text}) has zero probability"
        if hint:
            msg += "; consider additive smoothing (--smoothing) when estimating from data"
        super().__init__(msg)


class IndexOutOfRange(PcrcaError, IndexError):
    exit_code = 2


class MissingParentValue(PcrcaError, KeyError):
    exit_code = 2

    def __str__(self):
        return self.args[0]


class TargetNotDescendant(PcrcaError, ValueError):
    exit_code = 2

    def __init__(self, cause, effect):
        self.cause = cause
        self.effect = effect
        super().__init__(f"{effect!r} is not a descendant of {cause!r}")


class InfeasiblePolytope(PcrcaError, ValueError):
    exit_code = 3

    def __init__(self, exo):
        self.exo = exo
        super().__init__(
            f"constraints for exogenous {exo!r} are infeasible: the input "
            "distribution is incompatible with the model"
        )


class DegreeTooHigh(PcrcaError, RuntimeError):
    exit_code = 3


class FileFormatError(PcrcaError, ValueError):
    """Parse error carrying a 1-based source location."""

    exit_code = 2

    def __init__(self, message, line=None, column=None, source=None):
        self.message = message
        self.line = line
        self.column = column
        self.source = source
        loc = []
        if source:
            loc.append(str(source))
        if line is not None:
            loc.append(str(line))
            if column is not None:
                loc.append(str(column))
        prefix = ":".join(loc)
        super().__init__(f"{prefix}: {message}" if prefix else message)
