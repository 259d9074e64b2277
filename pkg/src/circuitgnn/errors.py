"""Exception hierarchy shared by every stage of the pipeline."""


class CircuitGnnError(Exception):
    """Base class for all errors raised by this package."""


class InputError(CircuitGnnError):
    """Bad user input (netlists, datasets, configs). CLI exit code 1."""


class InvariantError(CircuitGnnError):
    """An internal invariant was violated. CLI exit code 2."""


# netlist

class NetlistSyntaxError(InputError):
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class DuplicateName(NetlistSyntaxError):
    pass


class UnknownKindPrefix(NetlistSyntaxError):
    pass


# bondgraph

class InvalidCircuit(InputError):
    def __init__(self, violations):
        self.violations = list(violations)
        msg = "; ".join(f"{v.code}: {v.message}" for v in self.violations)
        super().__init__(msg or "invalid circuit")


class ModeRequiresSwitch(InputError):
    pass


class DutyOverflow(InputError):
    pass


class NoSuchInductor(InputError):
    pass


# featurize

class DivisionByZero(InputError, ZeroDivisionError):
    pass


class EmptyDataset(InputError):
    pass


class MissingCategoryInBase(InputError):
    pass


# datagen

class DegenerateSplit(InputError):
    pass


class SchemaVersionMismatch(InputError):
    pass


class DatasetIOError(InputError, OSError):
    pass


# gcn

class DimensionMismatch(InputError, ValueError):
    pass
