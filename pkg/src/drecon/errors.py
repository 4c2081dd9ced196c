"""Exception types shared across the package."""


class DreconError(Exception):
    """Base class for all errors raised by this package."""


class NewickError(DreconError):
    """Malformed Newick input; carries the character offset of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.message = message
        self.offset = offset

    def __reduce__(self):
        # keep the two-argument constructor picklable across worker processes
        return (type(self), (self.message, self.offset))


class MappingError(DreconError):
    """Leaf mapping is partial, has dangling targets, or a file row is bad."""


class BijectionError(MappingError):
    """A one-to-one protein-gene mapping was required but not given."""


class CapError(DreconError):
    """An enumeration or search exceeded its configured size cap."""


class ConsistencyError(DreconError):
    """Inputs are mutually inconsistent (cannot come from a single history)."""


class FamilyError(ConsistencyError):
    """A subtree family is not consistent with any single protein tree."""


class SimulationError(DreconError):
    """A generator exhausted its retry budget without a usable draw."""
