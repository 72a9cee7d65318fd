"""Exception types raised by posort."""


class PosortError(Exception):
    """Base class for all library errors."""


class CycleError(PosortError, ValueError):
    """A set of relations whose transitive closure is not antisymmetric."""


class TooLargeError(PosortError, ValueError):
    """Input exceeds the size guard of an exponential-time routine."""


class NotAnExtensionError(PosortError, ValueError):
    """A permutation that is not a linear extension of the poset."""


class InvalidCoverError(PosortError, ValueError):
    """Two sequences that do not form a two-chain cover of a poset."""


class StructureError(PosortError):
    """The tight-edge graph has loose components or inlays."""


class InternalConsistencyError(PosortError, AssertionError):
    """An invariant the algorithms rely on was found violated."""
