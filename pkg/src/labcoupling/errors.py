"""Exception types used throughout the library."""


class InputError(ValueError):
    """Malformed or inconsistent input data (shapes, invariants, references)."""


class CoverageError(RuntimeError):
    """A grid node is covered by no bump support when building a partition of unity."""


class PreconditionError(RuntimeError):
    """An operation was invoked on data that fails its documented precondition."""


class ComputationError(ArithmeticError):
    """A numerical post-condition failed (e.g. an exponential left the automorphism group)."""
