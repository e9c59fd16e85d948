"""Exception types raised across the package."""


class InvalidArgument(ValueError):
    """A parameter is outside its admissible range."""


class UnsupportedDegree(ValueError):
    """Operator word or monomial of degree above 4."""


class DegenerateState(ValueError):
    """State has no well-defined mean spin direction."""


class InsufficientMoments(KeyError):
    """A moment table lacks an entry that the computation needs."""


class InvalidSpec(ValueError):
    """Witness coefficients are non-finite or identically zero."""
