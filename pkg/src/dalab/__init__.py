"""Graded operator-theory laboratory for the Drury-Arveson space.

Every operator here is graded, so it is handled through its finite blocks
between the homogeneous pieces H_n of the polynomial ring.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    AngleDegeneracyError,
    DalabError,
    DecompositionNotUniqueError,
    ImageEscapesTargetError,
    InsufficientDegreeRangeError,
    InvalidInputError,
    NotInvertibleError,
    PreconditionError,
    ScaleGuardError,
    UndefinedFitError,
)
