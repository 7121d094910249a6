"""Exception hierarchy shared by all dalab modules."""


class DalabError(Exception):
    """Base class for every error raised by dalab."""


class InvalidInputError(DalabError, ValueError):
    pass


class PreconditionError(DalabError, ValueError):
    """A documented precondition (e.g. disjoint component spans) fails."""


class DecompositionNotUniqueError(DalabError):
    pass


class ImageEscapesTargetError(DalabError):
    """The image of a source graded piece leaves the target graded piece."""


class AngleDegeneracyError(DalabError):
    pass


class NotInvertibleError(DalabError):
    pass


class InsufficientDegreeRangeError(DalabError):
    pass


class UndefinedFitError(DalabError):
    pass


class ScaleGuardError(DalabError):
    pass
