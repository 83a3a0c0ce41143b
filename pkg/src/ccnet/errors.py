"""Exception hierarchy.

Every error raised for bad user input derives from :class:`ValidationError`;
the CLI maps those to exit status 2 and anything else to 1.
"""


class ValidationError(ValueError):
    """Base class for all input/contract violations."""


# cc-core
class OrderViolation(ValidationError):
    pass


class DuplicateCell(ValidationError):
    pass


class EmptyCell(ValidationError):
    pass


class UnknownCell(ValidationError, KeyError):
    pass


# neighborhoods
class RankOutOfRange(ValidationError):
    pass


class NotOrientable(ValidationError):
    pass


# lifting
class NotAPath(ValidationError):
    pass


class TooShort(ValidationError):
    pass


class ChordPresent(ValidationError):
    pass


class NotACycle(ValidationError):
    pass


class NotTwoDimensional(ValidationError):
    pass


class StrictContainmentViolation(ValidationError):
    pass


class BadWindow(ValidationError):
    pass


# cochain-ops
class ShapeMismatch(ValidationError):
    pass


class NotAPartition(ValidationError):
    pass


class EmptyAugmentation(ValidationError):
    pass


# nn-engine
class DegenerateRow(ValidationError):
    pass


class CycleDetected(ValidationError):
    pass


class UnknownSelector(ValidationError):
    pass


class MissingInput(ValidationError):
    pass


class StaleTape(RuntimeError):
    """Backward called on a tape that was consumed or whose parameters moved."""


# mog-pooling
class BadParams(ValidationError):
    pass


# cli-io
class ParseError(ValidationError):
    pass


class SelfLoop(ValidationError):
    pass


class NonTriangleFace(ValidationError):
    pass


class DegenerateFace(ValidationError):
    pass


class NonManifoldEdge(ValidationError):
    pass


class BadK(ValidationError):
    pass
