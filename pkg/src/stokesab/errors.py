"""Exception types shared across the package.

Each class carries ``exit_code``, which the command line front end maps
straight onto the process exit status.
"""

from __future__ import annotations


class StokesabError(Exception):
    exit_code = 4


# input / schema problems (exit 1)

class SchemaViolation(StokesabError):
    exit_code = 1

    def __init__(self, message: str, location: str = "$"):
        super().__init__(f"{location}: {message}")
        self.location = location


class ValidationFailure(StokesabError):
    exit_code = 1


# genericity (exit 2)

class NonGeneric(StokesabError):
    exit_code = 2


class NonGenericResidue(NonGeneric):
    pass


class OnHypersurface(NonGeneric):
    pass


class NonGenericDifferential(NonGeneric):
    pass


# foliation classification (exit 3)

class SaddleError(StokesabError):
    exit_code = 3


class HasSaddle(SaddleError):
    pass


class Inconclusive(SaddleError):
    pass


# numerics (exit 4)

class BranchAmbiguity(StokesabError):
    exit_code = 4


class StepUnderflow(StokesabError):
    exit_code = 4


class PathThroughSingularity(StokesabError):
    exit_code = 4


# graph assembly

class NonQuadrilateralFace(StokesabError):
    exit_code = 4


class CountMismatch(StokesabError):
    exit_code = 4


class InconsistentCover(StokesabError):
    exit_code = 4


class DisconnectedCover(StokesabError):
    exit_code = 4


class InvalidPath(StokesabError, ValueError):
    exit_code = 1


# abelian side (exit 5)

class InconsistentConstraints(StokesabError):
    exit_code = 5


# nonabelian side

class FrameMismatch(StokesabError):
    exit_code = 4


class BranchMonodromyNontrivial(StokesabError):
    exit_code = 6


class TransversalityFailure(StokesabError):
    exit_code = 7


class NormalizationFailure(StokesabError):
    exit_code = 7


class DegenerateMonodromy(StokesabError):
    exit_code = 8
