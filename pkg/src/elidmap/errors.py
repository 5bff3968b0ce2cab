"""Typed errors for the whole pipeline.

Every failure that can reach a caller (CLI, HTTP service, or library user)
is an ``ElidError`` subclass.  The class name doubles as the stable,
machine-readable error name printed on stderr and returned in HTTP bodies,
so renaming a class here is a breaking change.
"""


class ElidError(Exception):
    """Base class for all typed errors raised by this package."""

    @property
    def name(self) -> str:
        return type(self).__name__


# --- file parsing / IO --------------------------------------------------

class FileNotFound(ElidError):
    pass


class IoError(ElidError):
    pass


class MalformedHeader(ElidError):
    pass


class MalformedRow(ElidError):
    pass


class RingIndexOutOfRange(ElidError):
    pass


class EmptyLog(ElidError):
    pass


class DanglingIndex(ElidError):
    pass


class MalformedScene(ElidError):
    pass


class MalformedConfig(ElidError):
    pass


class MalformedSession(ElidError):
    pass


class MalformedGrid(ElidError):
    pass


# --- geometry -----------------------------------------------------------

class NonOrthonormalRotation(ElidError):
    pass


# --- IMU calibration ----------------------------------------------------

class EmptyWindow(ElidError):
    pass


class DegenerateCalibration(ElidError):
    pass


# --- rotation estimation ------------------------------------------------

class NonGravitationalReading(ElidError):
    pass


class DegenerateOrientation(ElidError):
    pass


class TooFewPoints(ElidError):
    pass


class NoConsensus(ElidError):
    pass


class VerticalLine(ElidError):
    pass


class EmptyList(ElidError):
    pass


class UndefinedMean(ElidError):
    pass


class TooFewRings(ElidError):
    pass


class NonConsecutiveIndices(ElidError):
    pass


class NotMiddleRing(ElidError):
    pass


class MixedRings(ElidError):
    pass


# --- translation estimation ----------------------------------------------

class EdgeRing(ElidError):
    pass


class SparseRing(ElidError):
    pass


class DegenerateConfiguration(ElidError):
    pass


class DuplicateAxis(ElidError):
    pass


# --- merge pipeline -------------------------------------------------------

class IncompleteSelections(ElidError):
    pass


class ArityMismatch(ElidError):
    pass


class IndexOutOfRange(ElidError):
    pass


# --- voxel planner --------------------------------------------------------

class EmptyMap(ElidError):
    pass


class DegenerateBand(ElidError):
    pass


class StartBlocked(ElidError):
    pass


class GoalBlocked(ElidError):
    pass


class NoPath(ElidError):
    pass
