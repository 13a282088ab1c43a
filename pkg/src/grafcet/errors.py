"""Exception hierarchy shared across the package."""

from __future__ import annotations


class GrafcetError(Exception):
    """Base class for all domain errors raised by this package."""


class ChartInvalidError(GrafcetError):
    """A chart failed structural validation.

    Carries the list of ValidationIssue records that describe why.
    """

    def __init__(self, issues):
        self.issues = list(issues)
        lines = "; ".join(f"{i.code} at {i.location}" for i in self.issues)
        super().__init__(f"invalid chart: {lines}")


class UnknownSignalError(GrafcetError):
    """A receptivity or io image referenced a signal the chart does not declare."""


class NotFireableError(GrafcetError):
    """fire_set was handed a transition whose upstream steps are not all active."""


class UnstableChartError(GrafcetError):
    """The micro-evolution loop did not reach a stable situation within the cap.

    events holds the partial ScanEvents gathered before the cap was hit so the
    failing trajectory stays observable; scan_index is the scan that failed.
    """

    def __init__(self, message: str, *, scan_index: int, events=None):
        super().__init__(message)
        self.scan_index = scan_index
        self.events = events


class StoredActionConflictError(GrafcetError):
    """One scan tried to both set and reset the same stored output."""

    def __init__(self, target: str, *, scan_index: int):
        super().__init__(
            f"stored-action-conflict: output {target!r} both set and reset "
            f"in scan {scan_index}"
        )
        self.target = target
        self.scan_index = scan_index


class ScenarioError(GrafcetError):
    """A scenario configuration could not be loaded or is out of domain."""
