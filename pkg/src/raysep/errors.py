"""Exception types shared across the package.

Every failure mode that callers are expected to handle gets its own class so
that tests and the CLI can branch on the exact condition instead of parsing
messages.
"""

from __future__ import annotations


class RaysepError(Exception):
    """Base class for all package errors."""


# --- curve / index machinery ------------------------------------------------

class NonFiniteInput(RaysepError):
    """A NaN or infinity reached a public curve operation."""


class CurveHitsPoint(RaysepError):
    """The reference point lies on (or too close to) the curve."""


class CurvesCollide(RaysepError):
    """sigma(t) - gamma(t) vanished at some parameter."""

    def __init__(self, t: float, gap: float):
        self.t = t
        self.gap = gap
        super().__init__(f"curves collide at t={t!r} (gap {gap:.3e})")


class NotClosed(RaysepError):
    """Operation requires a closed curve."""


class NotSimple(RaysepError):
    """Contour has self-intersections and would be miscounted."""


class NotCounterclockwise(RaysepError):
    """Closed contour is negatively oriented."""


class ZeroOnContour(RaysepError):
    """A zero of the integrand lies on or too close to the contour."""


class ZeroIntegrand(RaysepError):
    """Integrand vanished at a curve sample during refinement."""


class RefinementBudgetExceeded(RaysepError):
    """Adaptive refinement would exceed the sample budget."""


class InconsistentRadius(RaysepError):
    """Multiplicity counts at radius and radius/2 disagree."""

    def __init__(self, count_full: int, count_half: int):
        self.count_full = count_full
        self.count_half = count_half
        super().__init__(
            f"count {count_full} at radius != count {count_half} at radius/2"
        )


# --- map model ---------------------------------------------------------------

class Overflow(RaysepError):
    """Orbit left the representable range; expected for escaping points."""

    def __init__(self, iterate: int = 0):
        self.iterate = iterate
        super().__init__(f"magnitude overflow at iterate {iterate}")


class OnCut(RaysepError):
    """Point lies on the cut curve delta or inside the closed disk."""


class BranchResolutionFailure(RaysepError):
    """Band selection for an inverse branch is ambiguous at tolerance."""


# --- structural setup ----------------------------------------------------------

class DeltaBlocked(RaysepError):
    """No cut path from the disk to the box edge has enough clearance."""


class OutsideTract(RaysepError):
    """Point does not project into the tract required by the operation."""


class OrbitLeftTracts(RaysepError):
    """Forward orbit exited the tract union before the requested length."""

    def __init__(self, iterate: int):
        self.iterate = iterate
        super().__init__(f"orbit left the tracts at iterate {iterate}")


class UnsupportedMap(RaysepError):
    """Structural decomposition is not implemented for this map shape."""


# --- rays ---------------------------------------------------------------------

class ExpansionNotValidated(RaysepError):
    """Expansion radius check failed for the requested symbol set."""


class BrokenRay(RaysepError):
    """Pullback ran into a singular value or the delta cut."""

    def __init__(self, t: float, depth: int):
        self.t = t
        self.depth = depth
        super().__init__(f"ray broken at t={t!r}, pullback depth {depth}")


class NoConvergence(RaysepError):
    """Landing iteration exhausted its budget without settling."""

    def __init__(self, budget: int):
        self.budget = budget
        super().__init__(f"no convergence within depth budget {budget}")


class MixedPeriods(RaysepError):
    """Ray-pair detection requires rays of equal period."""


class UnlandedRay(RaysepError):
    """Graph construction requires every ray to have landed."""

    def __init__(self, address: object):
        self.address = address
        super().__init__(f"ray of address {address} has not landed")


# --- fixed points ----------------------------------------------------------------

class BoundaryRoot(RaysepError):
    """A periodic point sits numerically on the search-region boundary."""


class DomainMeetsDisk(RaysepError):
    """Fundamental domain intersects the disk; contraction not guaranteed."""


class NotParabolic(RaysepError):
    """Multiplier is not within tolerance of 1."""


class DegenerateExpansion(RaysepError):
    """No normal-form coefficient above threshold up to the probed order."""


# --- separation -------------------------------------------------------------------

class ResolutionTooCoarse(RaysepError):
    """Region assignment unstable under refinement of the discretization."""


class NotFullComplete(RaysepError):
    """Domain collection fails the full/complete check."""

    def __init__(self, witness: str):
        self.witness = witness
        super().__init__(f"collection not full and complete: {witness}")


class ConnectorBlocked(RaysepError):
    """No connector arc with the required clearance exists in the box."""


class EpsTooLarge(RaysepError):
    """Another fixed point lies inside the boundary-modification zone."""


class SideCheckFailed(RaysepError):
    """Numerical verification of the boundary-modification containment failed."""

    def __init__(self, margin: float):
        self.margin = margin
        super().__init__(f"side check failed (worst margin {margin:.3e})")


# --- cli ---------------------------------------------------------------------------

class ConfigError(RaysepError):
    """Invalid CLI or scenario configuration."""
