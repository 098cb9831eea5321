"""Exception types shared across the toolkit."""


class CornerBoxError(Exception):
    """Base class for every error raised by this package."""


class NonFinite(CornerBoxError, ValueError):
    """A value that must be finite is NaN or infinite."""


class NotARectangle(CornerBoxError, ValueError):
    """Four indexed corners deviate from a rectangle beyond tolerance."""


class InvalidCornerIndex(CornerBoxError, ValueError):
    """Corner index outside {0, 1, 2, 3}."""


class UnsupportedScheme(CornerBoxError, ValueError):
    """Operation is not defined for the requested encoding scheme."""


class InfeasibleGeometry(CornerBoxError, ValueError):
    """Encoded parameters are mutually inconsistent and decode to no valid box."""


class UnknownParameter(CornerBoxError, ValueError):
    """Named slot does not exist in the scheme's parameter tuple."""


class LocalizeOnly(CornerBoxError):
    """A single annotated corner localizes the object but fixes no box parameter."""


class Underdetermined(CornerBoxError):
    """Annotated corners leave box parameters unconstrained (bare diagonal pair)."""


class Degenerate(CornerBoxError, ValueError):
    """Corner observations are too collapsed to fit a rectangle."""


class InsufficientPoints(CornerBoxError, ValueError):
    """Too few points to fit the requested model."""


class DegenerateGeometry(CornerBoxError, ValueError):
    """Point configuration admits no well-defined model (e.g. collinear cloud)."""


class BehindCamera(CornerBoxError):
    """Solved point lies on or behind the camera plane."""


class NoSolution(CornerBoxError):
    """Projection constraint is parallel to the vertical axis; no height exists."""


class NonPositiveHeight(CornerBoxError, ValueError):
    """Recovered top height does not clear the ground."""


class MalformedRecord(CornerBoxError, ValueError):
    """A dataset record failed to parse.

    Carries the 1-based line number of the offending record.
    """

    def __init__(self, line_no: int, detail: str):
        self.line_no = line_no
        self.detail = detail
        super().__init__(f"line {line_no}: {detail}")


class MissingComponent(CornerBoxError, ValueError):
    """A required calibration component is absent."""


class TruncatedFile(CornerBoxError, ValueError):
    """Binary point cloud payload is not a whole number of records."""
