"""Exception types shared across the package."""


class ZonalClimError(Exception):
    """Base class for all package errors."""


class ParseError(ZonalClimError):
    """Malformed input stream (grid archive, coverage cache, GeoJSON, export)."""

    def __init__(self, message: str, *, line: int | None = None,
                 offset: int | None = None, feature: int | None = None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if offset is not None:
            loc.append(f"byte offset {offset}")
        if feature is not None:
            loc.append(f"feature {feature}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.line = line
        self.offset = offset
        self.feature = feature


class ShapeError(ZonalClimError):
    """Grid specs or array shapes do not match the operation's requirements."""


class AlignmentError(ZonalClimError):
    """Grids are not offset by exactly half a cell where resampling requires it."""


class ValidationError(ZonalClimError):
    """Input values violate a domain invariant (negative density, bad enum, ...)."""


class FrequencyError(ZonalClimError):
    """Temporal operation applied at an unsupported source/target frequency."""


class UnsupportedVariableError(ZonalClimError):
    """Variable cannot be used with this operation (e.g. upscaling spei)."""


class NotFoundError(ZonalClimError):
    """Catalog lookup of a key that was never stored."""


class CorruptionError(ZonalClimError):
    """Stored payload does not match its recorded checksum."""
