"""Exception hierarchy shared by all modules."""


class DiffGeoError(Exception):
    """Base class for every error raised by diffgeo."""


class InvalidParam(DiffGeoError, ValueError):
    pass


class ParseError(DiffGeoError, ValueError):
    """A CSV cell could not be parsed. ``row`` and ``col`` are 1-based."""

    def __init__(self, row: int, col: int, reason: str):
        self.row = row
        self.col = col
        self.reason = reason
        super().__init__(f"row {row}, column {col}: {reason}")


class InconsistentDimension(DiffGeoError, ValueError):
    def __init__(self, row: int, got: int, expected: int):
        self.row = row
        self.got = got
        self.expected = expected
        super().__init__(f"row {row} has {got} columns, expected {expected}")


class DimensionMismatch(DiffGeoError, ValueError):
    pass


class NonFiniteInput(DiffGeoError, ValueError):
    pass


class DegenerateChord(DiffGeoError, ValueError):
    pass


class DegenerateDirection(DiffGeoError, ValueError):
    pass


class SpecParseError(DiffGeoError, ValueError):
    def __init__(self, token: str, reason: str = "cannot parse"):
        self.token = token
        super().__init__(f"{reason}: {token!r}")
