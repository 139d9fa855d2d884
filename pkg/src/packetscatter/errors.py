"""Exception hierarchy for packetscatter."""


class ScatterError(ValueError):
    """Base class for every error raised by this package."""


class NonPositiveWidth(ScatterError):
    def __init__(self, index, width=None):
        self.index = index
        super().__init__(f"bin {index}: width must be positive and finite (got {width!r})")


class NonFiniteDensity(ScatterError):
    def __init__(self, index, value=None):
        self.index = index
        super().__init__(f"bin {index}: scattering length density must be finite and real (got {value!r})")


class EmptySamples(ScatterError):
    pass


class ZeroWaveVector(ScatterError):
    pass


class OutOfRange(ScatterError):
    pass


class EvanescentFronting(ScatterError):
    pass


class DomainTooSmall(ScatterError):
    pass


class WindowTooSmall(ScatterError):
    pass


class ZeroWidth(ScatterError):
    pass


class GridTooCoarse(ScatterError):
    pass


class GridMismatch(ScatterError):
    pass


class StabilityViolation(ScatterError):
    pass


class BoundaryContamination(ScatterError):
    pass


class DegenerateEnergies(ScatterError):
    pass


class InvariantViolation(ScatterError):
    """An audited physical invariant (flux, norm, bounds) failed."""

    def __init__(self, name, detail=""):
        self.name = name
        super().__init__(f"invariant '{name}' violated" + (f": {detail}" if detail else ""))


class ConfigError(ScatterError):
    """Bad run configuration; carries the offending field path and line."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = ""
        if field is not None:
            where += f"field '{field}'"
        if line is not None:
            where += f" (line {line})"
        super().__init__(f"{where}: {message}" if where else message)
