"""Exception hierarchy shared by the numerical modules and the CLI.

Library code raises these; the command layer turns them into a red
`error:` line and a non-zero exit status.
"""


class AtrisError(Exception):
    """Base class for every error raised by atris-sim."""


class InvalidArgumentError(AtrisError, ValueError):
    """A caller passed a value outside the documented domain."""


class DegenerateGeometryError(AtrisError):
    """Two points that must be distinct coincide (zero distance)."""


class NumericalError(AtrisError):
    """A linear-algebra routine failed or produced non-finite values."""


class InfeasibleAllocationError(AtrisError):
    """Power allocation has no feasible solution (e.g. every gain is zero)."""


class DegenerateSectorError(AtrisError):
    """A surface sector carries no feeder energy (masked channel is zero)."""


class ConfigError(AtrisError):
    """Configuration file or override could not be parsed or validated."""

    def __init__(self, message: str, key: str | None = None) -> None:
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)
