"""Exceptions raised by the toolkit. The CLI maps every `SvsError` to exit status 1."""


class SvsError(Exception):
    """Base class of all domain errors."""


class SequenceParseError(SvsError, ValueError):

    def __init__(self, message, position=None, path=None, line=None):
        self.position = position
        self.path = path
        self.line = line
        where = []
        if path is not None:
            where.append(f"{path}")
        if line is not None:
            where.append(f"line {line}")
        if position is not None:
            where.append(f"position {position}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class ValueParseError(SequenceParseError):
    """A values file (one number per line) holds something that is not a number."""


class SetSizeError(SvsError, ValueError):
    """A set-level operation received fewer sequences than it needs."""


class ConfigError(SvsError, ValueError):
    """Invalid run configuration, config file or parameter file."""


class EpidemicFinishedError(SvsError):
    """`step` called on an epidemic that already terminated."""


class EmptyLibraryError(SvsError):
    """Screening found no living virus genome."""


class ShortfallError(SvsError):

    def __init__(self, report):
        self.report = report
        super().__init__(
            f"Only {report.kept} sequence(s) passed screening, {report.required} required."
        )
