"""Exception hierarchy. Each class maps onto one CLI exit code."""


class CiliaGraphError(Exception):
    exit_code = 5


class InputError(CiliaGraphError, ValueError):
    """Bad user input: missing files, malformed datasets, invalid parameters."""

    exit_code = 2


class DatasetFormatError(InputError):
    def __init__(self, message: str, path=None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line


class DimensionMismatchError(CiliaGraphError, ValueError):
    """Operands with incompatible dimensions."""

    exit_code = 5


class DegenerateVectorError(CiliaGraphError, ValueError):
    """An operation needs a nonzero vector."""

    exit_code = 5


class CompatibilityError(CiliaGraphError):
    """Model and data (or file format version) do not fit together."""

    exit_code = 3


class VersionMismatchError(CompatibilityError):
    pass


class IntegrityError(CiliaGraphError):
    """A model file is truncated or fails its checksum."""

    exit_code = 4


class TruncatedModelError(IntegrityError):
    pass


class ChecksumError(IntegrityError):
    pass
