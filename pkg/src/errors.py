"""
Error hierarchy
Every failure raised by the tableware pipeline derives from TablewareError
"""

from typing import Optional


class TablewareError(Exception):
    """Base class for all pipeline errors"""


class ConfigError(TablewareError):
    """Invalid configuration file or value"""


class InputError(TablewareError):
    """Missing or malformed input file, bad CLI selection"""


class GeodataParseError(InputError):
    """Parse failure in an ESRI ASCII grid or GeoJSON document"""

    def __init__(self, message: str, line: Optional[int] = None,
                 column: Optional[int] = None, source: Optional[str] = None):
        self.message = message
        self.line = line
        self.column = column
        self.source = source
        super().__init__(self.__str__())

    def __str__(self):
        where = []
        if self.source:
            where.append(str(self.source))
        if self.line is not None:
            where.append(f"line {self.line}")
        if self.column is not None:
            where.append(f"column {self.column}")
        prefix = ", ".join(where)
        return f"{prefix}: {self.message}" if prefix else self.message


class GeometryError(TablewareError):
    """Geodata operation precondition violated"""


class RecordError(TablewareError):
    """MunicipalityRecord invariant violated"""


class EncodingError(TablewareError):
    """A vessel encoding is undefined for the given record"""


class MeshError(TablewareError):
    """Mesh construction precondition violated"""


class ManifestError(TablewareError):
    """Manifest inconsistent with records/specs or unreadable"""
