"""Exception types shared across the package."""


class ModalkitError(Exception):
    """Base class for all package-specific errors."""


class DataFormatError(ModalkitError, ValueError):
    """Malformed input data (CSV parse failures carry row/column info)."""


class SparseRegionError(ModalkitError, RuntimeError):
    """Too few effective observations near the requested location."""


class DegenerateFitError(ModalkitError, RuntimeError):
    """Model fit collapsed (for example every EM restart went singular)."""


class InfiniteDensityError(ModalkitError, ZeroDivisionError):
    """Nearest-neighbor density is unbounded (zero k-th neighbor distance)."""


class UnsupportedKernelError(ModalkitError, ValueError):
    """Operation not defined for the requested kernel family."""
