"""Exception types shared across the package."""


class TextMapsError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateGeometryError(TextMapsError, ValueError):
    """A polygon or point set has no usable 2-D extent."""


class ParameterError(TextMapsError, ValueError):
    """A configuration value is outside its legal range."""


class ShapeError(TextMapsError, ValueError):
    """Array arguments do not share the required dimensions."""


class AnnotationFormatError(TextMapsError, ValueError):
    """An annotation or detection file could not be parsed.

    Carries the offending file and line number so command line tools can
    point at the exact input.
    """

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}:" if line is None else f"{path}:{line}:"
        super().__init__(f"{loc} {message}" if loc else message)
        self.path = path
        self.line = line


class ConfigError(TextMapsError, ValueError):
    """A config file contains unknown keys or invalid values."""
