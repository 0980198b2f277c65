"""Exception hierarchy shared across the engine."""


class PseudoViewError(Exception):
    """Base class for all engine errors."""


class SceneLoadError(PseudoViewError):
    """A referenced file is missing or unreadable."""


class SceneValidationError(PseudoViewError):
    """Scene content violates a structural invariant."""


class FormatError(PseudoViewError):
    """A binary payload does not match its declared format."""


class ConfigurationError(PseudoViewError):
    """Caller supplied an unusable parameter combination."""


class FrameRangeError(PseudoViewError):
    """A requested frame window falls outside the sequence bounds."""


class ShapeError(PseudoViewError):
    """Array arguments have incompatible or unsupported dimensions."""


class BackendError(PseudoViewError):
    """A completion backend failed or broke its output contract."""
