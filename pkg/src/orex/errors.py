"""Exception types shared across the engine."""


class OrexError(Exception):
    """Base class for all engine errors."""


class InvalidInput(OrexError):
    """Malformed call arguments (dimension mismatches, bad indices, ...)."""


class InvalidShape(InvalidInput):
    """Convolution kernel does not fit the input shape."""


class InvalidIndex(InvalidInput):
    """Word index outside the input positions."""


class ModelFormatError(OrexError):
    """Model or embedding file violates the schema.

    `location` points at the offending entry, e.g. "layers[2].bias".
    """

    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


class UnknownWord(OrexError):
    def __init__(self, word: str):
        super().__init__(f"word not in vocabulary: {word!r}")
        self.word = word


class TooLong(OrexError):
    """Input text longer than the model's fixed word count."""


class Infeasible(OrexError):
    """No robust explanation satisfies the exclude constraints."""


class ResourceExhausted(OrexError):
    """A verification or solver budget was hit before reaching a verdict."""

    def __init__(self, message: str, splits_used: int = 0):
        super().__init__(message)
        self.splits_used = splits_used


class UndefinedEstimate(OrexError):
    """Conditional estimate requested under an event of probability zero."""
