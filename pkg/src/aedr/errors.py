"""Exception types shared across the toolkit."""


class AedrError(Exception):
    """Base class for data and computation errors raised by this package."""


class DimensionMismatchError(AedrError):
    """Two images (or an image and a backend contract) disagree on shape."""


class CorpusError(AedrError):
    """A corpus, manifest, or persisted model file is unusable."""


class ExternalBackendError(AedrError):
    """Transport or protocol failure while talking to an external reconstructor."""
