"""Exception hierarchy shared by all modules."""


class MomError(Exception):
    """Base class for errors raised by momcf."""


class DataFormatError(MomError, ValueError):
    """Malformed or empty interaction input."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyDataError(MomError, ValueError):
    """Moments are undefined because no row carries any interaction."""


class RankDeficient(MomError):
    """Fewer than K usable eigenvalues in the pairwise moment."""

    def __init__(self, requested, achieved):
        super().__init__(
            f"requested K={requested} but the pairwise moment has numerical rank {achieved}"
        )
        self.requested = requested
        self.achieved = achieved


class EigenConvergenceError(MomError):
    """The eigensolver did not reach the requested residual."""


class WhiteningError(MomError, ValueError):
    """Whitening is undefined (non-positive eigenvalue)."""


class DegenerateComponent(MomError):
    """Tensor deflation produced no component with positive eigenvalue."""

    def __init__(self, index, value):
        super().__init__(f"component {index}: best tensor eigenvalue {value:.3e} is not positive")
        self.index = index
        self.value = value


class DegenerateTopic(MomError):
    """A recovered item distribution has no positive mass."""

    def __init__(self, index):
        super().__init__(f"topic {index}: recovered column has no positive mass")
        self.index = index


class UnknownUser(MomError, KeyError):
    """A user key that was not present in the training data."""

    def __str__(self):
        return f"unknown user {self.args[0]!r}"


class ModelFormatError(MomError, ValueError):
    """Model file is malformed."""


class UnsupportedVersion(ModelFormatError):
    """Model file declares a format version this library cannot read."""


class DimensionMismatch(ModelFormatError):
    """Model file body disagrees with its header dimensions."""


class NonFiniteValue(ModelFormatError):
    """Model file contains NaN or infinity."""


class BoundsInputError(MomError, ValueError):
    """Invalid inputs to the sample-size / error-bound calculator."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
