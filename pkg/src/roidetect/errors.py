"""Exception hierarchy shared across the pipeline.

Three families matter for the CLI exit-code mapping: validation problems
(bad inputs, malformed files), IO problems (plain OSError is reused), and
degenerate-data problems (inputs that are structurally fine but cannot
support the requested computation).
"""


class RoiDetectError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(RoiDetectError):
    """Input violates a documented precondition or file-format contract."""


class DegenerateDataError(RoiDetectError):
    """Structurally valid input that cannot support the computation."""


# -- geometry ---------------------------------------------------------------

class MalformedPolygonError(ValidationError):
    pass


class EmptyGridError(ValidationError):
    """Patch size exceeds the slide in at least one dimension."""


class GeometryMismatchError(ValidationError):
    """Image, grid, or patch dimensions disagree."""


# -- ingestion --------------------------------------------------------------

class ManifestError(ValidationError):
    pass


class DuplicateIdError(ManifestError):
    pass


class UnknownLabelError(ManifestError):
    pass


class DegenerateSplitError(DegenerateDataError):
    """A split or subsample left one side empty."""


# -- classifier -------------------------------------------------------------

class DegenerateTrainingSetError(DegenerateDataError):
    """Fewer than two distinct labels in the training set."""


class NumericalError(RoiDetectError):
    pass


class IncompleteScoresError(ValidationError):
    pass


class InvalidDistributionError(ValidationError):
    pass


# -- detection --------------------------------------------------------------

class EmptyInputError(ValidationError):
    pass


class InvalidCountsError(ValidationError):
    pass


class InvalidInputError(ValidationError):
    pass


class MissingPredictionError(ValidationError):
    pass


class InsufficientRepeatsError(ValidationError):
    pass


# -- clustering / rendering -------------------------------------------------

class EmptySelectionError(ValidationError):
    pass


class NoClusterError(DegenerateDataError):
    """OPTICS produced only noise; no cluster to outline."""


class InvalidBoundaryError(ValidationError):
    pass
