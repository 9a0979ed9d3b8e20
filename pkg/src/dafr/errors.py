"""Exception types shared across the package.

Every pipeline failure carries a stable ``code`` string; the CLI prints it
in front of the human message so harnesses can match on it.
"""


class DafrError(Exception):
    """Base class for pipeline failures."""

    code = "pipeline"


class InputError(DafrError):
    """Bad input file or schema: missing file, missing column, empty table."""

    code = "input"


class CellError(InputError):
    """A cell failed to parse or is non-finite; the message names row and column."""

    code = "bad-cell"


class ZeroTargetError(DafrError):
    """A percentage-error metric was requested with a zero target value."""

    code = "zero-target"


class RankDeficientError(DafrError):
    """The design matrix has linearly dependent columns and no ridge penalty."""

    code = "rank-deficient"


class SegmentSizeError(DafrError):
    """A target segment ended up with too few rows to fit its own model."""

    code = "segment-too-small"


class WidthMismatchError(DafrError):
    """Feature width of the input does not match what the model was trained on."""

    code = "width-mismatch"


class ModelFormatError(DafrError):
    """A persisted model file could not be parsed or has an unknown version."""

    code = "model-parse"
