"""Exception hierarchy. Every error carries a stable machine-readable category
slug so the CLI can report it on stderr."""


class GcknError(Exception):
    category = "error"


class NodeIndexError(GcknError, IndexError):
    category = "index-out-of-range"


class SelfLoopError(GcknError, ValueError):
    category = "self-loop"


class DuplicateEdgeError(GcknError, ValueError):
    category = "duplicate-edge"


class AttributeShapeMismatchError(GcknError, ValueError):
    category = "attribute-shape-mismatch"


class UnknownLabelError(GcknError, KeyError):
    category = "unknown-label"


class MissingFileError(GcknError, FileNotFoundError):
    category = "missing-file"


class InconsistentNodeCountError(GcknError, ValueError):
    category = "inconsistent-node-count"


class NonContiguousGraphIdsError(GcknError, ValueError):
    category = "non-contiguous-graph-ids"


class TooFewSamplesError(GcknError, ValueError):
    category = "too-few-samples"


class ContinuousAttributesUnsupportedError(GcknError, ValueError):
    category = "continuous-attributes-unsupported"


class DimensionMismatchError(GcknError, ValueError):
    category = "dimension-mismatch"


class EigenFailureError(GcknError, ArithmeticError):
    category = "eigen-failure"


class PathCapExceededError(GcknError, RuntimeError):
    category = "path-cap-exceeded"


class UnsupportedFlavorError(GcknError, ValueError):
    category = "unsupported-flavor"


class EmptyPopulationError(GcknError, ValueError):
    category = "empty-population"


class DegenerateSampleWarning(UserWarning):
    pass


class SingleClassError(GcknError, ValueError):
    category = "single-class"


class NonFiniteError(GcknError, ValueError):
    category = "non-finite"


class SegmentMismatchError(GcknError, ValueError):
    category = "segment-mismatch"


class SchemaVersionMismatchError(GcknError, ValueError):
    category = "schema-version-mismatch"


class CorruptModelError(GcknError, ValueError):
    category = "corrupt-model"


class ShapeMismatchError(GcknError, ValueError):
    category = "shape-mismatch"


class EmptySelectionError(GcknError, ValueError):
    category = "empty-selection"


# I/O failures reuse the builtin; the CLI maps it to the "io" category.
IoError = OSError
