"""Exception hierarchy shared across the pipeline.

Every error carries a short machine-readable ``code`` used in HTTP error
bodies and CLI output.
"""


class PipelineError(Exception):
    code = "pipeline_error"

    def __init__(self, detail: str = ""):
        super().__init__(detail)
        self.detail = detail


# --- ingestion ---

class MissingPart(PipelineError):
    code = "missing_part"


class MalformedMeta(PipelineError):
    code = "malformed_meta"


class UnsupportedImageFormat(PipelineError):
    code = "unsupported_image_format"


class ImageTooLarge(PipelineError):
    code = "image_too_large"


class DimensionOutOfRange(PipelineError):
    code = "dimension_out_of_range"


class QueueFull(PipelineError):
    code = "queue_full"


class StorageFailure(PipelineError):
    code = "storage_failure"


# --- image decoding / geometry ---

class CorruptImage(PipelineError):
    code = "corrupt_image"


class UnsupportedColorModel(PipelineError):
    code = "unsupported_color_model"


class DegenerateBox(PipelineError):
    code = "degenerate_box"


# --- model runtime ---

class BackendUnavailable(PipelineError):
    code = "backend_unavailable"


class ShapeMismatch(PipelineError):
    code = "shape_mismatch"


# --- metrics ---

class LengthMismatch(PipelineError):
    code = "length_mismatch"


class LabelOutOfRange(PipelineError):
    code = "label_out_of_range"


class EmptyMatrix(PipelineError):
    code = "empty_matrix"


class ClassTooSmall(PipelineError):
    code = "class_too_small"


class NoGroundTruth(PipelineError):
    code = "no_ground_truth"


class ParseError(PipelineError):
    code = "parse_error"

    def __init__(self, detail: str = "", line: int | None = None):
        super().__init__(detail)
        self.line = line


class TaskMismatch(PipelineError):
    code = "task_mismatch"


# --- store ---

class StoreLocked(PipelineError):
    code = "store_locked"


class StoreCorrupt(PipelineError):
    code = "store_corrupt"


class MigrationFailure(PipelineError):
    code = "migration_failure"


class DuplicateResult(PipelineError):
    code = "duplicate_result"


class ForeignKeyViolation(PipelineError):
    code = "foreign_key_violation"
