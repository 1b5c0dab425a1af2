"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """A precondition on an operation's inputs was violated."""


class DegenerateInput(ValueError):
    """Input is structurally valid but statistically degenerate (e.g. zero variance)."""


class CorruptCheckpoint(RuntimeError):
    """Checkpoint file is malformed or inconsistent with its declared config."""


class UnknownCheckpointVersion(CorruptCheckpoint):
    """Checkpoint declares a format version this code does not recognize."""

    def __init__(self, version):
        self.version = version
        super().__init__(f"unknown checkpoint format version: {version}")
