"""Exception types shared across the package."""


class CupstackError(Exception):
    """Base class for all structured errors raised by this package."""


class KernelError(CupstackError):
    """Invalid opcode, shape mismatch, or graph misuse in the tensor kernel.

    Carries the offending opcode name so callers and tests can identify
    which operation rejected its inputs.
    """

    def __init__(self, opcode, message):
        self.opcode = opcode
        super().__init__(f"{opcode}: {message}" if opcode else message)


class CodecError(CupstackError):
    """Invalid bin-distribution input or codec configuration."""


class ModelError(CupstackError):
    """Model configuration or state inconsistent with the requested variant."""


class TrainError(CupstackError):
    """Training aborted (non-finite loss) or checkpoint file rejected."""


class SimError(CupstackError):
    """Simulator misuse: out-of-range step index or malformed scenario."""


class DataError(CupstackError):
    """Episode file malformed: bad magic, version, truncation, or shapes."""


class HarnessError(CupstackError):
    """Pipeline-level failure, e.g. the scripted teacher failing its task."""
