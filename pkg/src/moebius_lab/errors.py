"""Exception types shared across the library.

The CLI maps these onto exit codes: usage errors are raised by argparse
itself (exit 2), ResourceError exits 3, InternalConsistencyError and
CertificationError exit 4.
"""


class MoebiusLabError(Exception):
    """Base class for library errors."""


class RangeError(MoebiusLabError):
    """An index or cutoff lies outside the range covered by a table."""


class ResourceError(MoebiusLabError):
    """A configured budget (memory, search box, grid size) would be exceeded."""


class ConfigurationError(MoebiusLabError):
    """Parameters are structurally invalid (empty windows, bad profile)."""


class PrecisionError(MoebiusLabError):
    """Exact rational arithmetic would exceed its configured bounds."""


class InternalConsistencyError(MoebiusLabError):
    """A self-check that should hold by construction failed."""


class CacheError(MoebiusLabError):
    """A cache file is malformed, corrupt, or from another format version."""


class CertificationError(MoebiusLabError):
    """A decomposition certificate check failed; carries the witness."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class InconclusiveError(MoebiusLabError):
    """Finite search exhausted without settling either branch.

    Carries diagnostics so the caller can retry with larger boxes.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
