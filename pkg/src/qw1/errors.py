"""Exception types shared across the package."""


class QW1Error(Exception):
    """Base class for all package errors."""


class DimensionMismatch(QW1Error):
    """Matrix shape disagrees with the declared qudit layout."""


class LayoutMismatch(QW1Error):
    """Two operands live on different qudit layouts."""


class CapExceeded(QW1Error):
    """Requested Hilbert-space dimension d**n exceeds the configured cap."""


class IndexOutOfRange(QW1Error):
    """Qudit index outside 1..n."""


class NotHermitian(QW1Error):
    """Matrix is further from Hermitian than the ingestion tolerance."""


class NotTraceless(QW1Error):
    """Operator has a trace beyond tolerance where a traceless one is required."""


class NotAState(QW1Error):
    """Matrix fails the density-matrix checks (positivity / unit trace)."""


class EigenFailure(QW1Error):
    """An eigenvalue routine did not converge."""


class SolverFailure(QW1Error):
    """The conic solver stopped without an Optimal status."""


class SupportMismatch(QW1Error):
    """A local term's matrix size disagrees with its declared qudit support."""


class SupportViolation(QW1Error):
    """Relative entropy is infinite: first argument leaks outside the
    support of the second."""


class LengthMismatch(QW1Error):
    """Weight vector length disagrees with d**n."""


class ParameterRange(QW1Error):
    """Scalar parameter outside its admissible interval."""


class NoFixedPoint(QW1Error):
    """No PSD fixed point found near transfer-matrix eigenvalue 1."""


class NotTracePreserving(QW1Error):
    """Kraus operators fail the trace-preservation check."""


class NotUnitary(QW1Error):
    """Gate matrix is not unitary within tolerance."""


class InvalidInput(QW1Error):
    """Malformed serialized object (JSON schema violation or bad field)."""
