"""Exception hierarchy for mathematically witnessed failures.

Every mathematical error carries a machine-checkable witness (a form, a
matrix, an identity instance) so that reports can re-verify the failure
independently of the code path that raised it.
"""


class DerfolError(Exception):
    """Base class for all engine errors."""


class NotAComplex(DerfolError):
    """d_out . d_in is not zero; witness is the nonzero composite."""

    def __init__(self, message, composite=None):
        super().__init__(message)
        self.composite = composite


class NonSquare(DerfolError):
    """A square matrix of forms was required."""


class NotALieAlgebroid(DerfolError):
    """Jacobi / anchor / Leibniz compatibility fails; witness names the
    violated identity instance."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NotDifferentialIdeal(DerfolError):
    """d(w_i) is not expressible through the given connection matrix;
    witness is the offending index and defect 2-form."""

    def __init__(self, message, index=None, defect=None):
        super().__init__(message)
        self.index = index
        self.defect = defect


class ConnectionNotFlat(DerfolError):
    """dW + W^W is nonzero; witness is the defect matrix of 2-forms."""

    def __init__(self, message, defect=None):
        super().__init__(message)
        self.defect = defect


class NotFlat(DerfolError):
    """A crystal connection fails flatness; witness is the defect."""

    def __init__(self, message, witness=None, defect=None):
        super().__init__(message)
        self.witness = witness
        self.defect = defect


class NotIsolated(DerfolError):
    """Jacobian slice dimensions did not stabilize up to the jet bound."""

    def __init__(self, message, dims=None):
        super().__init__(message)
        self.dims = dims


class Unsupported(DerfolError):
    """Operation not defined for this presentation's provenance."""


class ParseError(DerfolError):
    """Malformed job document (not JSON / not UTF-8)."""


class SchemaError(DerfolError):
    """Well-formed JSON violating the job schema; path is JSON-pointer-ish."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
