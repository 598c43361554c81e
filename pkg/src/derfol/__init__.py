"""derfol: exact computations with derived foliations on affine space.

Graded mixed complexes over Q, foliation presentations (Pfaffian systems,
Lie algebroids, integrable maps), crystals and their foliated de Rham
cohomology, and twisted de Rham / Jacobian-ring singularity analysis.
"""

from .errors import (
    ConnectionNotFlat,
    DerfolError,
    NotAComplex,
    NotALieAlgebroid,
    NotDifferentialIdeal,
    NotFlat,
    NotIsolated,
    NonSquare,
    ParseError,
    SchemaError,
    Unsupported,
)
from .linalg import (
    FiniteCochainComplex,
    SparseRationalMatrix,
    complex_cohomology,
    cohomology_at,
    kernel_basis,
    rank,
)
from .poly import MultiPoly
from .forms import (
    FormMatrix,
    PolyForm,
    de_rham_d,
    matrix_integrability_defect,
    monomial_form_basis,
    truncate_total_degree,
    wedge,
)
from .mixed import (
    DegreeReport,
    GradedMixedComplex,
    RealizedComplex,
    realize,
    realized_cohomology,
    tensor,
    unit_complex,
)
from .foliation import (
    Classification,
    FoliationPresentation,
    SingularFoliationGens,
    SingularLocusReport,
    TauWeights,
    classify,
    de_rham_foliation,
    integrable_foliation,
    lie_algebroid_foliation,
    pfaffian_foliation,
    pullback_pfaffian,
    punctual_foliation,
    singular_locus,
    truncate,
)

__version__ = "0.1.0"
