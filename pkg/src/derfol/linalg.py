"""Exact sparse linear algebra over Q and cohomology of finite cochain complexes.

Matrices are sparse maps (row, col) -> Fraction with no stored zeros.  All
eliminations are exact Gaussian eliminations over Q; rows are rescaled to
primitive integer vectors after each step to keep the arithmetic small.
Pivots are chosen by smallest fill (shortest row, then shortest column) with
deterministic tie-breaking, so all outputs are reproducible.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd


class SparseRationalMatrix:
    """Immutable-by-convention sparse matrix over Q.

    entries maps (i, j) -> nonzero Fraction with 0 <= i < rows, 0 <= j < cols.
    """

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows: int, cols: int, entries=None):
        if rows < 0 or cols < 0:
            raise ValueError("negative matrix dimensions")
        self.rows = rows
        self.cols = cols
        clean = {}
        if entries:
            for (i, j), v in entries.items():
                if not (0 <= i < rows and 0 <= j < cols):
                    raise ValueError(f"entry ({i},{j}) out of bounds for {rows}x{cols}")
                v = Fraction(v)
                if v != 0:
                    clean[(i, j)] = v
        self.entries = clean

    @classmethod
    def from_rows(cls, rows_list):
        rows = len(rows_list)
        cols = len(rows_list[0]) if rows_list else 0
        entries = {}
        for i, row in enumerate(rows_list):
            if len(row) != cols:
                raise ValueError("ragged rows")
            for j, v in enumerate(row):
                if v != 0:
                    entries[(i, j)] = Fraction(v)
        return cls(rows, cols, entries)

    @classmethod
    def identity(cls, n: int):
        return cls(n, n, {(i, i): Fraction(1) for i in range(n)})

    @classmethod
    def zero(cls, rows: int, cols: int):
        return cls(rows, cols)

    def to_rows(self):
        out = [[Fraction(0)] * self.cols for _ in range(self.rows)]
        for (i, j), v in self.entries.items():
            out[i][j] = v
        return out

    def is_zero(self) -> bool:
        return not self.entries

    def transpose(self) -> "SparseRationalMatrix":
        return SparseRationalMatrix(
            self.cols, self.rows, {(j, i): v for (i, j), v in self.entries.items()}
        )

    def __eq__(self, other):
        return (
            isinstance(other, SparseRationalMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self.entries == other.entries
        )

    def __hash__(self):
        return hash((self.rows, self.cols, frozenset(self.entries.items())))

    def __repr__(self):
        return f"SparseRationalMatrix({self.rows}x{self.cols}, {len(self.entries)} entries)"

    def __mul__(self, other: "SparseRationalMatrix") -> "SparseRationalMatrix":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch: {self.rows}x{self.cols} * {other.rows}x{other.cols}")
        by_row = {}
        for (i, j), v in other.entries.items():
            by_row.setdefault(i, []).append((j, v))
        out = {}
        for (i, k), v in self.entries.items():
            for j, w in by_row.get(k, ()):
                key = (i, j)
                s = out.get(key, 0) + v * w
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        return SparseRationalMatrix(self.rows, other.cols, out)

    def __add__(self, other: "SparseRationalMatrix") -> "SparseRationalMatrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch in addition")
        out = dict(self.entries)
        for key, v in other.entries.items():
            s = out.get(key, 0) + v
            if s:
                out[key] = s
            else:
                out.pop(key, None)
        return SparseRationalMatrix(self.rows, self.cols, out)

    def __neg__(self):
        return SparseRationalMatrix(
            self.rows, self.cols, {k: -v for k, v in self.entries.items()}
        )

    def apply(self, vec):
        """Matrix-vector product; vec is a dict col -> Fraction."""
        out = {}
        for (i, j), v in self.entries.items():
            w = vec.get(j)
            if w:
                s = out.get(i, 0) + v * w
                if s:
                    out[i] = s
                else:
                    out.pop(i, None)
        return out

    def column(self, j):
        return {i: v for (i, jj), v in self.entries.items() if jj == j}


def _primitive(row: dict) -> dict:
    """Rescale a sparse Fraction row to a primitive integer row (positive lead).

    The lead is the smallest column index; making it positive fixes an overall
    sign so echelon forms are deterministic.
    """
    if not row:
        return row
    den = 1
    for v in row.values():
        den = den * v.denominator // gcd(den, v.denominator)
    num = 0
    for v in row.values():
        num = gcd(num, abs(v.numerator * (den // v.denominator)))
    lead = min(row)
    scale = Fraction(den, num)
    if row[lead] < 0:
        scale = -scale
    return {j: v * scale for j, v in row.items()}


class Echelon:
    """Row echelon form accumulator with deterministic pivoting.

    Rows are added one at a time and reduced against existing pivots; the
    surviving part becomes a new pivot row at its leading (smallest) column.
    """

    def __init__(self, ncols: int):
        self.ncols = ncols
        self.pivot_rows = {}  # pivot col -> primitive row dict

    def reduce(self, row: dict) -> dict:
        """Reduce a row against the current pivots (sparse, in-place copy)."""
        row = dict(row)
        while row:
            lead = min(row)
            piv = self.pivot_rows.get(lead)
            if piv is None:
                return row
            factor = row[lead] / piv[lead]
            for j, v in piv.items():
                s = row.get(j, 0) - factor * v
                if s:
                    row[j] = s
                else:
                    row.pop(j, None)
        return row

    def add(self, row: dict) -> bool:
        """Reduce and insert; returns True if the row increased the rank."""
        row = self.reduce(row)
        if not row:
            return False
        self.pivot_rows[min(row)] = _primitive(row)
        return True

    @property
    def rank(self) -> int:
        return len(self.pivot_rows)

    def back_substitute(self):
        """Make the echelon fully reduced (each pivot column is cleared)."""
        for col in sorted(self.pivot_rows, reverse=True):
            piv = self.pivot_rows[col]
            inv = 1 / Fraction(piv[col])
            piv = {j: v * inv for j, v in piv.items()}
            self.pivot_rows[col] = piv
            for col2, row2 in self.pivot_rows.items():
                if col2 == col:
                    continue
                factor = row2.get(col)
                if factor:
                    for j, v in piv.items():
                        s = row2.get(j, 0) - factor * v
                        if s:
                            row2[j] = s
                        else:
                            row2.pop(j, None)

    def contains(self, row: dict) -> bool:
        return not self.reduce(row)


def _rows_of(M: SparseRationalMatrix):
    rows = {}
    for (i, j), v in M.entries.items():
        rows.setdefault(i, {})[j] = v
    # shortest rows first keeps the elimination sparse; index breaks ties
    return [rows[i] for i in sorted(rows, key=lambda i: (len(rows[i]), i))]


def rank(M: SparseRationalMatrix) -> int:
    """Rank of M over Q, exactly."""
    ech = Echelon(M.cols)
    for row in _rows_of(M):
        ech.add(row)
    return ech.rank


def row_space_echelon(M: SparseRationalMatrix) -> Echelon:
    """Reduced echelon basis of the row space of M."""
    ech = Echelon(M.cols)
    for row in _rows_of(M):
        ech.add(row)
    ech.back_substitute()
    return ech


def kernel_basis(M: SparseRationalMatrix) -> SparseRationalMatrix:
    """Basis of ker(M) as columns; column count = cols - rank, M*K = 0 exactly.

    Free columns are taken in increasing order and each basis vector is the
    standard unit on its free column plus back-substituted pivot entries.
    """
    ech = row_space_echelon(M)
    pivots = ech.pivot_rows  # col -> reduced row (pivot coefficient 1)
    free_cols = [j for j in range(M.cols) if j not in pivots]
    entries = {}
    for out_col, fc in enumerate(free_cols):
        entries[(fc, out_col)] = Fraction(1)
        for pc, row in pivots.items():
            v = row.get(fc)
            if v:
                entries[(pc, out_col)] = -v
    return SparseRationalMatrix(M.cols, len(free_cols), entries)


def image_echelon(M: SparseRationalMatrix) -> Echelon:
    """Echelon basis of the column space (image) of M."""
    return row_space_echelon(M.transpose())


def cohomology_at(d_in: SparseRationalMatrix, d_out: SparseRationalMatrix):
    """Cohomology at the middle of  . --d_in--> . --d_out--> .

    Returns (dim, representatives): dim = dim ker(d_out) - rank(d_in) and the
    representative columns are kernel vectors whose classes form a basis.

    Raises NotAComplex when d_out . d_in != 0.
    """
    from .errors import NotAComplex

    if d_in.rows != d_out.cols:
        raise ValueError("d_in target and d_out source dimensions differ")
    composite = d_out * d_in
    if not composite.is_zero():
        raise NotAComplex("d_out . d_in is nonzero", composite=composite)
    kern = kernel_basis(d_out)
    img = image_echelon(d_in)
    reps = []
    ech = Echelon(d_out.cols)
    for col in sorted(img.pivot_rows):
        ech.add(dict(img.pivot_rows[col]))
    n_img = ech.rank
    for j in range(kern.cols):
        vec = kern.column(j)
        if ech.add(vec):
            reps.append(vec)
    dim = kern.cols - n_img
    assert dim == len(reps)
    entries = {}
    for out_col, vec in enumerate(reps):
        for i, v in vec.items():
            entries[(i, out_col)] = v
    return dim, SparseRationalMatrix(d_out.cols, len(reps), entries)


class FiniteCochainComplex:
    """Bounded cochain complex: dims per degree and differentials d_i: C^i -> C^{i+1}.

    dims maps degree -> dimension (missing degrees are zero); differentials
    maps degree i -> SparseRationalMatrix of shape dims[i+1] x dims[i].
    Consecutive differentials must compose to zero.
    """

    def __init__(self, dims: dict, differentials: dict, check: bool = True):
        self.dims = {i: n for i, n in dims.items() if n}
        self.differentials = {}
        for i, M in differentials.items():
            exp_rows = self.dims.get(i + 1, 0)
            exp_cols = self.dims.get(i, 0)
            if (M.rows, M.cols) != (exp_rows, exp_cols):
                raise ValueError(
                    f"differential at degree {i} has shape {M.rows}x{M.cols}, "
                    f"expected {exp_rows}x{exp_cols}"
                )
            if not M.is_zero():
                self.differentials[i] = M
        if check:
            self.assert_complex()

    def degree_range(self):
        if not self.dims:
            return range(0, 0)
        lo, hi = min(self.dims), max(self.dims)
        return range(lo, hi + 1)

    def dim(self, i: int) -> int:
        return self.dims.get(i, 0)

    def d(self, i: int) -> SparseRationalMatrix:
        M = self.differentials.get(i)
        if M is None:
            return SparseRationalMatrix(self.dim(i + 1), self.dim(i))
        return M

    def assert_complex(self):
        from .errors import NotAComplex

        for i in self.degree_range():
            comp = self.d(i + 1) * self.d(i)
            if not comp.is_zero():
                raise NotAComplex(f"d.d nonzero at degree {i}", composite=comp)

    def cohomology(self) -> dict:
        """Map degree -> cohomology dimension (zero degrees omitted)."""
        out = {}
        for i in self.degree_range():
            dim, _ = cohomology_at(self.d(i - 1), self.d(i))
            if dim:
                out[i] = dim
        return out

    def cohomology_with_representatives(self, i: int):
        return cohomology_at(self.d(i - 1), self.d(i))


def complex_cohomology(C: FiniteCochainComplex) -> dict:
    """Cohomology dims per degree of a finite cochain complex."""
    return C.cohomology()
