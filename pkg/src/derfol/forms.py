"""Polynomial differential forms on affine n-space.

A PolyForm of form degree p stores, for each strictly increasing index
subset S (|S| = p), a MultiPoly coefficient; the element is
sum_S  f_S . dx_{S_1} ^ ... ^ dx_{S_p}.  All sign bookkeeping concentrates
here: products are normalized to increasing index order at construction.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import NonSquare
from .poly import MultiPoly, grlex_key, monomials_of_degree


def sort_with_sign(indices):
    """Sort a tuple of distinct indices; return (sorted tuple, permutation sign).

    Returns (None, 0) when two indices coincide (the wedge vanishes).
    """
    idx = list(indices)
    if len(set(idx)) != len(idx):
        return None, 0
    sign = 1
    # insertion sort; counts transpositions exactly
    for i in range(1, len(idx)):
        j = i
        while j > 0 and idx[j - 1] > idx[j]:
            idx[j - 1], idx[j] = idx[j], idx[j - 1]
            sign = -sign
            j -= 1
    return tuple(idx), sign


class PolyForm:
    """Polynomial differential p-form with exact rational coefficients."""

    __slots__ = ("num_vars", "form_degree", "terms")

    def __init__(self, num_vars: int, form_degree: int, terms=None):
        if not (0 <= form_degree):
            raise ValueError("negative form degree")
        self.num_vars = num_vars
        self.form_degree = form_degree
        clean = {}
        if terms:
            for S, coeff in terms.items():
                S = tuple(S)
                if len(S) != form_degree:
                    raise ValueError(f"index set {S} has size != {form_degree}")
                if any(not (0 <= a < num_vars) for a in S):
                    raise ValueError(f"index out of range in {S}")
                if list(S) != sorted(set(S)):
                    raise ValueError(f"index set {S} not strictly increasing")
                if not isinstance(coeff, MultiPoly):
                    coeff = MultiPoly.constant(num_vars, coeff)
                if coeff.num_vars != num_vars:
                    raise ValueError("coefficient variable count mismatch")
                if not coeff.is_zero():
                    clean[S] = coeff
        self.terms = clean

    @classmethod
    def zero(cls, num_vars: int, form_degree: int = 0):
        return cls(num_vars, form_degree)

    @classmethod
    def from_poly(cls, f: MultiPoly):
        return cls(f.num_vars, 0, {(): f})

    @classmethod
    def dx(cls, num_vars: int, a: int):
        return cls(num_vars, 1, {(a,): MultiPoly.constant(num_vars, 1)})

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, S) -> MultiPoly:
        return self.terms.get(tuple(S), MultiPoly.zero(self.num_vars))

    def __eq__(self, other):
        return (
            isinstance(other, PolyForm)
            and self.num_vars == other.num_vars
            and self.form_degree == other.form_degree
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.num_vars, self.form_degree, frozenset(self.terms.items())))

    def _check(self, other):
        if self.num_vars != other.num_vars:
            raise ValueError("mixed variable counts")

    def __add__(self, other: "PolyForm") -> "PolyForm":
        self._check(other)
        if self.form_degree != other.form_degree:
            if self.is_zero():
                return other
            if other.is_zero():
                return self
            raise ValueError("mixed form degrees in addition")
        terms = dict(self.terms)
        for S, c in other.terms.items():
            s = terms.get(S)
            s = c if s is None else s + c
            if s.is_zero():
                terms.pop(S, None)
            else:
                terms[S] = s
        out = PolyForm.__new__(PolyForm)
        out.num_vars, out.form_degree, out.terms = self.num_vars, self.form_degree, terms
        return out

    def __neg__(self):
        out = PolyForm.__new__(PolyForm)
        out.num_vars, out.form_degree = self.num_vars, self.form_degree
        out.terms = {S: -c for S, c in self.terms.items()}
        return out

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "PolyForm":
        if isinstance(c, (int, Fraction)):
            c = MultiPoly.constant(self.num_vars, c)
        terms = {}
        for S, f in self.terms.items():
            g = f * c
            if not g.is_zero():
                terms[S] = g
        return PolyForm(self.num_vars, self.form_degree, terms)

    def max_poly_degree(self) -> int:
        return max((c.degree() for c in self.terms.values()), default=-1)


def wedge(alpha: PolyForm, beta: PolyForm) -> PolyForm:
    """Exterior product; graded commutative, associative, bilinear."""
    if alpha.num_vars != beta.num_vars:
        raise ValueError("mixed variable counts")
    n = alpha.num_vars
    p, q = alpha.form_degree, beta.form_degree
    terms = {}
    for S, f in alpha.terms.items():
        for T, g in beta.terms.items():
            U, sign = sort_with_sign(S + T)
            if sign == 0:
                continue
            c = f * g * sign
            s = terms.get(U)
            s = c if s is None else s + c
            if s.is_zero():
                terms.pop(U, None)
            else:
                terms[U] = s
    return PolyForm(n, p + q, terms)


def de_rham_d(omega: PolyForm) -> PolyForm:
    """Exterior derivative: Q-linear, Leibniz, d.d = 0."""
    n = omega.num_vars
    terms = {}
    for S, f in omega.terms.items():
        for a in range(n):
            df = f.partial(a)
            if df.is_zero():
                continue
            U, sign = sort_with_sign((a,) + S)
            if sign == 0:
                continue
            c = df * sign
            s = terms.get(U)
            s = c if s is None else s + c
            if s.is_zero():
                terms.pop(U, None)
            else:
                terms[U] = s
    return PolyForm(n, omega.form_degree + 1, terms)


def truncate_total_degree(omega: PolyForm, bound) -> PolyForm:
    """Drop terms whose polynomial degree exceeds bound; idempotent.

    bound=None is the identity (the infinity sentinel).
    """
    if bound is None:
        return omega
    terms = {}
    for S, f in omega.terms.items():
        g = f.truncate(bound)
        if not g.is_zero():
            terms[S] = g
    return PolyForm(omega.num_vars, omega.form_degree, terms)


def pullback_form(omega: PolyForm, phi) -> PolyForm:
    """Pull back a form on A^m along phi: A^n -> A^m given by m polynomials.

    Coefficients are substituted and each dx_b becomes d(phi_b).
    """
    m = omega.num_vars
    if len(phi) != m:
        raise ValueError("phi must have one component per target variable")
    n = phi[0].num_vars
    dphi = [de_rham_d(PolyForm.from_poly(phi_b)) for phi_b in phi]
    out = PolyForm.zero(n, omega.form_degree)
    for S, f in omega.terms.items():
        piece = PolyForm.from_poly(f.substitute(phi) if m else f)
        for b in S:
            piece = wedge(piece, dphi[b])
        out = out + piece
    return out


class FormMatrix:
    """Matrix of PolyForms of one fixed form degree."""

    __slots__ = ("rows", "cols", "num_vars", "form_degree", "entries")

    def __init__(self, rows: int, cols: int, num_vars: int, form_degree: int, entries=None):
        self.rows = rows
        self.cols = cols
        self.num_vars = num_vars
        self.form_degree = form_degree
        clean = {}
        if entries:
            for (i, j), w in entries.items():
                if not (0 <= i < rows and 0 <= j < cols):
                    raise ValueError("entry out of bounds")
                if w.form_degree != form_degree or w.num_vars != num_vars:
                    raise ValueError("inhomogeneous FormMatrix entry")
                if not w.is_zero():
                    clean[(i, j)] = w
        self.entries = clean

    @classmethod
    def zero(cls, size: int, num_vars: int, form_degree: int = 1):
        return cls(size, size, num_vars, form_degree)

    def entry(self, i: int, j: int) -> PolyForm:
        return self.entries.get((i, j), PolyForm.zero(self.num_vars, self.form_degree))

    def is_zero(self) -> bool:
        return not self.entries

    def map_entries(self, fn, form_degree: int) -> "FormMatrix":
        entries = {}
        for key, w in self.entries.items():
            v = fn(w)
            if not v.is_zero():
                entries[key] = v
        return FormMatrix(self.rows, self.cols, self.num_vars, form_degree, entries)

    def wedge_product(self, other: "FormMatrix") -> "FormMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        deg = self.form_degree + other.form_degree
        entries = {}
        for (i, l), w in self.entries.items():
            for j in range(other.cols):
                v = other.entries.get((l, j))
                if v is None:
                    continue
                c = wedge(w, v)
                if c.is_zero():
                    continue
                prev = entries.get((i, j))
                c = c if prev is None else prev + c
                if c.is_zero():
                    entries.pop((i, j), None)
                else:
                    entries[(i, j)] = c
        return FormMatrix(self.rows, other.cols, self.num_vars, deg, entries)


def matrix_integrability_defect(W: FormMatrix) -> FormMatrix:
    """dW + W^W, entrywise; the zero matrix iff the flatness condition holds."""
    if W.rows != W.cols:
        raise NonSquare(f"connection matrix is {W.rows}x{W.cols}")
    if W.form_degree != 1:
        raise ValueError("connection matrix entries must be 1-forms")
    dW = W.map_entries(de_rham_d, 2)
    WW = W.wedge_product(W)
    entries = {}
    for key in set(dW.entries) | set(WW.entries):
        s = dW.entry(*key) + WW.entry(*key)
        if not s.is_zero():
            entries[key] = s
    return FormMatrix(W.rows, W.cols, W.num_vars, 2, entries)


def monomial_form_basis(num_vars: int, form_degree: int, poly_degree: int):
    """Basis {x^alpha dx_S : |alpha| = poly_degree, |S| = form_degree}.

    Deterministic order: graded-lex on alpha, then lex on S.
    """
    from itertools import combinations

    out = []
    for expo in monomials_of_degree(num_vars, poly_degree):
        for S in combinations(range(num_vars), form_degree):
            out.append(
                PolyForm(num_vars, form_degree, {S: MultiPoly.monomial(num_vars, expo)})
            )
    return out
