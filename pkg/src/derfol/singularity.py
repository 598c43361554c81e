"""Flat-function analysis of a single polynomial f: the twisted de Rham
complex (weight-raising de Rham plus df-wedge), Jacobian rings and Milnor
numbers, the df-wedge Koszul stages, the naive relative de Rham complex and
the degreewise reconciliation between the twisted and naive sides.

The bookkeeping variable of the twisted differential is realized as the
weight index of the realization (one V-generator with image df), not as a
stored symbol; weight stages are quotients of the realization product and
the long-exact-sequence accounting of the singular part shows up as exactly
mu dimensions absorbed at degree n-1 per extra weight.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .errors import NotIsolated
from .foliation import FoliationPresentation, TauWeights, integrable_foliation, quotient_jet_dims
from .forms import PolyForm, de_rham_d, sort_with_sign
from .linalg import Echelon, SparseRationalMatrix, kernel_basis
from .mixed import DegreeReport
from .poly import MultiPoly, grlex_key, monomials_up_to_degree


# ---------------------------------------------------------------------------
# quasi-homogeneity detection


def detect_weights(f: MultiPoly):
    """Positive integer weights making f weighted-homogeneous, or None.

    Solves (alpha_i - alpha_0) . u = 0 over the exponent vectors of f and
    looks for a strictly positive kernel vector, scaled to integers.
    """
    expos = sorted(f.terms, key=grlex_key)
    n = f.num_vars
    if n == 0:
        return None
    if len(expos) <= 1:
        return (1,) * n
    base = expos[0]
    rows = []
    for e in expos[1:]:
        rows.append({a: Fraction(e[a] - base[a]) for a in range(n) if e[a] != base[a]})
    entries = {}
    for i, row in enumerate(rows):
        for a, v in row.items():
            entries[(i, a)] = v
    M = SparseRationalMatrix(len(rows), n, entries)
    K = kernel_basis(M)
    candidates = []
    for j in range(K.cols):
        col = K.column(j)
        vec = [col.get(a, Fraction(0)) for a in range(n)]
        candidates.append(vec)
        candidates.append([-v for v in vec])
    if K.cols > 1:
        total = [Fraction(0)] * n
        for j in range(K.cols):
            col = K.column(j)
            for a in range(n):
                total[a] += col.get(a, Fraction(0))
        candidates.append(total)
        candidates.append([-v for v in total])
    for vec in candidates:
        if all(v > 0 for v in vec):
            den = 1
            for v in vec:
                den = den * v.denominator // _gcd(den, v.denominator)
            ints = [int(v * den) for v in vec]
            g = 0
            for v in ints:
                g = _gcd(g, v)
            return tuple(v // g for v in ints)
    return None


def _gcd(a, b):
    from math import gcd

    return gcd(a, b)


def weighted_degree(f: MultiPoly, weights) -> int:
    return f.weighted_degree(weights)


# ---------------------------------------------------------------------------
# setup and Jacobian data


@dataclass
class TwistedDeRhamSetup:
    """Twisted de Rham computation plan for one polynomial."""

    n: int
    f: MultiPoly
    weight_cutoff: int
    poly_degree_bound: int
    quasi_homogeneous: tuple = None  # weight vector, verified when supplied

    def __post_init__(self):
        if self.quasi_homogeneous is not None:
            if not self.f.is_weighted_homogeneous(self.quasi_homogeneous):
                raise ValueError("f is not homogeneous for the supplied weights")

    @classmethod
    def auto(cls, f: MultiPoly, P: int, D: int):
        w = detect_weights(f)
        setup = cls(f.num_vars, f, P, D, quasi_homogeneous=w)
        return setup

    def tau_weights(self) -> TauWeights:
        if self.quasi_homogeneous is None:
            return TauWeights((1,) * self.n, (1,), (1,) * self.n)
        u = self.quasi_homogeneous
        w = max(self.f.weighted_degree(u), 1)
        return TauWeights(tuple(u), (w,), tuple(u))

    def degree_bound(self) -> int:
        """Effective filtration bound: the supplied bound is in standard
        degree; weighted filtrations scale it by the largest weight."""
        if self.quasi_homogeneous is None:
            return self.poly_degree_bound
        return self.poly_degree_bound * max(self.quasi_homogeneous)

    def foliation(self) -> FoliationPresentation:
        return integrable_foliation([self.f])


@dataclass
class JacobianData:
    f: MultiPoly
    milnor_number: int  # None when not certified isolated
    monomial_basis: list
    stabilized_at: int
    jet_dims: list

    @property
    def isolated(self) -> bool:
        return self.milnor_number is not None

    def as_dict(self):
        return {
            "milnor_number": self.milnor_number,
            "monomial_basis": [list(e) for e in self.monomial_basis],
            "stabilized_at": self.stabilized_at,
            "jet_dims": self.jet_dims,
        }


def jacobian_ring(f: MultiPoly, jet_bound: int = 12) -> JacobianData:
    """Jacobian ring slices dim Q[x]_{<=j} / (partials of f), with Milnor
    number and monomial basis once two consecutive slices agree.

    Reports milnor_number=None ("no stabilization by the bound") otherwise;
    never a definitive negative.
    """
    n = f.num_vars
    partials = [f.partial(a) for a in range(n)]
    partials = [g for g in partials if not g.is_zero()]
    dims = quotient_jet_dims(partials, n, jet_bound)
    stabilized = None
    for j in range(1, len(dims)):
        if dims[j] == dims[j - 1]:
            stabilized = j
            break
    if stabilized is None:
        return JacobianData(f, None, [], None, dims)
    # monomial basis at stabilization: monomials not pivotal in the ideal span
    j = stabilized
    monos = monomials_up_to_degree(n, j)
    key_of = {e: i for i, e in enumerate(monos)}
    ech = Echelon(len(monos))
    for g in partials:
        gdeg = g.degree()
        for expo in monomials_up_to_degree(n, j - gdeg):
            prod = MultiPoly.monomial(n, expo) * g
            vec = {key_of[e]: c for e, c in prod.terms.items() if sum(e) <= j}
            ech.add(vec)
    pivots = set(ech.pivot_rows)
    basis = [monos[i] for i in range(len(monos)) if i not in pivots]
    return JacobianData(f, dims[j], basis, j, dims)


# ---------------------------------------------------------------------------
# Koszul stages O -> Omega^1 -> ... -> Omega^p with wedge df


class _KoszulStage:
    """Finite windows of the df-wedge complex, with exact-cycle semantics."""

    def __init__(self, f: MultiPoly, p: int, D: int, weights=None):
        self.f = f
        self.n = f.num_vars
        self.p = p
        self.D = D
        self.weights = weights or (1,) * self.n
        # wedging with df raises the filtration degree by wdeg(f) exactly
        # (each term x^(a-e_i) dx_i of df has weighted degree wdeg(f))
        self.wdf = max(f.weighted_degree(self.weights), 1)
        self.Tbound = D + self.wdf + 1
        self.df = de_rham_d(PolyForm.from_poly(f))
        self._labels = {}
        self._index = {}
        self._cols = {}

    def tau(self, lab):
        alpha, S = lab
        return sum(w * e for w, e in zip(self.weights, alpha)) + sum(
            self.weights[a] for a in S
        )

    def labels(self, q: int):
        if q in self._labels:
            return self._labels[q]
        labs = []
        for S in combinations(range(self.n), q):
            w_cost = sum(self.weights[a] for a in S)
            for alpha in _weighted_monos(self.n, self.weights, self.Tbound - w_cost):
                labs.append((alpha, S))
        labs.sort(key=lambda L: (L[1], grlex_key(L[0])))
        self._labels[q] = labs
        self._index[q] = {lab: i for i, lab in enumerate(labs)}
        return labs

    def columns(self, q: int):
        """Images of degree-q basis elements under (wedge df)."""
        if q in self._cols:
            return self._cols[q]
        self.labels(q + 1)
        tgt = self._index[q + 1]
        cols = []
        for (alpha, S) in self.labels(q):
            col = {}
            for (a,), g in self.df.terms.items():
                merged, sign = sort_with_sign((a,) + S)
                if sign == 0:
                    continue
                for e, cf in g.terms.items():
                    alpha2 = tuple(x + y for x, y in zip(alpha, e))
                    pos = tgt.get((alpha2, merged))
                    if pos is None:
                        continue
                    v = col.get(pos, 0) + cf * sign
                    if v:
                        col[pos] = v
                    else:
                        col.pop(pos, None)
            cols.append(col)
        self._cols[q] = cols
        return cols

    def window_dim(self, q: int) -> int:
        """Exact cycles at tau <= D modulo boundaries landing in the window.

        Boundaries are images of window sources whose components outside the
        window vanish (wedging df never lowers the filtration degree, so no
        outside source can land inside)."""
        labs = self.labels(q)
        keep = [i for i, lab in enumerate(labs) if self.tau(lab) <= self.D]
        if not keep:
            return 0
        if q < self.p:
            cols = self.columns(q)
            entries = {}
            for ci, i in enumerate(keep):
                for r, v in cols[i].items():
                    entries[(r, ci)] = v
            A = SparseRationalMatrix(len(self.labels(q + 1)), len(keep), entries)
            n_cycles = len(keep) - _rank_of(A)
        else:
            n_cycles = len(keep)  # the stage complex stops at form degree p
        n_bound = 0
        if q >= 1:
            prev = self.labels(q - 1)
            keep_prev = [i for i, lab in enumerate(prev) if self.tau(lab) <= self.D]
            if keep_prev:
                cols = self.columns(q - 1)
                inside = {i for i in range(len(labs)) if self.tau(labs[i]) <= self.D}
                in_entries = {}
                out_entries = {}
                out_idx = {}
                for ci, i in enumerate(keep_prev):
                    for r, v in cols[i].items():
                        if r in inside:
                            in_entries[(r, ci)] = v
                        else:
                            if r not in out_idx:
                                out_idx[r] = len(out_idx)
                            out_entries[(out_idx[r], ci)] = v
                if out_idx:
                    Aout = SparseRationalMatrix(len(out_idx), len(keep_prev), out_entries)
                    K = kernel_basis(Aout)
                    Ain = SparseRationalMatrix(len(labs), len(keep_prev), in_entries)
                    n_bound = _rank_of(Ain * K)
                else:
                    n_bound = _rank_of(
                        SparseRationalMatrix(len(labs), len(keep_prev), in_entries)
                    )
        return n_cycles - n_bound


def _weighted_monos(n, weights, bound):
    from .foliation import weighted_monomials_up_to

    return weighted_monomials_up_to(n, weights, max(bound, -1))


def _rank_of(M):
    from .linalg import rank

    return rank(M)


def koszul_stage_cohomology(f: MultiPoly, p: int, D: int = 8, weights=None) -> dict:
    """Cohomology of O --df^--> Omega^1 --df^--> ... --df^--> Omega^p on
    filtration windows; for an isolated singularity only degree p survives,
    where the dimension is the Milnor number (top stage p = n).

    weights: optional quasi-homogeneity weights; D is then a weighted bound.
    """
    if not (0 <= p <= f.num_vars):
        raise ValueError("stage p must satisfy 0 <= p <= num_vars")
    K = _KoszulStage(f, p, D, weights)
    return {q: K.window_dim(q) for q in range(p + 1)}


# ---------------------------------------------------------------------------
# twisted (flat-function) side, naive side, reconciliation


def flat_function_cohomology(f: MultiPoly, P: int = 4, D: int = 8, graded: bool = True) -> dict:
    """Realized cohomology of the foliation induced by f (the twisted de Rham
    complex): exact classes visible at weight stage P, reported per degree
    with filtration slices; weighted slicing is used automatically when f is
    quasi-homogeneous (then covered slices are exact and stable)."""
    setup = TwistedDeRhamSetup.auto(f, P, D)
    F = setup.foliation()
    return F.realized_cohomology(
        P, setup.degree_bound(), tau=setup.tau_weights(),
        graded=graded, degrees=list(range(f.num_vars + 1)),
    )


def flat_function_stage_dims(f: MultiPoly, P: int, D: int, degrees) -> dict:
    """Plain weight-stage dims of the twisted complex (the accounting side)."""
    setup = TwistedDeRhamSetup.auto(f, P, D)
    F = setup.foliation()
    return F.stage_dims(P, setup.degree_bound(), degrees, tau=setup.tau_weights())


def naive_relative_dr(f: MultiPoly, D: int = 8, graded: bool = True, degrees=None) -> dict:
    """Cohomology of (Omega^*/(df), d_DR), the naive relative de Rham
    complex, on filtration windows.

    When f is quasi-homogeneous the windows use the detected weights (and D
    is scaled accordingly), so the report is slice-comparable with the
    twisted side."""
    from .crystal import naive_de_rham_cohomology, trivial_crystal, truncate_crystal

    n = f.num_vars
    setup = TwistedDeRhamSetup.auto(f, 0, D)
    E = trivial_crystal(integrable_foliation([f]))
    T = truncate_crystal(E, D)
    return naive_de_rham_cohomology(
        T, setup.degree_bound(), degrees=degrees or range(n + 1), graded=graded,
        weights=setup.quasi_homogeneous,
    )


@dataclass
class TwistedComparison:
    """Degreewise reconciliation between the twisted and naive sides."""

    milnor: JacobianData
    degrees: dict  # q -> {"flat": dim, "naive": dim, "equal": bool, "guaranteed": bool}
    accounting: dict  # stage P' -> stage dim at degree n-1
    accounting_steps: list  # successive differences (should each be mu)
    accounting_matches_mu: bool

    def as_dict(self):
        return {
            "milnor_number": self.milnor.milnor_number,
            "degrees": self.degrees,
            "accounting": {str(k): v for k, v in self.accounting.items()},
            "accounting_steps": self.accounting_steps,
            "accounting_matches_mu": self.accounting_matches_mu,
        }


def twisted_comparison_report(f: MultiPoly, P: int = 4, D: int = 8, jet_bound: int = 12) -> TwistedComparison:
    """Check flat = naive dims for p < n-1 and the long-exact-sequence
    accounting at finite weight cutoff.

    At stage P the twisted side's plain H^{n-1}(Q_P) carries the still
    unabsorbed singular defect; each extra weight beyond n absorbs exactly
    mu = dim J(f) of it.  The report records the stage dims for P..P+2 and
    whether successive differences equal mu.  Requires a certified isolated
    singularity (NotIsolated otherwise).
    """
    n = f.num_vars
    jd = jacobian_ring(f, jet_bound)
    if not jd.isolated:
        raise NotIsolated(
            f"no stabilization of Jacobian slices by jet bound {jet_bound}", dims=jd.jet_dims
        )
    mu = jd.milnor_number
    flat = flat_function_cohomology(f, P, D, graded=False)
    naive = naive_relative_dr(f, D, graded=False)
    degrees = {}
    for q in range(n + 1):
        fd = flat[q].dim if q in flat else 0
        nd = naive[q].dim if q in naive else 0
        degrees[q] = {
            "flat": fd,
            "naive": nd,
            "equal": fd == nd,
            "guaranteed": q < n - 1,
        }
    # window sized so the J(f)-copy of every weight up to P+2 is visible:
    # the copy at weight p sits at filtration (p-n)*wdeg(f) + n + basis degree
    setup = TwistedDeRhamSetup.auto(f, P, D)
    u = setup.quasi_homogeneous or (1,) * n
    w = max(f.weighted_degree(u), 1)
    basis_deg = max(
        (sum(ww * e for ww, e in zip(u, expo)) for expo in jd.monomial_basis), default=0
    )
    needed = (P + 2 - n) * w + sum(u) + basis_deg + w
    D_acc = max(D, -(-needed // max(u)))  # ceil division, in standard degree units
    accounting = {}
    for Pp in (P, P + 1, P + 2):
        accounting[Pp] = flat_function_stage_dims(f, Pp, D_acc, degrees=[n - 1])[n - 1]
    steps = [accounting[P + i] - accounting[P + i + 1] for i in range(2)]
    return TwistedComparison(
        milnor=jd,
        degrees=degrees,
        accounting=accounting,
        accounting_steps=steps,
        accounting_matches_mu=all(s == mu for s in steps),
    )
