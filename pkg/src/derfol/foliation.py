"""Derived foliations on affine n-space presented by two-term cotangent data.

A presentation consists of the cotangent data V --s--> W (V of rank k in
degree -1, W of rank m in degree 0), an anchor map Omega^1 -> W, and mixed
data: the image of each W-generator under eps (a quadratic expression in the
W-generators) and of each V-generator (a V (x) W expression).  The associated
de Rham algebra is the free graded algebra on x_1..x_n (degree 0), the
V-generators (degree -2, weight 1) and the W-generators (degree -1, weight 1),
with internal differential induced by s and mixed structure eps extending
anchor . d_DR as a derivation.

Sign conventions are fixed so that, for Pfaffian data (w_i, W), validity of
the mixed structure is exactly equivalent to the two polynomial identities

    d(w_i) + sum_j w_ij ^ w_j = 0        (differential ideal, nabla = d + W)
    d(W) + W ^ W = 0                     (flatness of the connection)

which pins eps(v_i) = - sum_j v_j . w_ij.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from .errors import (
    ConnectionNotFlat,
    NotALieAlgebroid,
    NotDifferentialIdeal,
    Unsupported,
)
from .forms import (
    FormMatrix,
    PolyForm,
    de_rham_d,
    matrix_integrability_defect,
    pullback_form,
    sort_with_sign,
    wedge,
)
from .linalg import Echelon, FiniteCochainComplex, SparseRationalMatrix, kernel_basis
from .mixed import GradedMixedComplex, realized_cohomology
from .poly import MultiPoly, grlex_key


# ---------------------------------------------------------------------------
# presentation data


@dataclass(frozen=True)
class TauWeights:
    """Positive integer filtration weights for variables and generators.

    tau(x^alpha v^beta eta_S) = sum alpha.var + sum beta.v + sum_{b in S} w[b];
    both differentials are tau-non-decreasing, so truncating at tau <= D gives
    honest quotient complexes.
    """

    var_weights: tuple
    v_weights: tuple
    w_weights: tuple


class FoliationPresentation:
    """Derived foliation on A^n given by cotangent data, anchor and mixed data.

    s: m x k matrix of MultiPoly (columns are images of V-generators in W)
    anchor: m x n matrix of MultiPoly (images of dx_a in W)
    eps_w[b]: {(c1, c2): MultiPoly} with c1 < c2, the image of W-generator b
    eps_v[j]: {(j2, c): MultiPoly}, the image of V-generator j in V (x) W
    """

    def __init__(self, n, k, m, s, anchor, eps_w, eps_v, provenance, data=None):
        self.n = n
        self.k = k
        self.m = m
        self.s = s
        self.anchor = anchor
        self.eps_w = eps_w
        self.eps_v = eps_v
        self.provenance = provenance
        self.data = data or {}

    def __repr__(self):
        return (
            f"FoliationPresentation(n={self.n}, k={self.k}, m={self.m}, "
            f"provenance={self.provenance!r})"
        )

    @property
    def anchor_is_identity(self) -> bool:
        if self.m != self.n:
            return False
        one = MultiPoly.constant(self.n, 1)
        for b in range(self.m):
            for a in range(self.n):
                expect = one if a == b else MultiPoly.zero(self.n)
                if self.anchor[b][a] != expect:
                    return False
        return True

    def default_tau(self) -> TauWeights:
        return TauWeights((1,) * self.n, (1,) * self.k, (1,) * self.m)

    # -- the de Rham graded mixed complex ---------------------------------

    def mixed_complex(self, P: int, D: int, tau: TauWeights = None, crystal=None) -> GradedMixedComplex:
        """Truncated DR complex: weights <= P, filtration degree <= D.

        crystal, when given, is (rank, omega) with omega[sigma][rho] a
        W-valued connection entry {c: MultiPoly}; the module generators have
        degree 0 and filtration weight 0.
        """
        tau = tau or self.default_tau()
        return _build_mixed_complex(self, P, D, tau, crystal)

    def realized_cohomology(self, P: int, D: int, tau=None, crystal=None,
                            graded=False, degrees=None):
        tau = tau or self.default_tau()
        build = lambda PP, DD: self.mixed_complex(PP, DD, tau=tau, crystal=crystal)
        return realized_cohomology(
            build, P, D,
            tau_of=lambda base: _tau_of(base, tau),
            pad=self.tau_pad(tau, crystal),
            graded=graded,
            degrees=degrees,
        )

    def stage_dims(self, P: int, D: int, degrees, tau=None, crystal=None) -> dict:
        """Plain weight-stage dims H(Q_P) per realized degree (no exactness
        refinement); the long-exact-sequence accounting object."""
        from .mixed import stage_dims as _stage

        tau = tau or self.default_tau()
        build = lambda PP, DD: self.mixed_complex(PP, DD, tau=tau, crystal=crystal)
        return _stage(
            build, P, D,
            tau_of=lambda base: _tau_of(base, tau),
            pad=self.tau_pad(tau, crystal),
            degrees=degrees,
        )

    def tau_pad(self, tau: TauWeights, crystal=None) -> int:
        """Bound on the filtration raise of d and eps for these weights."""

        def wdeg(g):
            return max(g.weighted_degree(tau.var_weights), 0)

        pad = 1
        for b in range(self.m):
            for j in range(self.k):
                g = self.s[b][j]
                if not g.is_zero():
                    pad = max(pad, wdeg(g) + tau.w_weights[b] - tau.v_weights[j])
            for a in range(self.n):
                g = self.anchor[b][a]
                if not g.is_zero():
                    pad = max(pad, wdeg(g) + tau.w_weights[b] - tau.var_weights[a])
        for b in range(self.m):
            for (c1, c2), g in self.eps_w[b].items():
                if not g.is_zero():
                    pad = max(
                        pad,
                        wdeg(g) + tau.w_weights[c1] + tau.w_weights[c2] - tau.w_weights[b],
                    )
        for j in range(self.k):
            for (j2, c), g in self.eps_v[j].items():
                if not g.is_zero():
                    pad = max(
                        pad,
                        wdeg(g) + tau.v_weights[j2] + tau.w_weights[c] - tau.v_weights[j],
                    )
        if crystal is not None:
            for row in crystal[1]:
                for entry in row:
                    for c, g in entry.items():
                        if not g.is_zero():
                            pad = max(pad, wdeg(g) + tau.w_weights[c])
        return pad

    def validate(self, P: int = 3, D: int = 6):
        return self.mixed_complex(P, D).validate()


def _zero_matrix(rows, cols, n):
    z = MultiPoly.zero(n)
    return tuple(tuple(z for _ in range(cols)) for _ in range(rows))


def _identity_matrix(n):
    one = MultiPoly.constant(n, 1)
    z = MultiPoly.zero(n)
    return tuple(tuple(one if i == j else z for j in range(n)) for i in range(n))


# ---------------------------------------------------------------------------
# complex builder


def weighted_monomials_up_to(n: int, weights, bound: int):
    """Exponent tuples with weighted degree <= bound, graded-lex sorted."""
    if bound < 0:
        return []
    out = []

    def rec(prefix, a, remaining):
        if a == n:
            out.append(tuple(prefix))
            return
        e = 0
        while True:
            cost = e * weights[a]
            if cost > remaining:
                break
            prefix.append(e)
            rec(prefix, a + 1, remaining - cost)
            prefix.pop()
            e += 1

    rec([], 0, bound)
    out.sort(key=grlex_key)
    return out


def _compositions(total: int, parts: int):
    """All tuples of nonnegative ints of given length summing to total."""
    if parts == 0:
        return [()] if total == 0 else []
    out = []

    def rec(prefix, idx, remaining):
        if idx == parts - 1:
            out.append(tuple(prefix) + (remaining,))
            return
        for e in range(remaining + 1):
            prefix.append(e)
            rec(prefix, idx + 1, remaining - e)
            prefix.pop()

    rec([], 0, total)
    out.sort()
    return out


def _tau_of(label, tau: TauWeights):
    rho, alpha, beta, S = label
    t = sum(e * w for e, w in zip(alpha, tau.var_weights))
    t += sum(e * w for e, w in zip(beta, tau.v_weights))
    t += sum(tau.w_weights[b] for b in S)
    return t


def _build_mixed_complex(F: FoliationPresentation, P, D, tau, crystal):
    n, k, m = F.n, F.k, F.m
    rank = crystal[0] if crystal else 1
    omega = crystal[1] if crystal else None

    # bases per (weight, degree): label = (rho, alpha, beta, S)
    bases = {}
    index = {}
    for p in range(P + 1):
        for nv in range(p + 1):
            q = p - nv
            if q > m:
                continue
            deg = -2 * nv - q
            for S in combinations(range(m), q):
                w_cost = sum(tau.w_weights[b] for b in S)
                for beta in _compositions(nv, k):
                    v_cost = sum(e * w for e, w in zip(beta, tau.v_weights))
                    budget = D - w_cost - v_cost
                    if budget < 0:
                        continue
                    for alpha in weighted_monomials_up_to(n, tau.var_weights, budget):
                        for rho in range(rank):
                            bases.setdefault((p, deg), []).append((rho, alpha, beta, S))
    for key, labels in bases.items():
        labels.sort(key=lambda L: (L[3], L[2], grlex_key(L[1]), L[0]))
        index[key] = {lab: i for i, lab in enumerate(labels)}

    def add_term(acc, p, deg, label, coeff):
        pos = index.get((p, deg), {}).get(label)
        if pos is None:
            return  # outside the (P, D) truncation
        s = acc.get(pos, 0) + coeff
        if s:
            acc[pos] = s
        else:
            acc.pop(pos, None)

    def emit(acc, p, deg, rho, alpha_extra, poly, beta, Sgen, Sold, presign):
        """Accumulate poly * x^alpha_extra * v^beta * (eta_{Sgen} ^ eta_{Sold})."""
        merged, sign = sort_with_sign(Sgen + Sold)
        if sign == 0:
            return
        for e_extra, c in poly.terms.items():
            alpha = tuple(a + b for a, b in zip(alpha_extra, e_extra))
            add_term(acc, p, deg, (rho, alpha, beta, merged), presign * sign * c)

    d_mats = {}
    eps_mats = {}
    for (p, deg), labels in sorted(bases.items()):
        d_entries = {}
        e_entries = {}
        for col, (rho, alpha, beta, S) in enumerate(labels):
            # internal differential: v_j -> s(v_j)
            for j in range(k):
                if not beta[j]:
                    continue
                beta2 = tuple(e - 1 if jj == j else e for jj, e in enumerate(beta))
                for b in range(m):
                    sc = F.s[b][j]
                    if sc.is_zero():
                        continue
                    acc = {}
                    emit(acc, p, deg + 1, rho, alpha, sc * beta[j], beta2, (b,), S, 1)
                    for pos, val in acc.items():
                        prev = d_entries.get((pos, col), 0) + val
                        if prev:
                            d_entries[(pos, col)] = prev
                        else:
                            d_entries.pop((pos, col), None)

            acc = {}
            # eps on the crystal generator: e_rho -> sum_sigma e_sigma . omega_{sigma rho}
            if omega is not None:
                for sigma in range(rank):
                    went = omega[sigma][rho]
                    for c, g in went.items():
                        if g.is_zero():
                            continue
                        emit(acc, p + 1, deg - 1, sigma, alpha, g, beta, (c,), S, 1)
            # eps on x^alpha: anchor . d_DR
            for a in range(n):
                if not alpha[a]:
                    continue
                alpha2 = tuple(e - 1 if aa == a else e for aa, e in enumerate(alpha))
                for b in range(m):
                    g = F.anchor[b][a]
                    if g.is_zero():
                        continue
                    emit(acc, p + 1, deg - 1, rho, alpha2, g * alpha[a], beta, (b,), S, 1)
            # eps on v_j: sum (j2, c) coefficients
            for j in range(k):
                if not beta[j]:
                    continue
                beta2 = tuple(e - 1 if jj == j else e for jj, e in enumerate(beta))
                for (j2, c), g in F.eps_v[j].items():
                    if g.is_zero():
                        continue
                    beta3 = tuple(e + 1 if jj == j2 else e for jj, e in enumerate(beta2))
                    emit(acc, p + 1, deg - 1, rho, alpha, g * beta[j], beta3, (c,), S, 1)
            # eps on eta_{S_t}: quadratic W expression, Koszul sign (-1)^(t-1),
            # the remaining eta's are re-merged with explicit signs
            for t, b in enumerate(S):
                rest = S[:t] + S[t + 1 :]
                presign = -1 if t % 2 else 1
                for (c1, c2), g in F.eps_w[b].items():
                    if g.is_zero():
                        continue
                    emit(acc, p + 1, deg - 1, rho, alpha, g, beta, (c1, c2), rest, presign)
            for pos, val in acc.items():
                prev = e_entries.get((pos, col), 0) + val
                if prev:
                    e_entries[(pos, col)] = prev
                else:
                    e_entries.pop((pos, col), None)
        if d_entries:
            d_mats[(p, deg)] = d_entries
        if e_entries:
            eps_mats[(p, deg)] = e_entries

    pieces = {}
    mixed = {}
    label_map = {}
    for p in range(P + 1):
        degs = sorted(deg for (pp, deg) in bases if pp == p)
        if not degs:
            continue
        dims = {deg: len(bases[(p, deg)]) for deg in degs}
        diffs = {}
        for deg in degs:
            entries = d_mats.get((p, deg))
            if entries:
                diffs[deg] = SparseRationalMatrix(
                    dims.get(deg + 1, len(bases.get((p, deg + 1), ()))), dims[deg], entries
                )
        pieces[p] = FiniteCochainComplex(dims, diffs, check=False)
        for deg in degs:
            label_map[(p, deg)] = tuple(bases[(p, deg)])
        eps_of_p = {}
        for deg in degs:
            entries = eps_mats.get((p, deg))
            if entries:
                eps_of_p[deg] = SparseRationalMatrix(
                    len(bases.get((p + 1, deg - 1), ())), dims[deg], entries
                )
        if eps_of_p:
            mixed[p] = eps_of_p

    return GradedMixedComplex(pieces, mixed, labels=label_map, weight_cutoff=P)


# ---------------------------------------------------------------------------
# constructors


def de_rham_foliation(n: int) -> FoliationPresentation:
    """The tautological foliation: k = 0, W = Omega^1, anchor = identity,
    mixed structure = de Rham differential."""
    return FoliationPresentation(
        n, 0, n,
        s=_zero_matrix(n, 0, n),
        anchor=_identity_matrix(n),
        eps_w=[{} for _ in range(n)],
        eps_v=[],
        provenance="de_rham",
    )


def punctual_foliation(n: int) -> FoliationPresentation:
    """The trivial foliation: DR = O_X concentrated in weight 0."""
    return FoliationPresentation(
        n, 0, 0,
        s=_zero_matrix(0, 0, n),
        anchor=_zero_matrix(0, n, n),
        eps_w=[],
        eps_v=[],
        provenance="punctual",
    )


def _vf_apply(rho_row, f: MultiPoly) -> MultiPoly:
    """Apply the vector field sum_a rho_row[a] d/dx_a to f."""
    n = f.num_vars
    out = MultiPoly.zero(n)
    for a in range(n):
        if not rho_row[a].is_zero():
            out = out + rho_row[a] * f.partial(a)
    return out


def lie_algebroid_foliation(n: int, r: int, rho, c) -> FoliationPresentation:
    """Smooth foliation from a Lie algebroid: rank-r bundle with anchor rho
    (r x n matrix of MultiPoly) and structure functions c[i][j][l].

    Verifies antisymmetry, the anchor morphism property
    [rho_i, rho_j] = sum_l c_ij^l rho_l, and the Jacobi identity for the
    bracket extended by the Leibniz rule; raises NotALieAlgebroid with the
    violated instance otherwise.
    """
    zero = MultiPoly.zero(n)

    def cc(i, j, l):
        return c[i][j][l]

    for i in range(r):
        for j in range(r):
            for l in range(r):
                if cc(i, j, l) + cc(j, i, l) != zero:
                    raise NotALieAlgebroid(
                        f"antisymmetry fails: c[{i}][{j}][{l}] != -c[{j}][{i}][{l}]",
                        witness=("antisymmetry", i, j, l),
                    )
    # anchor morphism: [rho_i, rho_j] = sum_l c_ij^l rho_l, as vector fields
    for i in range(r):
        for j in range(i + 1, r):
            for a in range(n):
                bracket = _vf_apply(rho[i], rho[j][a]) - _vf_apply(rho[j], rho[i][a])
                rhs = zero
                for l in range(r):
                    rhs = rhs + cc(i, j, l) * rho[l][a]
                if bracket != rhs:
                    raise NotALieAlgebroid(
                        f"anchor is not a bracket morphism on (e_{i}, e_{j})",
                        witness=("anchor", i, j, a, bracket - rhs),
                    )
    # Jacobi with anchor-twisted structure functions
    for i in range(r):
        for j in range(i + 1, r):
            for kk in range(j + 1, r):
                for mm in range(r):
                    total = zero
                    for (a, b, d) in ((i, j, kk), (j, kk, i), (kk, i, j)):
                        term = _vf_apply(rho[a], cc(b, d, mm))
                        for l in range(r):
                            term = term + cc(b, d, l) * cc(a, l, mm)
                        total = total + term
                    if not total.is_zero():
                        raise NotALieAlgebroid(
                            f"Jacobi fails on (e_{i}, e_{j}, e_{kk}) against e_{mm}",
                            witness=("jacobi", i, j, kk, mm, total),
                        )

    eps_w = []
    for l in range(r):
        quad = {}
        for i in range(r):
            for j in range(i + 1, r):
                g = -cc(i, j, l)
                if not g.is_zero():
                    quad[(i, j)] = g
        eps_w.append(quad)
    anchor = tuple(tuple(rho[i][a] for a in range(n)) for i in range(r))
    return FoliationPresentation(
        n, 0, r,
        s=_zero_matrix(r, 0, n),
        anchor=anchor,
        eps_w=eps_w,
        eps_v=[],
        provenance="lie_algebroid",
        data={"rho": rho, "c": c, "rank": r},
    )


def _ideal_wedge_solvable(dw: PolyForm, forms, degree_bound: int) -> bool:
    """Is dw = sum_j eta_j ^ w_j solvable with polynomial 1-forms eta_j of
    coefficient degree <= degree_bound?  Exact linear solve on coefficients."""
    n = dw.num_vars
    from .poly import monomials_up_to_degree

    monos = monomials_up_to_degree(n, degree_bound)
    cols = []  # each: dict (S, expo) -> Fraction for one unknown eta coefficient
    for w in forms:
        for expo in monos:
            for a in range(n):
                eta = PolyForm(n, 1, {(a,): MultiPoly.monomial(n, expo)})
                prod = wedge(eta, w)
                col = {}
                for S, f in prod.terms.items():
                    for e, cf in f.terms.items():
                        col[(S, e)] = cf
                cols.append(col)
    rows = {}
    keys = {}

    def key_of(Se):
        if Se not in keys:
            keys[Se] = len(keys)
        return keys[Se]

    target = {}
    for S, f in dw.terms.items():
        for e, cf in f.terms.items():
            target[key_of((S, e))] = cf
    mat_cols = []
    for col in cols:
        mat_cols.append({key_of(Se): cf for Se, cf in col.items()})
    # solvable iff target is in the column span: rank test
    ech = Echelon(len(keys))
    for col in mat_cols:
        ech.add(col)
    return ech.contains(target)


def pfaffian_foliation(n: int, forms, W: FormMatrix = None, solve_bound: int = None) -> FoliationPresentation:
    """Quasi-smooth rigid foliation from 1-forms w_1..w_k and a connection W.

    Verifies the two polynomial identities exactly:
      d(w_i) + sum_j W_ij ^ w_j = 0   (NotDifferentialIdeal on failure, with
                                       a solvability check over all candidate
                                       connections as the witness's verdict)
      d(W) + W ^ W = 0                (ConnectionNotFlat with defect matrix)

    The mixed structure is eps(v_i) = - sum_j v_j . W_ij, the unique
    convention making validity of the built complex equivalent to the two
    conditions above.
    """
    k = len(forms)
    for w in forms:
        if w.num_vars != n or w.form_degree != 1:
            raise ValueError("Pfaffian generators must be 1-forms on A^n")
    if W is None:
        W = FormMatrix.zero(k, n, 1)
    if W.rows != k or W.cols != k:
        raise ValueError(f"connection matrix must be {k}x{k}")
    if solve_bound is None:
        solve_bound = max((w.max_poly_degree() for w in forms), default=0) + 3

    for i, w in enumerate(forms):
        defect = de_rham_d(w)
        for j in range(k):
            defect = defect + wedge(W.entry(i, j), forms[j])
        if not defect.is_zero():
            solvable = _ideal_wedge_solvable(de_rham_d(w), forms, solve_bound)
            detail = (
                "supplied connection row is wrong but some connection works"
                if solvable
                else f"d(w_{i}) is not in the ideal (w_1..w_k)^Omega^1 "
                f"(checked multipliers up to degree {solve_bound})"
            )
            raise NotDifferentialIdeal(
                f"differential ideal condition fails at form {i}: {detail}",
                index=i,
                defect=defect,
            )
    flat_defect = matrix_integrability_defect(W)
    if not flat_defect.is_zero():
        raise ConnectionNotFlat("dW + W^W is nonzero", defect=flat_defect)

    s = tuple(
        tuple(forms[j].coefficient((a,)) for j in range(k)) for a in range(n)
    )
    eps_v = []
    for i in range(k):
        entry = {}
        for j in range(k):
            wij = W.entry(i, j)
            for (cidx,), g in wij.terms.items():
                if not g.is_zero():
                    entry[(j, cidx)] = -g
        eps_v.append(entry)
    return FoliationPresentation(
        n, k, n,
        s=s,
        anchor=_identity_matrix(n),
        eps_w=[{} for _ in range(n)],
        eps_v=eps_v,
        provenance="pfaffian",
        data={"forms": tuple(forms), "connection": W},
    )


def integrable_foliation(f_list) -> FoliationPresentation:
    """The foliation induced by the map f = (f_1..f_m): A^n -> A^m; equals
    the Pfaffian foliation on (df_1..df_m) with zero connection."""
    if not f_list:
        raise ValueError("need at least one component")
    n = f_list[0].num_vars
    forms = [de_rham_d(PolyForm.from_poly(f)) for f in f_list]
    F = pfaffian_foliation(n, forms, FormMatrix.zero(len(f_list), n, 1))
    F.provenance = "integrable"
    F.data["map"] = tuple(f_list)
    return F


def pullback_pfaffian(F: FoliationPresentation, phi) -> FoliationPresentation:
    """Pull a Pfaffian-shaped foliation on A^m back along phi: A^n -> A^m.

    Forms and connection are substituted and differentials pushed forward;
    both Pfaffian conditions are re-verified on the result (they are stable
    under pullback, so a failure here is an internal error)."""
    if "forms" not in F.data:
        raise Unsupported("pullback requires Pfaffian or integrable provenance")
    if len(phi) != F.n:
        raise ValueError("phi must have one component per target variable")
    n_new = phi[0].num_vars
    forms = [pullback_form(w, phi) for w in F.data["forms"]]
    Wold = F.data["connection"]
    entries = {}
    for (i, j), w in Wold.entries.items():
        v = pullback_form(w, phi)
        if not v.is_zero():
            entries[(i, j)] = v
    Wnew = FormMatrix(Wold.rows, Wold.cols, n_new, 1, entries)
    G = pfaffian_foliation(n_new, forms, Wnew)
    G.provenance = "pullback"
    G.data["base"] = F
    G.data["map"] = tuple(phi)
    return G


# ---------------------------------------------------------------------------
# classification, truncation, singular locus


def _minors(F: FoliationPresentation):
    """All k x k minors of the m x k matrix s, by determinant expansion."""
    n, k, m = F.n, F.k, F.m
    if k == 0 or k > m:
        return []
    out = []
    for rows in combinations(range(m), k):
        out.append(_det([[F.s[r][j] for j in range(k)] for r in rows], n))
    return out


def _det(mat, n):
    size = len(mat)
    if size == 0:
        return MultiPoly.constant(n, 1)
    if size == 1:
        return mat[0][0]
    out = MultiPoly.zero(n)
    for j in range(size):
        if mat[0][j].is_zero():
            continue
        minor = [[row[jj] for jj in range(size) if jj != j] for row in mat[1:]]
        term = mat[0][j] * _det(minor, n)
        out = out + (term if j % 2 == 0 else -term)
    return out


def _unit_ideal(gens, n: int, degree_bound: int) -> bool:
    """Does 1 = sum h_i g_i have a solution with deg h_i <= degree_bound?"""
    from .poly import monomials_up_to_degree

    if any(g.terms.get((0,) * n) for g in gens):
        return True
    ech = Echelon(0)
    keys = {}

    def key_of(e):
        if e not in keys:
            keys[e] = len(keys)
        return keys[e]

    target_key = key_of((0,) * n)
    for g in gens:
        for expo in monomials_up_to_degree(n, degree_bound):
            prod = MultiPoly.monomial(n, expo) * g
            ech.add({key_of(e): cf for e, cf in prod.terms.items()})
    return ech.contains({target_key: Fraction(1)})


def _eval_at(poly: MultiPoly, point):
    total = Fraction(0)
    for e, cf in poly.terms.items():
        v = cf
        for a, k in enumerate(e):
            for _ in range(k):
                v *= point[a]
        total += v
    return total


@dataclass
class Classification:
    smooth: bool
    quasi_smooth: bool
    rigid: bool
    smooth_status: str  # "certified" | "witnessed_non_smooth" | "undetermined"
    rigid_checked_bound: int
    witness_point: tuple = None

    def as_dict(self):
        d = {
            "smooth": self.smooth,
            "quasi_smooth": self.quasi_smooth,
            "rigid": self.rigid,
            "smooth_status": self.smooth_status,
            "rigid_checked_bound": self.rigid_checked_bound,
        }
        if self.witness_point is not None:
            d["witness_point"] = [str(v) for v in self.witness_point]
        return d


def classify(F: FoliationPresentation, degree_bound: int = 6) -> Classification:
    """Smooth / quasi-smooth / rigid classification with finite certificates.

    smooth: k = 0, or the ideal of maximal minors of s contains 1 with
    multipliers up to degree_bound (certified); a rational point where all
    minors vanish certifies non-smoothness; otherwise undetermined.
    rigid: the composite Omega^1 -> W -> W/im(s) is surjective on every
    filtration slice up to degree_bound.
    """
    n, k, m = F.n, F.k, F.m
    if k == 0:
        smooth, status, witness = True, "certified", None
    elif k > m:
        smooth, status, witness = False, "witnessed_non_smooth", None
    else:
        gens = _minors(F)
        if _unit_ideal(gens, n, degree_bound):
            smooth, status, witness = True, "certified", None
        else:
            smooth, status, witness = False, "undetermined", None
            points = [tuple(Fraction(0) for _ in range(n))]
            for a in range(n):
                points.append(tuple(Fraction(1 if b == a else 0) for b in range(n)))
            for pt in points:
                if all(_eval_at(g, pt) == 0 for g in gens):
                    status, witness = "witnessed_non_smooth", pt
                    break

    rigid = _rigid_up_to(F, degree_bound)
    return Classification(
        smooth=smooth,
        quasi_smooth=True,
        rigid=rigid,
        smooth_status=status,
        rigid_checked_bound=degree_bound,
        witness_point=witness,
    )


def _rigid_up_to(F: FoliationPresentation, bound: int) -> bool:
    """Surjectivity of [anchor | s] onto every W-slice of degree <= bound."""
    from .poly import monomials_up_to_degree

    n, k, m = F.n, F.k, F.m
    if m == 0:
        return True
    target_index = {}

    def tkey(b, e):
        key = (b, e)
        if key not in target_index:
            target_index[key] = len(target_index)
        return target_index[key]

    ech = Echelon(0)
    monos = monomials_up_to_degree(n, bound)
    for expo in monos:
        x = MultiPoly.monomial(n, expo)
        for a in range(n):
            col = {}
            for b in range(m):
                g = F.anchor[b][a] * x
                for e, cf in g.terms.items():
                    if sum(e) <= bound:
                        col[tkey(b, e)] = col.get(tkey(b, e), 0) + cf
            ech.add({kk: v for kk, v in col.items() if v})
        for j in range(k):
            col = {}
            for b in range(m):
                g = F.s[b][j] * x
                for e, cf in g.terms.items():
                    if sum(e) <= bound:
                        col[tkey(b, e)] = col.get(tkey(b, e), 0) + cf
            ech.add({kk: v for kk, v in col.items() if v})
    needed = m * len(monos)
    return ech.rank == needed


@dataclass
class SingularFoliationGens:
    """Generators of the truncation D = ker(Omega^1 -> H^0(L)) up to a degree."""

    n: int
    generators: list
    degree_bound: int

    def as_dict(self):
        return {
            "n": self.n,
            "degree_bound": self.degree_bound,
            "generators": [form_to_doc(g) for g in self.generators],
        }


def truncate(F: FoliationPresentation, degree_bound: int) -> SingularFoliationGens:
    """Module generators of ker(Omega^1 -> coker(s)) on slices up to the bound.

    Membership anchor(omega) in im(s) is decided by an exact linear solve with
    multiplier degrees up to degree_bound + deg(s) + 2.
    """
    from .poly import monomials_up_to_degree

    n, k, m = F.n, F.k, F.m
    pad = 2 + max((F.s[b][j].degree() for b in range(m) for j in range(k)), default=0)
    solve_bound = degree_bound + pad

    # columns of the membership system: anchor on omega-monomials (unknown
    # part of interest) and -s on multiplier monomials
    target_index = {}

    def tkey(b, e):
        key = (b, e)
        if key not in target_index:
            target_index[key] = len(target_index)
        return target_index[key]

    omega_cols = []  # (label, image column)
    for expo in monomials_up_to_degree(n, degree_bound):
        x = MultiPoly.monomial(n, expo)
        for a in range(n):
            col = {}
            for b in range(m):
                g = F.anchor[b][a] * x
                for e, cf in g.terms.items():
                    kk = tkey(b, e)
                    col[kk] = col.get(kk, 0) + cf
            omega_cols.append(((expo, a), {kk: v for kk, v in col.items() if v}))
    s_cols = []
    for expo in monomials_up_to_degree(n, solve_bound):
        x = MultiPoly.monomial(n, expo)
        for j in range(k):
            col = {}
            for b in range(m):
                g = F.s[b][j] * x
                for e, cf in g.terms.items():
                    kk = tkey(b, e)
                    col[kk] = col.get(kk, 0) - cf
            s_cols.append({kk: v for kk, v in col.items() if v})

    nrows = len(target_index)
    ncols = len(omega_cols) + len(s_cols)
    entries = {}
    for ci, (_, col) in enumerate(omega_cols):
        for rk, v in col.items():
            entries[(rk, ci)] = v
    for cj, col in enumerate(s_cols):
        for rk, v in col.items():
            entries[(rk, len(omega_cols) + cj)] = v
    M = SparseRationalMatrix(nrows, ncols, entries)
    K = kernel_basis(M)

    # project kernel vectors to the omega-coordinates, echelonize by slices
    omega_labels = [lab for lab, _ in omega_cols]
    pos_of = {lab: i for i, lab in enumerate(omega_labels)}
    kernel_vecs = []
    for j in range(K.cols):
        vec = {i: v for i, v in K.column(j).items() if i < len(omega_cols)}
        if vec:
            kernel_vecs.append(vec)

    def vec_degree(vec):
        return max(sum(omega_labels[i][0]) for i in vec)

    kernel_vecs.sort(key=lambda vec: (vec_degree(vec), sorted(vec.items())))
    generators = []
    gen_vecs = []
    for t in range(degree_bound + 1):
        span = Echelon(len(omega_cols))
        for gv in gen_vecs:
            gdeg = max(sum(omega_labels[i][0]) for i in gv)
            for expo in monomials_up_to_degree(n, t - gdeg):
                shifted = {}
                ok = True
                for i, v in gv.items():
                    e0, a = omega_labels[i]
                    e2 = tuple(x + y for x, y in zip(e0, expo))
                    lab = (e2, a)
                    if lab not in pos_of:
                        ok = False
                        break
                    shifted[pos_of[lab]] = shifted.get(pos_of[lab], 0) + v
                if ok:
                    span.add(shifted)
        for vec in kernel_vecs:
            if vec_degree(vec) != t:
                continue
            if span.add(dict(vec)):
                gen_vecs.append(vec)
                terms = {}
                for i, v in vec.items():
                    e, a = omega_labels[i]
                    terms.setdefault((a,), {})[e] = v
                form = PolyForm(
                    n, 1, {S: MultiPoly(n, tm) for S, tm in terms.items()}
                )
                generators.append(form)
    return SingularFoliationGens(n=n, generators=generators, degree_bound=degree_bound)


@dataclass
class SingularLocusReport:
    ideal_gens: list
    zero_dimensional: bool
    quotient_dim: int  # None when not certified zero-dimensional
    jet_dims: list
    stabilized_at: int = None

    def as_dict(self):
        return {
            "ideal_gens": [poly_to_doc(g) for g in self.ideal_gens],
            "zero_dimensional": self.zero_dimensional,
            "quotient_dim": self.quotient_dim,
            "jet_dims": self.jet_dims,
            "stabilized_at": self.stabilized_at,
        }


def quotient_jet_dims(gens, n: int, jet_bound: int):
    """dim Q[x]_{<=j} / (span of monomial multiples of gens) for j <= bound."""
    from .poly import monomials_up_to_degree

    dims = []
    for j in range(jet_bound + 1):
        ech = Echelon(0)
        keys = {}

        def key_of(e):
            if e not in keys:
                keys[e] = len(keys)
            return keys[e]

        for g in gens:
            gdeg = g.degree()
            if gdeg < 0:
                continue
            for expo in monomials_up_to_degree(n, j - gdeg):
                prod = MultiPoly.monomial(n, expo) * g
                ech.add({key_of(e): cf for e, cf in prod.terms.items() if sum(e) <= j})
        total = len(monomials_up_to_degree(n, j))
        dims.append(total - ech.rank)
    return dims


def singular_locus(F: FoliationPresentation, jet_bound: int = 12) -> SingularLocusReport:
    """Ideal of k x k minors of s with zero-dimensionality by jet stabilization.

    Requires a quasi-smooth presentation with identity anchor (Pfaffian or
    integrable provenance)."""
    if not F.anchor_is_identity:
        raise Unsupported("singular locus needs an identity-anchor presentation")
    gens = _minors(F)
    dims = quotient_jet_dims(gens, F.n, jet_bound)
    stabilized = None
    for j in range(1, len(dims)):
        if dims[j] == dims[j - 1]:
            stabilized = j
            break
    if stabilized is not None:
        return SingularLocusReport(
            ideal_gens=gens,
            zero_dimensional=True,
            quotient_dim=dims[stabilized],
            jet_dims=dims,
            stabilized_at=stabilized,
        )
    return SingularLocusReport(
        ideal_gens=gens,
        zero_dimensional=False,
        quotient_dim=None,
        jet_dims=dims,
    )


# ---------------------------------------------------------------------------
# serialization helpers shared with the CLI


def poly_to_doc(f: MultiPoly):
    return [
        {"exponents": list(e), "numerator": c.numerator, "denominator": c.denominator}
        for e, c in f.sorted_terms()
    ]


def form_to_doc(w: PolyForm):
    return [
        {"indices": list(S), "coefficient": poly_to_doc(g)}
        for S, g in sorted(w.terms.items())
    ]
