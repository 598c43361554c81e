"""Graded mixed complexes, validation, realization and cutoff-stable cohomology.

A graded mixed complex here is a finite family of cochain complexes E(p),
p = 0..P, with extra maps eps_p : E(p)^i -> E(p+1)^{i-1} squaring to zero and
anticommuting with the internal differentials.  The realization places
E(p)^i in total degree i + 2p and carries the total differential d + eps.

Weight cutoffs make the infinite product of the realization finite; reported
cohomology dimensions are the classes that survive one extra cutoff step
(image of H(cutoff+1) in H(cutoff)), with a stability flag from the next
step.  Dimensions of genuinely unstable degrees keep growing with the cutoff
and are reported as such, never extrapolated.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .linalg import (
    Echelon,
    FiniteCochainComplex,
    SparseRationalMatrix,
    image_echelon,
    kernel_basis,
    rank as _rank,
)


@dataclass(frozen=True)
class Violation:
    kind: str  # "d_squared" | "eps_squared" | "anticommute" | "shape"
    weight: int
    degree: int
    detail: str = ""

    def __str__(self):
        return f"{self.kind} fails at weight {self.weight}, degree {self.degree} {self.detail}".rstrip()


class GradedMixedComplex:
    """Weight-indexed cochain complexes with a mixed structure.

    pieces: weight p -> FiniteCochainComplex E(p)
    mixed:  weight p -> {degree i: matrix E(p)^i -> E(p+1)^{i-1}} for p < P
    labels: optional (p, i) -> tuple of hashable basis labels, used to project
            between different cutoffs of the same construction.
    weight_cutoff: the truncation weight P, or None when the complex is
            complete (nothing was cut; e.g. the unit, or a finite CE complex).
    """

    def __init__(self, pieces: dict, mixed: dict, labels=None, weight_cutoff=None):
        self.pieces = {p: C for p, C in pieces.items() if C.dims}
        self.mixed = {}
        for p, eps_maps in mixed.items():
            kept = {i: M for i, M in eps_maps.items() if not M.is_zero()}
            if kept:
                self.mixed[p] = kept
        self.labels = labels
        self.weight_cutoff = weight_cutoff

    @property
    def max_weight(self) -> int:
        return max(self.pieces, default=0)

    def weights(self):
        return sorted(self.pieces)

    def piece(self, p: int) -> FiniteCochainComplex:
        return self.pieces.get(p, FiniteCochainComplex({}, {}, check=False))

    def dim(self, p: int, i: int) -> int:
        return self.piece(p).dim(i)

    def d(self, p: int, i: int) -> SparseRationalMatrix:
        return self.piece(p).d(i)

    def eps(self, p: int, i: int) -> SparseRationalMatrix:
        M = self.mixed.get(p, {}).get(i)
        if M is None:
            return SparseRationalMatrix(self.dim(p + 1, i - 1), self.dim(p, i))
        return M

    def degrees(self, p: int):
        return self.piece(p).degree_range()

    def validate(self) -> list:
        """Check d.d = 0, eps.eps = 0 and d.eps + eps.d = 0 matrix by matrix.

        Returns the list of violations (empty means the structure is valid);
        the first entry names the weight/degree of the first failure.
        """
        out = []
        for p in self.weights():
            C = self.piece(p)
            for i in C.degree_range():
                # shapes of stored mixed maps
                M = self.mixed.get(p, {}).get(i)
                if M is not None and (M.rows, M.cols) != (self.dim(p + 1, i - 1), self.dim(p, i)):
                    out.append(Violation("shape", p, i, f"eps is {M.rows}x{M.cols}"))
                    continue
                if not (C.d(i + 1) * C.d(i)).is_zero():
                    out.append(Violation("d_squared", p, i))
                # anticommutation: eps(i+1) d(i) + d'(i-1) eps(i) = 0,
                # valued in E(p+1)^i
                anti = self.eps(p, i + 1) * C.d(i) + self.piece(p + 1).d(i - 1) * self.eps(p, i)
                if not anti.is_zero():
                    out.append(Violation("anticommute", p, i))
                if not (self.eps(p + 1, i - 1) * self.eps(p, i)).is_zero():
                    out.append(Violation("eps_squared", p, i))
        return out

    def assert_valid(self):
        violations = self.validate()
        if violations:
            raise ValueError("invalid graded mixed complex: " + str(violations[0]))

    def label(self, p: int, i: int):
        if self.labels is None:
            return tuple((p, i, k) for k in range(self.dim(p, i)))
        return self.labels.get((p, i), ())


def unit_complex() -> GradedMixedComplex:
    """The monoidal unit: Q in weight 0, degree 0."""
    piece = FiniteCochainComplex({0: 1}, {}, check=False)
    return GradedMixedComplex({0: piece}, {}, labels={(0, 0): ("1",)})


class RealizedComplex:
    """Realization of a graded mixed complex at a weight cutoff.

    The degree-q space is the direct sum of E(p)^{q-2p} over stored weights,
    with block differential d on the diagonal and eps on the superdiagonal.
    """

    def __init__(self, E: GradedMixedComplex, window=None):
        self.weight_cutoff = E.max_weight
        blocks = {}  # q -> list of (p, i, offset, dim)
        labels = {}  # q -> tuple of (p, base label)
        for p in E.weights():
            for i in E.degrees(p):
                d = E.dim(p, i)
                if not d:
                    continue
                q = i + 2 * p
                if window is not None and not (window[0] <= q <= window[1]):
                    continue
                blocks.setdefault(q, []).append([p, i, 0, d])
        for q in blocks:
            blocks[q].sort(key=lambda b: b[0])
            off = 0
            lab = []
            for b in blocks[q]:
                b[2] = off
                off += b[3]
                base = E.label(b[0], b[1])
                lab.extend((b[0], x) for x in base)
            labels[q] = tuple(lab)
        self.blocks = {q: [tuple(b) for b in bs] for q, bs in blocks.items()}
        self.labels = labels
        self.degree_window = window

        dims = {q: sum(b[3] for b in bs) for q, bs in self.blocks.items()}
        diffs = {}
        for q, bs in self.blocks.items():
            target = {(p, i): (off, d) for (p, i, off, d) in self.blocks.get(q + 1, [])}
            entries = {}
            for (p, i, off, d) in bs:
                for M, tkey in ((E.d(p, i), (p, i + 1)), (E.eps(p, i), (p + 1, i - 1))):
                    if tkey not in target or M.is_zero():
                        continue
                    toff = target[tkey][0]
                    for (r, c), v in M.entries.items():
                        entries[(toff + r, off + c)] = v
            if entries:
                diffs[q] = SparseRationalMatrix(dims.get(q + 1, 0), dims.get(q, 0), entries)
        self.underlying = FiniteCochainComplex(dims, diffs, check=False)

    def degree_range(self):
        return self.underlying.degree_range()

    def dim(self, q: int) -> int:
        return self.underlying.dim(q)

    def cohomology(self) -> dict:
        self.underlying.assert_complex()
        return self.underlying.cohomology()


def realize(E: GradedMixedComplex, window=None) -> RealizedComplex:
    """Assemble the total complex; raises on an invalid mixed structure."""
    E.assert_valid()
    return RealizedComplex(E, window)


@dataclass(frozen=True)
class DegreeReport:
    """Cohomology report for one realized degree.

    dim counts exact-cycle classes supported in the cutoff window: vectors
    with weight <= P and filtration degree <= D that are honestly closed in
    the ambient complex, modulo genuine boundaries landing in the window.
    Every reported class is a class of the untruncated complex.
    """

    dim: int
    stable: bool
    slice_dims: tuple = None  # dimension gained per filtration degree
    slice_stable: tuple = None

    def as_dict(self):
        d = {"dim": self.dim, "stable": self.stable}
        if self.slice_dims is not None:
            d["slice_dims"] = list(self.slice_dims)
        if self.slice_stable is not None:
            d["slice_stable"] = list(self.slice_stable)
        return d


class WindowCohomology:
    """Cutoff cohomology inside one ambient realization.

    The two cutoff directions carry different semantics, matching the
    realization |E| = prod_p E(p)[-2p]:

    * weight: the realization is a product, so the weight-P stage is the
      quotient complex Q_P (mixed components above weight P are dropped) --
      the finite stages of the paper's inverse system;
    * filtration (polynomial) degree: coefficients are polynomials, nothing
      is completed; honest cycles are exactly closed (components of every
      filtration degree vanish), which excludes power-series artifacts.

    dim_at reports classes of the exact polynomial complex visible at stage
    P: exact cycles in the window, modulo stage-P boundaries.  stage_dim_at
    reports plain H(Q_P) dims in the window; the difference against dim_at
    is the defect the long exact sequence moves by mu per weight step on
    singular examples.

    The ambient realization must contain every weight and filtration degree
    reachable from the largest window used (weight cutoff >= tau capacity,
    since every generator carries positive filtration weight).
    """

    def __init__(self, ambient: RealizedComplex, tau_of):
        self.C = ambient
        self.tau_of = tau_of
        self._tags_cache = {}
        self._exact_cycles_cache = {}

    def _tags(self, q: int):
        if q not in self._tags_cache:
            self._tags_cache[q] = [
                (p, self.tau_of(base)) for (p, base) in self.C.labels.get(q, ())
            ]
        return self._tags_cache[q]

    def _window_cols(self, q: int, P, D: int):
        return [
            i for i, (p, t) in enumerate(self._tags(q)) if (P is None or p <= P) and t <= D
        ]

    def _quotient_matrix(self, q: int, P, cols):
        """Differential of Q_P on the window columns: rows above weight P are
        dropped (weight quotient), all filtration rows kept (tau-exact)."""
        M = self.C.underlying.d(q)
        row_tags = self._tags(q + 1)
        col_pos = {c: ci for ci, c in enumerate(cols)}
        entries = {}
        rows = {}
        for (r, c), v in M.entries.items():
            ci = col_pos.get(c)
            if ci is None:
                continue
            if P is not None and row_tags[r][0] > P:
                continue
            if r not in rows:
                rows[r] = len(rows)
            entries[(rows[r], ci)] = v
        return SparseRationalMatrix(len(rows), len(cols), entries), rows

    def _cycles(self, q: int, P, D: int):
        """Kernel vectors of Q_P supported in the window, keyed by ambient
        basis index.  P=None means no weight quotient: exact cycles."""
        cols = self._window_cols(q, P, D)
        if not cols:
            return []
        A, _ = self._quotient_matrix(q, P, cols)
        K = kernel_basis(A)
        return [
            {cols[i]: v for i, v in K.column(j).items()} for j in range(K.cols)
        ]

    def _exact_cycles(self, q: int, D: int):
        key = (q, D)
        if key not in self._exact_cycles_cache:
            self._exact_cycles_cache[key] = self._cycles(q, None, D)
        return self._exact_cycles_cache[key]

    def _boundary_echelon(self, q: int, P, D: int) -> Echelon:
        """Echelon of im(D on Q_P) intersected with the tau <= D window, in
        ambient coordinates.  Sources outside the window cannot contribute
        (the differentials never lower weight or filtration degree)."""
        ech = Echelon(0)
        cols_prev = self._window_cols(q - 1, P, D)
        if not cols_prev:
            return ech
        A, rows = self._quotient_matrix(q - 1, P, cols_prev)
        row_tags = self._tags(q)
        inside = {}
        for r, rp in rows.items():
            if row_tags[r][1] <= D:
                inside[rp] = r
        out_entries = {}
        out_idx = {}
        in_entries = {}
        for (rp, ci), v in A.entries.items():
            if rp in inside:
                in_entries[(rp, ci)] = v
            else:
                if rp not in out_idx:
                    out_idx[rp] = len(out_idx)
                out_entries[(out_idx[rp], ci)] = v
        if out_idx:
            Aout = SparseRationalMatrix(len(out_idx), A.cols, out_entries)
            K = kernel_basis(Aout)
            Ain = SparseRationalMatrix(A.rows, A.cols, in_entries)
            B = Ain * K
        else:
            B = SparseRationalMatrix(A.rows, A.cols, in_entries)
        by_col = {}
        for (rp, j), v in B.entries.items():
            by_col.setdefault(j, {})[inside[rp]] = v
        for j in sorted(by_col):
            ech.add(by_col[j])
        return ech

    def dim_at(self, q: int, P: int, D: int) -> int:
        """Exact classes visible at stage P: exact window cycles modulo
        stage-P boundaries."""
        ech = self._boundary_echelon(q, P, D)
        base = ech.rank
        tags = self._tags(q)
        for vec in self._exact_cycles(q, D):
            proj = {i: v for i, v in vec.items() if tags[i][0] <= P}
            if proj:
                ech.add(proj)
        return ech.rank - base

    def stage_dim_at(self, q: int, P: int, D: int) -> int:
        """Plain H(Q_P) in the window: stage cycles modulo stage boundaries."""
        ech = self._boundary_echelon(q, P, D)
        base = ech.rank
        for vec in self._cycles(q, P, D):
            ech.add(dict(vec))
        return ech.rank - base

    def dims(self, P: int, D: int, degrees=None) -> dict:
        out = {}
        degs = degrees if degrees is not None else self.C.degree_range()
        for q in degs:
            d = self.dim_at(q, P, D)
            if d or degrees is not None:
                out[q] = d
        return out


def ambient_weight_cutoff(D: int, pad: int) -> int:
    """Weight capacity of a filtration window: every weight unit costs at
    least one filtration unit, so weights beyond D + 1 + pad are invisible."""
    return D + 1 + pad


def realized_cohomology(build, P: int, D: int, tau_of=None, pad: int = 2,
                        window=None, graded: bool = False, degrees=None) -> dict:
    """Cutoff cohomology of a realized graded mixed construction.

    build(P, D) returns the (weight <= P, filtration <= D) truncation with
    cutoff-independent basis labels; tau_of maps a base label to its
    filtration degree; pad bounds the filtration raise of the differentials.

    Reported dim per realized degree counts exact polynomial classes visible
    at weight stage P; stable compares against the window one step larger in
    both cutoffs.  graded=True adds the dimension gained per filtration
    degree, with per-slice stability flags.
    """
    cap = ambient_weight_cutoff(D, pad)
    ambient_E = build(cap, D + 1 + pad)
    ambient_E.assert_valid()
    ambient = RealizedComplex(ambient_E, window)
    if tau_of is None:
        tau_of = lambda base: 0
    W = WindowCohomology(ambient, tau_of)
    dims = W.dims(P, D, degrees)
    dims_next = W.dims(P + 1, D + 1, degrees)
    report = {}
    all_degrees = sorted(set(dims) | set(dims_next)) if degrees is None else list(degrees)
    for q in all_degrees:
        d = dims.get(q, 0)
        slice_dims = slice_stable = None
        if graded:
            cum = [W.dim_at(q, P, t) for t in range(D + 1)]
            cum_next = [W.dim_at(q, P + 1, t) for t in range(D + 1)]
            slice_dims = tuple(cum[t] - (cum[t - 1] if t else 0) for t in range(D + 1))
            slice_stable = tuple(
                slice_dims[t] == cum_next[t] - (cum_next[t - 1] if t else 0)
                for t in range(D + 1)
            )
        report[q] = DegreeReport(
            dim=d,
            stable=(d == dims_next.get(q, 0)),
            slice_dims=slice_dims,
            slice_stable=slice_stable,
        )
    return report


def stage_dims(build, P: int, D: int, tau_of, pad: int, degrees) -> dict:
    """Plain stage dims H(Q_P) per degree, for long-exact-sequence accounting."""
    cap = ambient_weight_cutoff(D, pad)
    ambient_E = build(cap, D + 1 + pad)
    ambient = RealizedComplex(ambient_E)
    W = WindowCohomology(ambient, tau_of)
    return {q: W.stage_dim_at(q, P, D) for q in degrees}


def tensor(E: GradedMixedComplex, F: GradedMixedComplex) -> GradedMixedComplex:
    """Tensor product with mixed structure eps(x)1 + 1(x)eps and Koszul signs.

    The result cutoff is the minimum of the two (a complete factor does not
    truncate); weight p of the result is the direct sum over a+b=p of
    E(a) (x) F(b).
    """
    full = E.max_weight + F.max_weight
    cutoffs = [c for c in (E.weight_cutoff, F.weight_cutoff) if c is not None]
    P = min(cutoffs) if cutoffs else full
    P = min(P, full)
    block_index = {}  # (p, k) -> list of (a, i, offset); b = p-a, j = k-i
    dims = {}  # (p, k) -> total dim
    labels = {}

    def fdim(a, i, b, j):
        return E.dim(a, i) * F.dim(b, j)

    for p in range(P + 1):
        degrees = set()
        for a in range(p + 1):
            b = p - a
            for i in E.degrees(a):
                for j in F.degrees(b):
                    if E.dim(a, i) and F.dim(b, j):
                        degrees.add(i + j)
        for k in sorted(degrees):
            blocks = []
            off = 0
            lab = []
            for a in range(p + 1):
                b = p - a
                for i in sorted(E.degrees(a)):
                    j = k - i
                    d = fdim(a, i, b, j)
                    if not d:
                        continue
                    blocks.append((a, i, off))
                    el = E.label(a, i)
                    fl = F.label(b, j)
                    lab.extend((le, lf) for le in el for lf in fl)
                    off += d
            if blocks:
                block_index[(p, k)] = blocks
                dims[(p, k)] = off
                labels[(p, k)] = tuple(lab)

    def offset_of(p, k, a, i):
        for (aa, ii, off) in block_index.get((p, k), ()):
            if (aa, ii) == (a, i):
                return off
        return None

    def act_left(entries, M, toff, soff, fdim):
        # M on the E-factor; basis index within a block is e*fdim + f
        for (r, c), v in M.entries.items():
            for s in range(fdim):
                entries[(toff + r * fdim + s, soff + c * fdim + s)] = v

    def act_right(entries, M, toff, soff, edim, src_fdim, tgt_fdim, sign):
        for (r, c), v in M.entries.items():
            w = v * sign
            for s in range(edim):
                entries[(toff + s * tgt_fdim + r, soff + s * src_fdim + c)] = w

    pieces = {}
    mixed = {}
    for p in range(P + 1):
        ks = sorted(k for (pp, k) in dims if pp == p)
        piece_dims = {k: dims[(p, k)] for k in ks}
        diffs = {}
        eps_maps = {}
        for k in ks:
            d_entries = {}
            e_entries = {}
            for (a, i, soff) in block_index[(p, k)]:
                b, j = p - a, k - i
                de, df = E.dim(a, i), F.dim(b, j)
                sign_i = -1 if i % 2 else 1
                # d_E (x) 1 : block (a, i+1) at degree k+1
                M = E.d(a, i)
                toff = offset_of(p, k + 1, a, i + 1)
                if toff is not None and not M.is_zero():
                    act_left(d_entries, M, toff, soff, df)
                # (-1)^i 1 (x) d_F : block (a, i) at degree k+1, F-degree j+1
                M = F.d(b, j)
                toff = offset_of(p, k + 1, a, i)
                if toff is not None and not M.is_zero():
                    act_right(d_entries, M, toff, soff, de, df, F.dim(b, j + 1), sign_i)
                # eps_E (x) 1 : weight p+1, block (a+1, i-1) at degree k-1
                M = E.eps(a, i)
                toff = offset_of(p + 1, k - 1, a + 1, i - 1)
                if toff is not None and not M.is_zero():
                    act_left(e_entries, M, toff, soff, df)
                # (-1)^i 1 (x) eps_F : weight p+1, block (a, i), F-weight b+1
                M = F.eps(b, j)
                toff = offset_of(p + 1, k - 1, a, i)
                if toff is not None and not M.is_zero():
                    act_right(e_entries, M, toff, soff, de, df, F.dim(b + 1, j - 1), sign_i)
            if d_entries:
                diffs[k] = SparseRationalMatrix(piece_dims.get(k + 1, 0), piece_dims[k], d_entries)
            if e_entries:
                eps_maps[k] = SparseRationalMatrix(
                    dims.get((p + 1, k - 1), 0), piece_dims[k], e_entries
                )
        if piece_dims:
            pieces[p] = FiniteCochainComplex(piece_dims, diffs, check=False)
        if eps_maps:
            mixed[p] = eps_maps

    result_labels = {(p, k): labels[(p, k)] for (p, k) in labels}
    cutoff = min(cutoffs) if cutoffs else None
    return GradedMixedComplex(pieces, mixed, labels=result_labels, weight_cutoff=cutoff)
