"""Multivariate polynomials over Q with exponent-vector term maps.

Terms map exponent tuples (length num_vars) to nonzero Fractions.  Monomial
order everywhere is graded lexicographic, which fixes deterministic bases
and printing.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations_with_replacement


def grlex_key(expo: tuple) -> tuple:
    """Graded-lex sort key: total degree first, then lex on exponents."""
    return (sum(expo), tuple(-e for e in expo))


class MultiPoly:
    """Polynomial in num_vars variables with Fraction coefficients."""

    __slots__ = ("num_vars", "terms")

    def __init__(self, num_vars: int, terms=None):
        self.num_vars = num_vars
        clean = {}
        if terms:
            for expo, c in terms.items():
                expo = tuple(int(e) for e in expo)
                if len(expo) != num_vars:
                    raise ValueError(f"exponent {expo} has wrong length (expected {num_vars})")
                if any(e < 0 for e in expo):
                    raise ValueError(f"negative exponent in {expo}")
                c = Fraction(c)
                if c != 0:
                    clean[expo] = c
        self.terms = clean

    @classmethod
    def zero(cls, num_vars: int):
        return cls(num_vars)

    @classmethod
    def constant(cls, num_vars: int, c):
        return cls(num_vars, {(0,) * num_vars: Fraction(c)})

    @classmethod
    def variable(cls, num_vars: int, index: int):
        expo = tuple(1 if a == index else 0 for a in range(num_vars))
        return cls(num_vars, {expo: Fraction(1)})

    @classmethod
    def monomial(cls, num_vars: int, expo, c=1):
        return cls(num_vars, {tuple(expo): Fraction(c)})

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=-1)

    def min_degree(self) -> int:
        return min((sum(e) for e in self.terms), default=-1)

    def __eq__(self, other):
        return (
            isinstance(other, MultiPoly)
            and self.num_vars == other.num_vars
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.num_vars, frozenset(self.terms.items())))

    def _check(self, other):
        if self.num_vars != other.num_vars:
            raise ValueError("mixed variable counts")

    def __add__(self, other: "MultiPoly") -> "MultiPoly":
        self._check(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            s = terms.get(e, 0) + c
            if s:
                terms[e] = s
            else:
                terms.pop(e, None)
        out = MultiPoly.__new__(MultiPoly)
        out.num_vars = self.num_vars
        out.terms = terms
        return out

    def __neg__(self):
        out = MultiPoly.__new__(MultiPoly)
        out.num_vars = self.num_vars
        out.terms = {e: -c for e, c in self.terms.items()}
        return out

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return MultiPoly.zero(self.num_vars)
            out = MultiPoly.__new__(MultiPoly)
            out.num_vars = self.num_vars
            out.terms = {e: c * other for e, c in self.terms.items()}
            return out
        self._check(other)
        terms = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                s = terms.get(e, 0) + c1 * c2
                if s:
                    terms[e] = s
                else:
                    terms.pop(e, None)
        out = MultiPoly.__new__(MultiPoly)
        out.num_vars = self.num_vars
        out.terms = terms
        return out

    __rmul__ = __mul__

    def partial(self, a: int) -> "MultiPoly":
        """Partial derivative with respect to variable a."""
        terms = {}
        for e, c in self.terms.items():
            if e[a]:
                e2 = tuple(v - 1 if b == a else v for b, v in enumerate(e))
                terms[e2] = terms.get(e2, 0) + c * e[a]
        return MultiPoly(self.num_vars, terms)

    def substitute(self, polys) -> "MultiPoly":
        """Evaluate at x_a = polys[a]; polys live in a common ambient ring."""
        if len(polys) != self.num_vars:
            raise ValueError("substitution needs one polynomial per variable")
        if not polys:
            # 0 variables: constant polynomial, nothing to substitute into
            raise ValueError("cannot infer target ring for 0 variables")
        m = polys[0].num_vars
        out = MultiPoly.zero(m)
        for e, c in self.terms.items():
            term = MultiPoly.constant(m, c)
            for a, k in enumerate(e):
                for _ in range(k):
                    term = term * polys[a]
            out = out + term
        return out

    def truncate(self, bound) -> "MultiPoly":
        """Drop terms of total degree > bound (None means keep everything)."""
        if bound is None:
            return self
        return MultiPoly(
            self.num_vars, {e: c for e, c in self.terms.items() if sum(e) <= bound}
        )

    def weighted_degree(self, weights) -> int:
        """Max weighted degree of the terms; -1 for zero."""
        return max((sum(w * k for w, k in zip(weights, e)) for e in self.terms), default=-1)

    def is_weighted_homogeneous(self, weights):
        degs = {sum(w * k for w, k in zip(weights, e)) for e in self.terms}
        return len(degs) <= 1

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda ec: grlex_key(ec[0]))

    def __str__(self):
        if not self.terms:
            return "0"
        names = _var_names(self.num_vars)
        parts = []
        for e, c in self.sorted_terms():
            mono = "*".join(
                f"{names[a]}^{k}" if k > 1 else names[a] for a, k in enumerate(e) if k
            )
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append(f"-{mono}")
            else:
                parts.append(f"{c}*{mono}")
        out = " + ".join(parts)
        return out.replace("+ -", "- ")

    __repr__ = __str__


def _var_names(n: int):
    if n <= 4:
        return ["x", "y", "z", "w"][:n]
    return [f"x{a}" for a in range(n)]


def monomials_of_degree(num_vars: int, degree: int):
    """All exponent tuples of the given total degree, in grlex (here: lex) order."""
    if num_vars == 0:
        return [()] if degree == 0 else []
    out = []
    for combo in combinations_with_replacement(range(num_vars), degree):
        e = [0] * num_vars
        for a in combo:
            e[a] += 1
        out.append(tuple(e))
    out.sort(key=grlex_key)
    return out


def monomials_up_to_degree(num_vars: int, bound: int):
    out = []
    for d in range(bound + 1):
        out.extend(monomials_of_degree(num_vars, d))
    return out
