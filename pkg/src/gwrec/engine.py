"""Evaluator for descendant Gromov-Witten invariants of projective space.

Values are exact SymRat: a rational number plus a Q-linear combination of
atoms, one atom per invariant the implemented recursions cannot reach
(genus >= 2 with all descendant levels below threshold, and the genus-1
primary survivors).  Genus-0 values are always plain rationals.

The degree of a map is never stored: it is derived from the dimension
constraint of the key and a key whose derived degree is fractional or
negative evaluates to zero.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product

from .algebra import SymRat, c_factor

Insertion = tuple  # (m, k): descendant level and class exponent


class SplitAmbiguityError(AssertionError):
    """More than one splitting class passed the dimension filter."""


@dataclass(frozen=True)
class InvariantKey:
    """Canonical identity of one bracket: target dimension, genus, and the
    sorted multiset of insertions (m, k)."""

    N: int
    g: int
    ins: tuple

    @classmethod
    def make(cls, N, g, insertions) -> "InvariantKey":
        ins = tuple(sorted((int(m), int(k)) for m, k in insertions))
        return cls(int(N), int(g), ins)

    @property
    def n(self) -> int:
        return len(self.ins)

    def degree(self):
        return degree_of(self.N, self.g, self.ins)

    def canonical(self) -> str:
        body = ",".join(f"({m},{k})" for m, k in self.ins)
        return f"gw[N={self.N};g={self.g};ins={body}]"

    @classmethod
    def parse(cls, text: str) -> "InvariantKey":
        if not (text.startswith("gw[") and text.endswith("]")):
            raise ValueError(f"malformed key: {text!r}")
        parts = dict(p.split("=", 1) for p in text[3:-1].split(";"))
        ins = []
        body = parts["ins"]
        if body:
            for chunk in body.split("),("):
                chunk = chunk.strip("()")
                m, k = chunk.split(",")
                ins.append((int(m), int(k)))
        return cls.make(int(parts["N"]), int(parts["g"]), ins)


def degree_of(N: int, g: int, insertions):
    """The map degree forced by the dimension constraint, or None when no
    non-negative integer degree exists (the invariant is then zero)."""
    total = sum(m + k for m, k in insertions)
    num = total - (N - 3) * (1 - g) - len(insertions)
    if num % (N + 1):
        return None
    d = num // (N + 1)
    return d if d >= 0 else None


def _without(ins, idx):
    return ins[:idx] + ins[idx + 1 :]


def _replace(ins, idx, new):
    return ins[:idx] + (new,) + ins[idx + 1 :]


def _reduction_valid(d, g, n) -> bool:
    # Forgetting a point needs a stable target: positive degree, or enough
    # remaining points on the curve.
    return d > 0 or 2 * g - 2 + (n - 1) > 0


class Engine:
    """Memoized recursive evaluator.  All methods are pure; the caches only
    ever receive idempotent writes, so concurrent use is safe."""

    def __init__(self):
        self.cache: dict = {}
        self._g0_memo: dict = {}
        self._bb_memo: dict = {}
        self._wdvv_memo: dict = {}

    # ------------------------------------------------------------------
    # public entry points

    def invariant(self, N, g, insertions) -> SymRat:
        key = InvariantKey.make(N, g, insertions)
        if key.N < 1:
            raise ValueError("target dimension must be >= 1")
        if key.g < 0:
            raise ValueError("genus must be >= 0")
        for m, k in key.ins:
            if m < 0:
                raise ValueError(f"negative descendant level in {key.canonical()}")
            if not 0 <= k <= key.N:
                raise ValueError(
                    f"class exponent {k} outside [0, {key.N}] in {key.canonical()}"
                )
        if sys.getrecursionlimit() < 30000:
            sys.setrecursionlimit(30000)
        return self._invariant(key)

    def _invariant(self, key: InvariantKey) -> SymRat:
        val = self.cache.get(key)
        if val is None:
            val = self._compute(key)
            self.cache[key] = val
        return val

    def stationary(self, N, g, ms) -> SymRat:
        return self.invariant(N, g, [(m, N) for m in ms])

    def normalized_stationary(self, N, g, ms) -> SymRat:
        """Invariant times the ceiling-factorial normalisation of each slot."""
        v = self.stationary(N, g, ms)
        for m in ms:
            v = v * c_factor(N + 1, m)
        return v

    # ------------------------------------------------------------------
    # dispatch

    def _compute(self, key: InvariantKey) -> SymRat:
        N, g, ins = key.N, key.g, key.ins
        n = len(ins)
        d = degree_of(N, g, ins)
        if d is None:
            return SymRat(0)

        if (0, 0) in ins and _reduction_valid(d, g, n):
            return self._string(key)
        if (0, 1) in ins and _reduction_valid(d, g, n):
            return self._divisor(key, d)
        if (1, 0) in ins and _reduction_valid(d, g, n):
            idx = ins.index((1, 0))
            rest = _without(ins, idx)
            return (2 * g - 2 + n - 1) * self._invariant(
                InvariantKey(N, g, rest)
            )

        if g == 0:
            if n <= 2:
                return SymRat(self._g0_small(N, ins, d))
            if max(m for m, _ in ins) >= 1:
                total = SymRat(0)
                for coeff, k1, k2 in self.trr0_expand(N, g, ins, self._pivot(ins)):
                    total = total + coeff * (
                        self._invariant(k1).rational() * self._invariant(k2)
                    )
                return total
            return SymRat(self.wdvv_primary(N, [k for _, k in ins]))

        if g == 1 and max((m for m, _ in ins), default=0) >= 1:
            return self._genus1_trr(key)

        if g >= 2 and max((m for m, _ in ins), default=0) >= 3 * g - 1:
            piv = self._pivot(ins)
            total = SymRat(0)
            for coeff, bb, gkey in self.trrg_expand(N, g, ins, piv):
                total = total + coeff * (bb * self._invariant(gkey))
            return total

        # Unreachable by the implemented recursions: keep it symbolic.
        return SymRat.atom(key.canonical())

    @staticmethod
    def _pivot(ins) -> int:
        """Distinguished insertion: maximal level, then minimal exponent,
        then first in canonical order."""
        best = None
        for i, (m, k) in enumerate(ins):
            if best is None or (m, -k) > (ins[best][0], -ins[best][1]):
                best = i
        return best

    def _string(self, key: InvariantKey) -> SymRat:
        N, g, ins = key.N, key.g, key.ins
        rest = _without(ins, ins.index((0, 0)))
        total = SymRat(0)
        for i, (m, k) in enumerate(rest):
            if m >= 1:
                total = total + self._invariant(
                    InvariantKey.make(N, g, _replace(rest, i, (m - 1, k)))
                )
        return total

    def _divisor(self, key: InvariantKey, d) -> SymRat:
        N, g, ins = key.N, key.g, key.ins
        rest = _without(ins, ins.index((0, 1)))
        total = d * self._invariant(InvariantKey(N, g, rest))
        for i, (m, k) in enumerate(rest):
            if m >= 1 and k < N:
                total = total + self._invariant(
                    InvariantKey.make(N, g, _replace(rest, i, (m - 1, k + 1)))
                )
        return total

    # ------------------------------------------------------------------
    # genus zero, one and two insertions (closed forms and reductions)

    def _g0_small(self, N, ins, d=...) -> Fraction:
        ins = tuple(sorted(ins))
        memo_key = (N, ins)
        if memo_key in self._g0_memo:
            return self._g0_memo[memo_key]
        if d is ...:
            d = degree_of(N, 0, ins)
        if d is None:
            val = Fraction(0)
        elif len(ins) == 0:
            val = Fraction(1) if (N == 1 and d == 1) else Fraction(0)
        elif len(ins) == 1:
            val = self._g0_one(N, ins[0], d)
        else:
            val = self._g0_two(N, ins, d)
        self._g0_memo[memo_key] = val
        return val

    def _g0_one(self, N, A, d) -> Fraction:
        m, k = A
        if d <= 0:
            return Fraction(0)
        if k == N:
            return Fraction(1, c_factor(N + 1, m) * d * d)
        if m == 0:
            return Fraction(0)
        # Raise by a divisor insertion, then peel the correction term.
        two = self._g0_small(N, ((0, 1), A))
        corr = self._g0_small(N, ((m - 1, k + 1),))
        return (two - corr) / d

    def _g0_two(self, N, ins, d) -> Fraction:
        if d <= 0:
            return Fraction(0)
        A, B = ins
        if A == (0, 0) or B == (0, 0):
            other = B if A == (0, 0) else A
            m, k = other
            if m == 0:
                return Fraction(0)
            return self._g0_small(N, ((m - 1, k),))
        if A == (1, 0) or B == (1, 0):
            other = B if A == (1, 0) else A
            return -self._g0_small(N, (other,))
        (m1, k1), (m2, k2) = A, B
        if k1 == N and k2 == N:
            return Fraction(
                1, c_factor(N + 1, m1) * c_factor(N + 1, m2) * d
            )
        if m1 == 0 and m2 == 0:
            return Fraction(0)  # both primary, neither dual to a point
        if m1 == 0 or m2 == 0:
            desc, prim = (B, A) if m1 == 0 else (A, B)
            m, k = desc
            if k == N:
                return Fraction(1, c_factor(N + 1, m) * d)
            three = self._g0_three_direct(N, ((0, 1),) + ins)
            corr = self._g0_small(N, ((m - 1, k + 1), prim))
            return (three - corr) / d
        # Two descendants, not both stationary.
        three = self._g0_three_direct(N, ((0, 1),) + ins)
        corr = Fraction(0)
        if k1 < N:
            corr += self._g0_small(N, ((m1 - 1, k1 + 1), B))
        if k2 < N:
            corr += self._g0_small(N, (A, (m2 - 1, k2 + 1)))
        return (three - corr) / d

    def _g0_three_direct(self, N, ins) -> Fraction:
        """A genus-0 three-point bracket evaluated directly by the genus-0
        topological recursion, bypassing the divisor rule (which would loop
        back into the two-point reduction that called us)."""
        ins = tuple(sorted(ins))
        piv = self._pivot(ins)
        total = Fraction(0)
        for coeff, k1, k2 in self.trr0_expand(N, 0, ins, piv):
            total += coeff * (
                self._invariant(k1).rational() * self._invariant(k2).rational()
            )
        return total

    # ------------------------------------------------------------------
    # genus-0 topological recursion

    def trr0_expand(self, N, g, insertions, pivot_index):
        """All product terms of the genus-0 recursion pivoting on the given
        insertion.  The two co-pivots are the first two remaining insertions
        in canonical order; every splitting of the rest is distributed over
        the two factors and the splitting class is forced by dimension."""
        ins = tuple(sorted(insertions))
        if g != 0:
            raise ValueError("trr0_expand is genus-0 only")
        if len(ins) < 3:
            raise ValueError("trr0_expand needs at least three insertions")
        m, k = ins[pivot_index]
        if m < 1:
            raise ValueError("pivot has zero descendant level")
        rest = _without(ins, pivot_index)
        co = rest[:2]
        free = rest[2:]
        terms = []
        for r in range(len(free) + 1):
            for U in combinations(range(len(free)), r):
                left = [(m - 1, k)] + [free[i] for i in U]
                right = list(co) + [free[i] for i in range(len(free)) if i not in U]
                hits = []
                for j in range(N + 1):
                    key1 = InvariantKey.make(N, 0, left + [(0, j)])
                    key2 = InvariantKey.make(N, 0, right + [(0, N - j)])
                    if key1.degree() is not None and key2.degree() is not None:
                        hits.append((key1, key2))
                if len(hits) > 1:
                    raise SplitAmbiguityError(
                        f"splitting class not unique for {ins} with U={U}"
                    )
                if hits:
                    terms.append((Fraction(1),) + hits[0])
        return terms

    # ------------------------------------------------------------------
    # genus-1 topological recursion

    def _genus1_trr(self, key: InvariantKey) -> SymRat:
        N, ins = key.N, key.ins
        piv = self._pivot(ins)
        m, k = ins[piv]
        rest = _without(ins, piv)
        total = SymRat(0)
        for r in range(len(rest) + 1):
            for U in combinations(range(len(rest)), r):
                left = [(m - 1, k)] + [rest[i] for i in U]
                right = [rest[i] for i in range(len(rest)) if i not in U]
                hits = []
                for j in range(N + 1):
                    key0 = InvariantKey.make(N, 0, left + [(0, j)])
                    key1 = InvariantKey.make(N, 1, right + [(0, N - j)])
                    if key0.degree() is not None and key1.degree() is not None:
                        hits.append((key0, key1))
                if len(hits) > 1:
                    raise SplitAmbiguityError(f"splitting class not unique in {key}")
                if hits:
                    key0, key1 = hits[0]
                    total = total + self._invariant(key0).rational() * self._invariant(
                        key1
                    )
        # Contracted-handle term, 1/24 of the full dual-basis sum.
        for j in range(N + 1):
            key0 = InvariantKey.make(
                N, 0, list(rest) + [(m - 1, k), (0, j), (0, N - j)]
            )
            total = total + Fraction(1, 24) * self._invariant(key0).rational()
        return total

    # ------------------------------------------------------------------
    # genus-g topological recursion and its genus-0 chain brackets

    def beta_bracket(self, N, first_class, pivot, extras, beta) -> Fraction:
        """The genus-0 chain bracket: first insertion tau_0(w^first_class),
        distinguished descendant tau_m(w^k) given by pivot=(m, k), extras
        distributed over the chain factors, chain depth controlled by beta.

        Computed by both the alternating-sum formula and the shift/subtract
        recursion; the two must agree and the shared value is returned.
        """
        if beta < 0:
            raise ValueError("beta must be >= 0")
        m, k = pivot
        extras = tuple(sorted(extras))
        memo_key = (N, first_class, m, k, extras, beta)
        if memo_key in self._bb_memo:
            return self._bb_memo[memo_key]
        alt = self._bb_sum(N, first_class, m, k, extras, beta)
        rec = self._bb_rec(N, first_class, m, k, extras, beta)
        if alt != rec:
            raise AssertionError(
                f"beta-bracket routes disagree at {memo_key}: {alt} vs {rec}"
            )
        self._bb_memo[memo_key] = alt
        return alt

    def _chain_class(self, N, ins):
        """Unique exponent e ∈ [0, N] completing a genus-0 factor whose
        insertions are given with a class-0 placeholder at the slot that is
        to carry w^e; the degree sign is checked by the caller through the
        invariant itself."""
        total = sum(mm + kk for mm, kk in ins)
        n = len(ins)
        # Solve total + e = (N-3) + n (mod N+1).
        return ((N - 3) + n - total) % (N + 1)

    def _bb_sum(self, N, first_class, m, k, extras, beta) -> Fraction:
        total = Fraction(0)
        ne = len(extras)
        for kk in range(1, beta + 2):
            for comp in _compositions(beta + 1 - kk, kk):
                for assign in product(range(kk), repeat=ne):
                    groups = [[] for _ in range(kk)]
                    for idx, grp in zip(range(ne), assign):
                        groups[grp].append(extras[idx])
                    prod = Fraction(1)
                    c = first_class
                    ok = True
                    for i in range(kk):
                        if i < kk - 1:
                            base = [(0, c)] + groups[i]
                            e = self._chain_class(N, [(comp[i], 0)] + base)
                            factor_ins = base + [(comp[i], e)]
                            nxt = N - e
                        else:
                            factor_ins = [(0, c), (comp[i] + m, k)] + groups[i]
                            nxt = None
                        v = self._invariant(
                            InvariantKey.make(N, 0, factor_ins)
                        ).rational()
                        if v == 0:
                            ok = False
                            break
                        prod *= v
                        c = nxt
                    if ok:
                        total += (-1) ** (kk - 1) * prod
        return total

    def _bb_rec(self, N, first_class, m, k, extras, beta) -> Fraction:
        if beta == 0:
            return self._invariant(
                InvariantKey.make(N, 0, [(0, first_class), (m, k)] + list(extras))
            ).rational()
        total = self.beta_bracket(N, first_class, (m + 1, k), extras, beta - 1)
        ne = len(extras)
        for r in range(ne + 1):
            for U in combinations(range(ne), r):
                left = [extras[i] for i in U]
                right = [extras[i] for i in range(ne) if i not in U]
                for i in range(N + 1):
                    f = self._invariant(
                        InvariantKey.make(N, 0, [(0, N - i), (m, k)] + left)
                    ).rational()
                    if f == 0:
                        continue
                    total -= f * self.beta_bracket(
                        N, first_class, (0, i), tuple(right), beta - 1
                    )
        return total

    def trrg_expand(self, N, g, insertions, pivot_index):
        """Terms of the genus-g recursion: chain bracket times a genus-g
        factor, summed over the split of the contact order 3g-2 and over all
        distributions of the remaining insertions."""
        ins = tuple(sorted(insertions))
        if g < 1:
            raise ValueError("trrg_expand needs genus >= 1")
        m, k = ins[pivot_index]
        if m < 3 * g - 1:
            raise ValueError(
                f"pivot level {m} below the genus-{g} threshold {3 * g - 1}"
            )
        rest = _without(ins, pivot_index)
        mm = m - (3 * g - 1)
        terms = []
        for alpha in range(3 * g - 1):
            beta = 3 * g - 2 - alpha
            for r in range(len(rest) + 1):
                for U in combinations(range(len(rest)), r):
                    left = tuple(rest[i] for i in U)
                    right = [rest[i] for i in range(len(rest)) if i not in U]
                    for j in range(N + 1):
                        gkey = InvariantKey.make(N, g, right + [(alpha, j)])
                        if gkey.degree() is None:
                            continue
                        bb = self.beta_bracket(N, N - j, (mm, k), left, beta)
                        if bb == 0:
                            continue
                        terms.append((Fraction(1), SymRat(bb), gkey))
        return terms

    # ------------------------------------------------------------------
    # genus-0 primary oracle via associativity

    def wdvv_primary(self, N, class_exponents) -> Fraction:
        """Genus-0 primary invariants from associativity of the quantum
        product, seeded by the triple intersections at degree zero and the
        two-point count <pt, pt>_1 = 1."""
        exps = tuple(sorted(int(a) for a in class_exponents))
        if any(not 0 <= a <= N for a in exps):
            raise ValueError("class exponent out of range")
        memo_key = (N, exps)
        if memo_key in self._wdvv_memo:
            return self._wdvv_memo[memo_key]
        val = self._wdvv(N, exps)
        self._wdvv_memo[memo_key] = val
        return val

    def _wdvv(self, N, exps) -> Fraction:
        d = degree_of(N, 0, [(0, a) for a in exps])
        n = len(exps)
        if d is None:
            return Fraction(0)
        if d == 0:
            return Fraction(1) if n == 3 else Fraction(0)
        if n <= 1:
            return Fraction(1) if (N == 1 and exps == (1,) and d == 1) else Fraction(0)
        if n == 2:
            return Fraction(1) if (exps == (N, N) and d == 1) else Fraction(0)
        if exps[0] == 0:
            return Fraction(0)
        if exps[0] == 1:
            return d * self.wdvv_primary(N, exps[1:])
        # All exponents >= 2.  Split w^a = w . w^(a-1) with a the smallest
        # exponent and move one unit onto the largest; the associativity
        # relation for (w, w^(a-1); w^b, w^c | E) vs (w, w^b; w^(a-1), w^c | E)
        # then isolates the requested invariant.
        a = exps[0]
        rest = sorted(exps[1:], reverse=True)
        b, c = rest[0], rest[1]
        E = tuple(sorted(rest[2:]))
        lhs = self._wdvv_f(N, (1, a - 1), (b, c), E, skip=(frozenset(), N - a))
        rhs = self._wdvv_f(N, (1, b), (a - 1, c), E, skip=None)
        return rhs - lhs

    def _wdvv_f(self, N, pair1, pair2, E, skip) -> Fraction:
        """One side of the associativity identity: sum over splittings of E
        and the dual class of products of two primary invariants.  The term
        identified by `skip` (subset of E by position, dual exponent) is
        omitted so the caller can solve for it."""
        total = Fraction(0)
        idx = range(len(E))
        for r in range(len(E) + 1):
            for S1 in combinations(idx, r):
                s1 = frozenset(S1)
                left_base = list(pair1) + [E[i] for i in S1]
                right_base = list(pair2) + [E[i] for i in idx if i not in s1]
                for e in range(N + 1):
                    if skip is not None and s1 == skip[0] and e == skip[1]:
                        continue
                    f1 = self.wdvv_primary(N, left_base + [e])
                    if f1 == 0:
                        continue
                    f2 = self.wdvv_primary(N, right_base + [N - e])
                    if f2 == 0:
                        continue
                    total += f1 * f2
        return total

    # ------------------------------------------------------------------
    # the non-quasi-polynomial witness

    def counterexample_f(self, m: int) -> Fraction:
        """c_2(m) times the three-point bracket with one level-m unit
        insertion and two point insertions on the projective line.  Nonzero
        only for odd m (dimension parity)."""
        if m < 1:
            raise ValueError("m out of range")
        v = self.invariant(1, 0, [(m, 0), (0, 1), (0, 1)]).rational()
        return v * c_factor(2, m)

    # ------------------------------------------------------------------
    # cache transport

    def export_cache(self):
        return {k.canonical(): v for k, v in self.cache.items()}

    def merge_cache(self, records):
        """Merge canonical-key records; a conflicting value is a hard error."""
        for key_str, val in records.items():
            key = InvariantKey.parse(key_str)
            if key in self.cache and self.cache[key] != val:
                raise ValueError(f"cache conflict for {key_str}")
            self.cache[key] = val


def _compositions(total, parts):
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(total + 1):
        for tail in _compositions(total - first, parts - 1):
            yield (first,) + tail


DEFAULT_ENGINE = Engine()


def invariant(N, g, insertions) -> SymRat:
    return DEFAULT_ENGINE.invariant(N, g, insertions)


def wdvv_primary(N, class_exponents) -> Fraction:
    return DEFAULT_ENGINE.wdvv_primary(N, class_exponents)


def counterexample_f(m) -> Fraction:
    return DEFAULT_ENGINE.counterexample_f(m)
