from fractions import Fraction
from itertools import combinations_with_replacement

import pytest

from gwrec.moduli import (
    UnstableKeyError,
    n0_polynomial,
    point_invariant,
    point_invariant_closed,
    point_invariant_string,
    psi_intersection,
)


def _keys(g, n):
    """All dimension-valid sorted level tuples for (g, n)."""
    total = 3 * g - 3 + n
    if total < 0:
        return []
    return [
        b
        for b in combinations_with_replacement(range(total + 1), n)
        if sum(b) == total
    ]


GOLDEN = {
    (0, (0, 0, 0)): Fraction(1),
    (0, (1, 0, 0, 0)): Fraction(1),
    (0, (2, 0, 0, 0, 0)): Fraction(1),
    (0, (1, 1, 0, 0, 0)): Fraction(2),
    (1, (1,)): Fraction(1, 24),
    (1, (2, 0)): Fraction(1, 24),
    (1, (1, 1)): Fraction(1, 24),
    (1, (3, 0, 0)): Fraction(1, 24),
    (1, (2, 1, 0)): Fraction(1, 12),
    (1, (1, 1, 1)): Fraction(1, 12),
    (2, (4,)): Fraction(1, 1152),
    (2, (4, 1)): Fraction(1, 384),
    (2, (3, 2)): Fraction(29, 5760),
    (3, (7,)): Fraction(1, 82944),
    (3, (5, 3)): Fraction(503, 1451520),
}


class TestPsiIntersection:
    @pytest.mark.parametrize("key,value", sorted(GOLDEN.items()))
    def test_golden_values(self, key, value):
        g, beta = key
        assert psi_intersection(g, beta) == value

    def test_dimension_vanishing(self):
        assert psi_intersection(0, (1, 1, 1)) == 0
        assert psi_intersection(1, (2,)) == 0

    def test_unstable_is_an_error(self):
        with pytest.raises(UnstableKeyError):
            psi_intersection(0, (0, 0))
        with pytest.raises(UnstableKeyError):
            psi_intersection(1, ())

    @pytest.mark.parametrize("g", [0, 1, 2])
    def test_string_equation(self, g):
        # <tau_0 prod tau_{d_i}>_g = sum_i <... tau_{d_i - 1} ...>_g on the
        # shell sum(d) = 3g - 2 + n, for up to five points in total.
        for n in range(1, 5):
            total = 3 * g - 2 + n
            if total < 0 or 2 * g - 2 + n <= 0:
                continue
            for d in combinations_with_replacement(range(total + 1), n):
                if sum(d) != total:
                    continue
                lhs = psi_intersection(g, (0,) + d)
                rhs = sum(
                    psi_intersection(g, d[:i] + (d[i] - 1,) + d[i + 1 :])
                    for i in range(n)
                    if d[i] >= 1
                )
                assert lhs == rhs, (g, d)

    @pytest.mark.parametrize("g", [0, 1, 2])
    def test_dilaton_equation(self, g):
        for n in range(1, 5):
            if 2 * g - 2 + n <= 0:
                continue
            for beta in _keys(g, n):
                assert psi_intersection(g, (1,) + beta) == (
                    2 * g - 2 + n
                ) * psi_intersection(g, beta)


class TestPointInvariant:
    def test_dimension_zero_cases(self):
        assert point_invariant(0, (1, 1, 1), 0) == 0
        assert point_invariant(0, (0, 0, 0), 0) == 1

    def test_string_route_example(self):
        assert point_invariant(1, (2,), 1) == Fraction(1, 24)

    def test_unstable(self):
        with pytest.raises(UnstableKeyError):
            point_invariant(0, (0, 0), 0)

    @pytest.mark.parametrize("g", [0, 1, 2])
    def test_routes_agree(self, g):
        for n in range(1, 4):
            for d in range(0, 7):
                total = 3 * g - 3 + n + d
                if total < 0 or 2 * g - 2 + n + d <= 0:
                    continue
                for m in combinations_with_replacement(range(total + 1), n):
                    if sum(m) != total:
                        continue
                    a = point_invariant_closed(g, m, d)
                    b = point_invariant_string(g, m, d)
                    assert a == b, (g, m, d)


class TestN0Polynomial:
    def test_genus0_three_point(self):
        q = n0_polynomial(0, 3)
        poly = q.branches[(0, 0, 0)]
        assert poly.degree() == 0
        assert poly.eval((5, 1, 9)) == 1

    def test_genus1_one_point(self):
        poly = n0_polynomial(1, 1).branches[(0,)]
        for m in range(8):
            assert poly.eval((m,)) == Fraction(m, 24)

    def test_genus0_four_point(self):
        poly = n0_polynomial(0, 4).branches[(0,) * 4]
        for pt in [(0, 0, 0, 0), (1, 2, 3, 4), (5, 0, 2, 1)]:
            assert poly.eval(pt) == sum(pt)

    @pytest.mark.parametrize("g,n", [(0, 3), (0, 4), (1, 1), (1, 2), (2, 1)])
    def test_degree_and_top_coefficients(self, g, n):
        poly = n0_polynomial(g, n).branches[(0,) * n]
        D = 3 * g - 3 + n
        assert poly.degree() == D
        for beta in _keys(g, n):
            for e in set(_perms(beta)):
                assert poly.coeff(e) == psi_intersection(g, e)

    @pytest.mark.parametrize("g,n", [(0, 3), (0, 4), (1, 1), (1, 2)])
    def test_reproduces_d0_values(self, g, n):
        # On the d = 0 shell the polynomial returns m_i!-weighted psi values
        # even at level vectors that match no single monomial.
        poly = n0_polynomial(g, n).branches[(0,) * n]
        total = 3 * g - 3 + n
        for m in combinations_with_replacement(range(total + 1), n):
            if sum(m) != total:
                continue
            fact = 1
            for x in m:
                for i in range(2, x + 1):
                    fact *= i
            assert poly.eval(m) == fact * psi_intersection(g, m)


def _perms(beta):
    from itertools import permutations

    return [tuple(p) for p in permutations(beta)]
