from fractions import Fraction as Fr

import pytest
from hypothesis import given, settings, strategies as st

from privmatmul.costs import (
    OperatingPoint,
    kimlee_factorizations,
    kimlee_point,
    kimlee_point_k,
    lower_convex_hull,
    memory_share,
    min_upload,
    theorem1_download_binomial,
    theorem1_download_geometric,
    theorem1_point,
)
from privmatmul.errors import AlphaOutOfRange, BadFactorization, KOutOfRange


def brute_hull(points):
    """q is on the envelope iff no point of any segment [a, b] weakly dominates it."""
    pts = list({(p.U, p.D) for p in points})

    def dominated(q):
        for a in pts:
            for b in pts:
                lo, hi = Fr(0), Fr(1)
                feasible = True
                for k in (0, 1):
                    # alpha*a_k + (1-alpha)*b_k <= q_k, i.e. alpha*(a_k-b_k) <= q_k-b_k
                    coef, rhs = a[k] - b[k], q[k] - b[k]
                    if coef > 0:
                        hi = min(hi, rhs / coef)
                    elif coef < 0:
                        lo = max(lo, rhs / coef)
                    elif rhs < 0:
                        feasible = False
                if not feasible or lo > hi:
                    continue
                for alpha in (lo, hi):
                    pt = tuple(alpha * a[k] + (1 - alpha) * b[k] for k in (0, 1))
                    if pt != q:
                        return True
        return False

    return sorted(q for q in pts if not dominated(q))


def test_golden_point():
    pt = theorem1_point(4, 2, 3)
    assert (pt.U, pt.D) == (2, Fr(21, 8))
    # (3 * 28) / (2 * 16)
    assert pt.D == Fr(3 * 28, 2 * 16)


@pytest.mark.parametrize("N", [2, 3, 5, 12])
def test_single_message_minimum_upload(N):
    pt = theorem1_point(N, 1, N)
    assert pt.U == pt.D == Fr(N, N - 1)


def test_k_equals_n_large():
    assert theorem1_point(12, 6, 12).coords() == (Fr(12, 11), Fr(72, 11))


def test_theorem1_range_errors():
    with pytest.raises(KOutOfRange):
        theorem1_point(4, 2, 1)
    with pytest.raises(KOutOfRange):
        theorem1_point(4, 2, 5)


@pytest.mark.parametrize("N", range(2, 13))
@pytest.mark.parametrize("M", range(1, 7))
def test_three_forms_of_download_cost_agree(N, M):
    for K in range(2, N + 1):
        D = theorem1_point(N, M, K).D
        assert D == theorem1_download_binomial(N, M, K)
        if K < N:
            assert D == theorem1_download_geometric(N, M, K)


def test_kimlee_points():
    assert kimlee_point(2, 3).coords() == (6, 2)
    assert kimlee_point(1, 5).coords() == (12, Fr(12, 5))
    assert kimlee_point(3, 2).coords() == (4, 2)
    assert kimlee_point(5, 1).coords() == (Fr(12, 5), Fr(12, 5))
    assert kimlee_point_k(12, 2).coords() == kimlee_point(1, 5).coords()
    for m1, m2 in kimlee_factorizations(12):
        assert kimlee_point_k(12, m1 + 1).coords() == kimlee_point(m1, m2).coords()
    with pytest.raises(BadFactorization):
        kimlee_point(0, 3)
    with pytest.raises(KOutOfRange):
        kimlee_point_k(12, 12)


def test_kimlee_factorizations():
    assert kimlee_factorizations(12) == [(1, 5), (2, 3), (3, 2), (5, 1)]
    assert kimlee_factorizations(2) == []
    assert kimlee_factorizations(7) == []


def test_min_upload():
    assert min_upload(4) == Fr(4, 3)
    assert min_upload(2) == 2
    values = [min_upload(n) for n in range(2, 200)]
    assert all(a > b > 1 for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("N", range(2, 9))
@pytest.mark.parametrize("M", range(1, 5))
def test_upload_never_below_minimum(N, M):
    for K in range(2, N + 1):
        U = theorem1_point(N, M, K).U
        assert U >= min_upload(N)
        assert (U == min_upload(N)) == (K == N)


@pytest.mark.parametrize("K", [2, 3, 4, 6])
def test_dominates_kimlee(K):
    ours, theirs = theorem1_point(12, 6, K), kimlee_point_k(12, K)
    assert ours.U == theirs.U and ours.D < theirs.D


def test_memory_share():
    a, b = theorem1_point(4, 2, 3), theorem1_point(4, 2, 4)
    assert b.coords() == (Fr(4, 3), Fr(8, 3))
    assert memory_share(a, b, 0).coords() == b.coords()
    assert memory_share(a, b, 1).coords() == a.coords()
    assert memory_share(a, b, Fr(1, 2)).coords() == (Fr(5, 3), Fr(127, 48))
    with pytest.raises(AlphaOutOfRange):
        memory_share(a, b, Fr(3, 2))


def test_hull_basics():
    p = OperatingPoint(Fr(2), Fr(3))
    assert lower_convex_hull([p]) == [p]
    worse = OperatingPoint(Fr(3), Fr(4))
    assert lower_convex_hull([worse, p]) == [p]


def test_hull_theorem1_matches_brute_force():
    pts = [theorem1_point(12, 6, K) for K in range(2, 13)]
    hull = lower_convex_hull(pts)
    assert [h.coords() for h in hull] == brute_hull(pts)
    assert [h.param for h in hull] == [f"K={K}" for K in range(12, 3, -1)]


rationals = st.fractions(min_value=0, max_value=20, max_denominator=6)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(rationals, rationals), min_size=1, max_size=9))
def test_hull_matches_brute_force_random(coords):
    pts = [OperatingPoint(u, d) for u, d in coords]
    assert [h.coords() for h in lower_convex_hull(pts)] == brute_hull(pts)


@settings(max_examples=100, deadline=None)
@given(
    st.integers(2, 9).flatmap(lambda n: st.tuples(st.just(n), st.integers(2, n), st.integers(2, n))),
    st.integers(1, 5),
    st.fractions(min_value=0, max_value=1, max_denominator=20),
)
def test_memory_share_lies_on_segment(nkk, M, alpha):
    N, K1, K2 = nkk
    a, b = theorem1_point(N, M, K1), theorem1_point(N, M, K2)
    c = memory_share(a, b, alpha)
    cross = (a.U - c.U) * (b.D - c.D) - (a.D - c.D) * (b.U - c.U)
    assert cross == 0
    assert min(a.U, b.U) <= c.U <= max(a.U, b.U)
    assert min(a.D, b.D) <= c.D <= max(a.D, b.D)
