import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from privmatmul.errors import DimMismatch, DivideByZero, FieldMismatch, NotPrime, SingularSystem
from privmatmul.field import (
    FMatrix,
    PrimeField,
    evaluate_poly,
    field_arith,
    field_new,
    is_prime,
    mat_mul,
    vandermonde_solve,
    vstack,
)


def schoolbook(X, Y, p):
    n, k, m = len(X), len(Y), len(Y[0])
    return [[sum(X[i][t] * Y[t][j] for t in range(k)) % p for j in range(m)] for i in range(n)]


def horner(coeffs, x, p):
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % p
    return acc


@pytest.mark.parametrize("p", [2, 3, 7, 101, 65537])
def test_field_new_accepts_primes(p):
    assert field_new(p).p == p


@pytest.mark.parametrize("n", [0, 1, 4, 6, 9, 91, 65535])
def test_field_new_rejects_composites(n):
    with pytest.raises(NotPrime):
        field_new(n)


def test_is_prime_against_sieve():
    limit = 500
    sieve = [True] * limit
    sieve[0] = sieve[1] = False
    for i in range(2, limit):
        if sieve[i]:
            for j in range(i * i, limit, i):
                sieve[j] = False
    assert [is_prime(n) for n in range(limit)] == sieve


def test_scalar_examples():
    F7, F5 = PrimeField(7), PrimeField(5)
    assert field_arith(F7(3), None, "inv_of_a").value == 5
    assert field_arith(F5(4), F5(3), "add").value == 2
    assert field_arith(F5(2), F5(4), "mul").value == 3
    assert field_arith(F5(2), F5(4), "sub").value == 3
    with pytest.raises(DivideByZero):
        field_arith(F7(0), None, "inv_of_a")


def test_elements_stay_reduced():
    F = PrimeField(11)
    assert F(-1).value == 10
    assert (F(7) * 8).value == 1
    assert (F(3) / F(4)).value == 3 * pow(4, 9, 11) % 11
    assert (F(2) ** -1).value == 6
    with pytest.raises(FieldMismatch):
        F(1) + PrimeField(7)(1)


def test_mat_mul_small_examples():
    F = PrimeField(5)
    assert mat_mul(F.matrix([[1, 2]]), F.matrix([[3], [4]])) == F.matrix([[1]])
    Y = F.matrix([[1, 2, 3], [4, 0, 1]])
    assert mat_mul(F.identity(2), Y) == Y
    with pytest.raises(DimMismatch):
        mat_mul(Y, Y)
    with pytest.raises(FieldMismatch):
        mat_mul(Y, PrimeField(7).identity(3))


@pytest.mark.parametrize("seed", range(5))
def test_mat_mul_matches_schoolbook(seed):
    rng = np.random.default_rng(seed)
    F = PrimeField(101)
    X = F.random_matrix(3, 4, rng)
    Y = F.random_matrix(4, 2, rng)
    assert mat_mul(X, Y).tolist() == schoolbook(X.tolist(), Y.tolist(), 101)


def test_mat_mul_large_prime_uses_exact_ints():
    p = 2_147_483_647
    F = PrimeField(p)
    X = F.matrix([[p - 1, p - 2, p - 3]])
    Y = F.matrix([[p - 1], [p - 1], [p - 1]])
    assert mat_mul(X, Y).tolist() == schoolbook(X.tolist(), Y.tolist(), p)


def test_matrices_are_immutable_and_reduced():
    F = PrimeField(7)
    M = F.matrix([[8, -1]])
    assert M.tolist() == [[1, 6]]
    with pytest.raises(ValueError):
        M.array[0, 0] = 3


def test_vandermonde_scalar_example():
    F = PrimeField(7)
    # oracle: evaluate 1 + 2x + 3x^2 at 1, 2, 3
    evals = [horner([1, 2, 3], x, 7) for x in (1, 2, 3)]
    assert evals == [6, 3, 6]
    coeffs = vandermonde_solve([1, 2, 3], [F.matrix([[e]]) for e in evals])
    assert [c.tolist() for c in coeffs] == [[[1]], [[2]], [[3]]]


def test_vandermonde_constant_polynomial():
    F = PrimeField(11)
    E = F.matrix([[4, 9], [0, 2]])
    coeffs = vandermonde_solve([2, 5, 7, 9], [E] * 4)
    assert coeffs[0] == E
    assert all(c.is_zero() for c in coeffs[1:])


def test_vandermonde_errors():
    F = PrimeField(7)
    E = F.matrix([[1]])
    with pytest.raises(SingularSystem):
        vandermonde_solve([1, 8], [E, E])  # 8 == 1 mod 7
    with pytest.raises(DimMismatch):
        vandermonde_solve([1, 2], [E, F.matrix([[1, 2]])])
    with pytest.raises(DimMismatch):
        vandermonde_solve([1, 2, 3], [E, E])


@settings(max_examples=60, deadline=None)
@given(
    p=st.sampled_from([7, 11]),
    n=st.integers(1, 6),
    data=st.data(),
)
def test_interpolation_round_trip(p, n, data):
    k = data.draw(st.integers(1, n))
    xs = data.draw(st.lists(st.integers(1, p - 1), min_size=n, max_size=n, unique=True))
    seed = data.draw(st.integers(0, 2**32 - 1))
    F = PrimeField(p)
    rng = np.random.default_rng(seed)
    coeffs = [F.random_matrix(2, 3, rng) for _ in range(k)]
    # forward oracle: entrywise Horner on plain lists
    lists = [c.tolist() for c in coeffs]
    points = data.draw(st.permutations(xs)).copy()[:k]
    evals = [
        F.matrix([[horner([L[r][c] for L in lists], x, p) for c in range(3)] for r in range(2)])
        for x in points
    ]
    assert vandermonde_solve(points, evals) == coeffs
    assert [evaluate_poly(coeffs, x) for x in points] == evals


def test_vstack_and_slices():
    F = PrimeField(5)
    A = F.matrix([[1, 2], [3, 4], [0, 1]])
    assert vstack([A.row_slice(0, 1), A.row_slice(1, 3)]) == A
    with pytest.raises(DimMismatch):
        vstack([A, F.matrix([[1]])])
    with pytest.raises(DimMismatch):
        FMatrix(F, np.zeros((0, 2), dtype=np.int64))
