"""Exact upload/download cost curves.

All values are ``fractions.Fraction``; nothing here touches floating point.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Sequence

from .errors import AlphaOutOfRange, BadFactorization, KOutOfRange

Rational = Fraction


@dataclass(frozen=True)
class OperatingPoint:
    U: Fraction
    D: Fraction
    scheme: str = ""
    param: str = ""

    def coords(self) -> tuple[Fraction, Fraction]:
        return (self.U, self.D)


def _check_k(N: int, K: int, upper: int) -> None:
    if N < 2 or K < 2 or K > upper:
        raise KOutOfRange(f"K={K} outside [2, {upper}] for N={N}")


def theorem1_point(N: int, M: int, K: int) -> OperatingPoint:
    """(N/(K-1), K/(K-1) * sum_{i<M} (K/N)**i), via the series so K = N is fine."""
    _check_k(N, K, N)
    if M < 1:
        raise KOutOfRange(f"M={M} must be positive")
    r = Fraction(K, N)
    D = Fraction(K, K - 1) * sum(r**i for i in range(M))
    return OperatingPoint(Fraction(N, K - 1), D, "theorem1", f"K={K}")


def theorem1_download_binomial(N: int, M: int, K: int) -> Fraction:
    """Download cost as K/(K-1) * (1 + undesired/desired) from the schedule counts."""
    _check_k(N, K, N)
    desired = K * sum(N * comb(M - 1, i) * K ** (M - i - 1) * (N - K) ** i for i in range(M))
    undesired = K * sum(N * comb(M - 1, i) * K ** (M - i) * (N - K) ** (i - 1) for i in range(1, M))
    return Fraction(K, K - 1) * (1 + Fraction(undesired, desired))


def theorem1_download_geometric(N: int, M: int, K: int) -> Fraction:
    """Closed geometric form; undefined at K = N."""
    _check_k(N, K, N - 1)
    r = Fraction(K, N)
    return Fraction(K, K - 1) * (1 - r**M) / (1 - r)


def kimlee_point(m1: int, m2: int) -> OperatingPoint:
    if m1 < 1 or m2 < 1:
        raise BadFactorization(f"(m1, m2) = ({m1}, {m2}) must both be positive")
    N = (m1 + 1) * (m2 + 1)
    return OperatingPoint(Fraction(N, m1), Fraction(N, m1 * m2), "kimlee", f"m1={m1};m2={m2}")


def kimlee_point_k(N: int, K: int) -> OperatingPoint:
    _check_k(N, K, N - 1)
    return OperatingPoint(
        Fraction(N, K - 1),
        Fraction(K, K - 1) * Fraction(N, N - K),
        "kimlee",
        f"K={K}",
    )


def kimlee_factorizations(N: int) -> list[tuple[int, int]]:
    return [(a - 1, N // a - 1) for a in range(2, N) if N % a == 0 and N // a >= 2]


def min_upload(N: int) -> Fraction:
    if N < 2:
        raise KOutOfRange(f"N={N} must be at least 2")
    return Fraction(N, N - 1)


def memory_share(pt1: OperatingPoint, pt2: OperatingPoint, alpha) -> OperatingPoint:
    alpha = Fraction(alpha)
    if not 0 <= alpha <= 1:
        raise AlphaOutOfRange(f"alpha={alpha} outside [0, 1]")
    return OperatingPoint(
        alpha * pt1.U + (1 - alpha) * pt2.U,
        alpha * pt1.D + (1 - alpha) * pt2.D,
        "memory_share",
        f"alpha={alpha};{pt1.param}|{pt2.param}",
    )


def _cross(o, a, b) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def lower_convex_hull(points: Iterable[OperatingPoint]) -> list[OperatingPoint]:
    """Points on the lower-left convex envelope, sorted by U.

    Collinear points on an envelope edge are kept; exact duplicates are
    reported once.
    """
    uniq: dict[tuple, OperatingPoint] = {}
    for pt in points:
        uniq.setdefault(pt.coords(), pt)
    pts = sorted(uniq.values(), key=OperatingPoint.coords)
    hull: list[OperatingPoint] = []
    for pt in pts:
        while len(hull) >= 2 and _cross(hull[-2].coords(), hull[-1].coords(), pt.coords()) < 0:
            hull.pop()
        # same U, higher D: never on the envelope
        if hull and hull[-1].U == pt.U:
            continue
        hull.append(pt)
    # past the lowest D the chain climbs again; those points are dominated
    best = min(range(len(hull)), key=lambda i: (hull[i].D, hull[i].U))
    return hull[: best + 1]


def on_hull_flags(points: Sequence[OperatingPoint]) -> list[bool]:
    hull = {pt.coords() for pt in lower_convex_hull(points)}
    return [pt.coords() in hull for pt in points]
