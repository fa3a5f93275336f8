"""Scheme parameters and the secure upload phase.

The confidential matrix A is zero-padded to a multiple of (K-1)*N**M rows,
split vertically into K-1 parts, and each server n receives

    share_n = sum_{i=1}^{K-1} A_i x_n**(i-1) + R x_n**(K-1)

where R is a uniformly random mask of the same shape as one part.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field, replace
from typing import Sequence

import numpy as np

from .errors import (
    BadDims,
    BadTheta,
    DimMismatch,
    FieldTooSmall,
    KOutOfRange,
    ZeroEvaluationPoint,
)
from .field import FMatrix, PrimeField, evaluate_poly, vstack

# Independent RNG streams derived from one protocol seed.
STREAM_MASK = 0
STREAM_PERMS = 1


def protocol_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), stream])


@dataclass(frozen=True)
class SchemeParams:
    N: int
    M: int
    K: int
    p: int
    d1: int
    d2: int
    d3: int
    theta: int = 1
    seed: int = 0
    points: tuple[int, ...] | None = None
    d1_pad: int | None = dc_field(default=None, compare=True)

    @property
    def field(self) -> PrimeField:
        return PrimeField(self.p)

    @property
    def n_blocks(self) -> int:
        return self.N**self.M

    @property
    def part_rows(self) -> int:
        return self.d1_pad // (self.K - 1)

    @property
    def block_rows(self) -> int:
        return self.part_rows // self.n_blocks

    @property
    def eval_points(self) -> tuple[int, ...]:
        return self.points if self.points is not None else tuple(range(1, self.N + 1))

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "M": self.M,
            "K": self.K,
            "p": self.p,
            "d1": self.d1,
            "d2": self.d2,
            "d3": self.d3,
            "d1_pad": self.d1_pad,
            "theta": self.theta,
            "seed": self.seed,
            "points": list(self.eval_points),
        }


def padded_rows(d1: int, N: int, M: int, K: int) -> int:
    unit = (K - 1) * N**M
    return -(-d1 // unit) * unit


def validate_params(raw: SchemeParams) -> SchemeParams:
    """Check ranges and record the padded row count."""
    for name in ("N", "M", "K", "p", "d1", "d2", "d3", "theta"):
        if not isinstance(getattr(raw, name), (int, np.integer)):
            raise BadDims(f"{name} must be an integer")
    if raw.N < 2:
        raise KOutOfRange(f"need at least 2 servers, got N={raw.N}")
    if raw.K < 2 or raw.K > raw.N:
        raise KOutOfRange(f"K={raw.K} outside [2, {raw.N}]")
    if raw.M < 1:
        raise BadDims(f"M={raw.M} must be positive")
    if min(raw.d1, raw.d2, raw.d3) < 1:
        raise BadDims(f"dimensions must be positive: {(raw.d1, raw.d2, raw.d3)}")
    if raw.p <= raw.N:
        raise FieldTooSmall(f"p={raw.p} must exceed N={raw.N}")
    PrimeField(raw.p)
    if not 1 <= raw.theta <= raw.M:
        raise BadTheta(f"theta={raw.theta} outside [1, {raw.M}]")
    points = tuple(int(x) % raw.p for x in raw.eval_points)
    if len(points) != raw.N:
        raise BadDims(f"{len(points)} evaluation points for {raw.N} servers")
    if 0 in points:
        raise ZeroEvaluationPoint("evaluation point 0 cancels the mask term")
    if len(set(points)) != raw.N:
        raise ZeroEvaluationPoint(f"evaluation points not distinct mod {raw.p}")
    d1_pad = padded_rows(raw.d1, raw.N, raw.M, raw.K)
    return replace(raw, points=points, d1_pad=d1_pad)


def pad_rows(A: FMatrix, rows: int) -> FMatrix:
    if A.rows > rows:
        raise DimMismatch(f"cannot pad {A.rows} rows down to {rows}")
    if A.rows == rows:
        return A
    return vstack([A, A.field.zeros(rows - A.rows, A.cols)])


def partition_rows(A: FMatrix, K: int) -> list[FMatrix]:
    parts = K - 1
    if parts < 1 or A.rows % parts:
        raise DimMismatch(f"{A.rows} rows do not split into {parts} parts")
    h = A.rows // parts
    return [A.row_slice(i * h, (i + 1) * h) for i in range(parts)]


@dataclass(frozen=True)
class MaskMatrix:
    data: FMatrix


def sample_mask(shape: tuple[int, int], field: PrimeField, rng: np.random.Generator) -> MaskMatrix:
    # Generator.integers is unbiased (bounded rejection sampling)
    return MaskMatrix(field.random_matrix(shape[0], shape[1], rng))


@dataclass(frozen=True)
class Share:
    server_id: int
    x: int
    data: FMatrix

    def to_dict(self) -> dict:
        return {"server": self.server_id, "x": self.x, "data": self.data.tolist()}


def encode_shares(
    parts: Sequence[FMatrix], R: MaskMatrix | FMatrix, points: Sequence[int]
) -> list[Share]:
    mask = R.data if isinstance(R, MaskMatrix) else R
    shape = parts[0].shape
    if any(P.shape != shape for P in parts) or mask.shape != shape:
        raise DimMismatch("partitions and mask must share one shape")
    p = mask.field.p
    xs = [int(x) % p for x in points]
    if 0 in xs:
        raise ZeroEvaluationPoint("evaluation point 0 cancels the mask term")
    if len(set(xs)) != len(xs):
        raise ZeroEvaluationPoint("evaluation points must be distinct")
    coeffs = list(parts) + [mask]
    return [Share(n + 1, x, evaluate_poly(coeffs, x)) for n, x in enumerate(xs)]


def secure_upload(
    params: SchemeParams, A: FMatrix, mask_disabled: bool = False
) -> tuple[list[Share], MaskMatrix]:
    """Pad, partition, mask and encode A for all N servers.

    ``mask_disabled`` zeroes R; it exists only for negative-control tests.
    """
    if A.shape != (params.d1, params.d2):
        raise DimMismatch(f"A has shape {A.shape}, params say {(params.d1, params.d2)}")
    parts = partition_rows(pad_rows(A, params.d1_pad), params.K)
    shape = parts[0].shape
    if mask_disabled:
        mask = MaskMatrix(params.field.zeros(*shape))
    else:
        mask = sample_mask(shape, params.field, protocol_rng(params.seed, STREAM_MASK))
    return encode_shares(parts, mask, params.eval_points), mask
