"""User-side decoding of the download phase.

Answers are consumed in plan order.  Side-information groups are
interpolated as soon as their K answers are in; later desired answers have
the group's contribution at their server subtracted before being filed as
an evaluation of the desired block.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

from .errors import (
    DecodeError,
    IncompleteDownload,
    MissingSideInfo,
    NotEnoughAnswers,
    SingularSystem,
)
from .field import FMatrix, evaluate_poly, mat_mul, vandermonde_solve, vstack
from .planner import QueryPlan, Request
from .scheme import SchemeParams


def reconstruct_group(evals: Sequence[tuple[int, FMatrix]], K: int) -> list[FMatrix]:
    """Interpolate the K coefficient matrices from (point, evaluation) pairs.

    Returns [A_1 B, ..., A_{K-1} B, R B] restricted to one block.
    """
    if len(evals) < K:
        raise NotEnoughAnswers(f"{len(evals)} evaluations, need {K}")
    use = list(evals)[:K]
    xs = [x for x, _ in use]
    if len(set(xs)) != K:
        raise SingularSystem(f"repeated evaluation points {xs}")
    return vandermonde_solve(xs, [e for _, e in use])


@dataclass
class SideInfoLedger:
    """Decoded side-information groups, keyed by group id."""

    pending: dict[int, list[tuple[int, FMatrix]]] = field(default_factory=lambda: defaultdict(list))
    decoded: dict[int, list[FMatrix]] = field(default_factory=dict)

    def add(self, group: int, x: int, value: FMatrix, K: int) -> None:
        if group in self.decoded:
            return
        self.pending[group].append((x, value))
        if len(self.pending[group]) == K:
            self.decoded[group] = reconstruct_group(self.pending.pop(group), K)


@dataclass
class DesiredAccumulator:
    evals: dict[int, list[tuple[int, FMatrix]]] = field(default_factory=lambda: defaultdict(list))

    def add(self, index: int, x: int, value: FMatrix) -> None:
        self.evals[index].append((x, value))


def cancel_side_info(answer: FMatrix, req: Request, ledger: SideInfoLedger, x: int) -> FMatrix:
    if req.group is None:
        return answer
    coeffs = ledger.decoded.get(req.group)
    if coeffs is None:
        raise MissingSideInfo(f"request {req.id} needs group {req.group}, not decoded yet")
    return answer - evaluate_poly(coeffs, x)


class Decoder:
    """Streaming consumer of (request, answer) pairs for one plan."""

    def __init__(self, plan: QueryPlan):
        self.plan = plan
        self.params = plan.params
        self.points = dict(enumerate(self.params.eval_points, start=1))
        self.ledger = SideInfoLedger()
        self.acc = DesiredAccumulator()

    def consume(self, req: Request, ans: FMatrix) -> None:
        theta = self.params.theta
        x = self.points[req.server]
        desired = [t for t in req.terms if t.message == theta]
        if not desired:
            self.ledger.add(req.group, x, ans, self.params.K)
            return
        self.acc.add(desired[0].index, x, cancel_side_info(ans, req, self.ledger, x))

    def result(self, mask: FMatrix | None = None, B_theta: FMatrix | None = None) -> FMatrix:
        return assemble_result(self.acc, self.plan.perms, self.params, mask, B_theta)


def assemble_result(
    acc: DesiredAccumulator,
    perms,
    params: SchemeParams,
    mask: FMatrix | None = None,
    B_theta: FMatrix | None = None,
) -> FMatrix:
    """Interpolate every desired block and stack A_1 B, ..., A_{K-1} B.

    Desired blocks are keyed by their permuted (server-side) index, which is
    also their true row position, so the permutation needs no explicit
    inversion here; ``perms`` is accepted for completeness.  If ``mask`` and
    ``B_theta`` are given, the recovered R B_theta component of every block
    is checked against them (debug mode).
    """
    K, nb = params.K, params.n_blocks
    missing = [j for j in range(1, nb + 1) if len(acc.evals.get(j, ())) < K]
    if missing:
        raise IncompleteDownload(f"{len(missing)} desired blocks lack {K} evaluations, e.g. {missing[0]}")
    per_part: list[list[FMatrix]] = [[] for _ in range(K - 1)]
    mask_rb = mat_mul(mask, B_theta) if mask is not None and B_theta is not None else None
    h = params.block_rows
    for j in range(1, nb + 1):
        comps = reconstruct_group(acc.evals[j], K)
        for i in range(K - 1):
            per_part[i].append(comps[i])
        if mask_rb is not None and comps[K - 1] != mask_rb.row_slice((j - 1) * h, j * h):
            raise DecodeError(f"mask component of block {j} inconsistent")
    full = vstack([vstack(blocks) for blocks in per_part])
    return full.row_slice(0, params.d1)
