"""Honest-but-curious server simulation (in-process, no networking)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .errors import (
    DimMismatch,
    DivisibilityError,
    EmptyRequest,
    FieldMismatch,
    ProtocolError,
    UnknownBlock,
    WrongServer,
)
from .field import FMatrix, PrimeField, linear_combination, mat_mul
from .planner import Request
from .scheme import Share


@dataclass
class ServerState:
    server_id: int
    field: PrimeField
    n_blocks: int
    library: tuple[FMatrix, ...]
    share: Share | None = None
    products: list[FMatrix] = field(default_factory=list)
    # blocks[m-1][j-1] is block j of message m
    blocks: list[list[FMatrix]] = field(default_factory=list)

    @property
    def x(self) -> int | None:
        return None if self.share is None else self.share.x


def load_library(
    server_id: int, library: Sequence[FMatrix], field: PrimeField, n_blocks: int
) -> ServerState:
    if not library:
        raise DimMismatch("empty library")
    shape = library[0].shape
    for B in library:
        if B.field != field:
            raise FieldMismatch(f"library matrix is mod {B.field.p}, scheme is mod {field.p}")
        if B.shape != shape:
            raise DimMismatch(f"library shapes differ: {B.shape} vs {shape}")
    return ServerState(server_id, field, n_blocks, tuple(library))


def receive_share(state: ServerState, share: Share) -> ServerState:
    if share.server_id != state.server_id:
        raise WrongServer(f"share for server {share.server_id} sent to {state.server_id}")
    if share.data.field != state.field:
        raise FieldMismatch("share field differs from library field")
    if share.data.cols != state.library[0].rows:
        raise DimMismatch(f"share {share.data.shape} cannot multiply {state.library[0].shape}")
    state.share = share
    return state


def compute_products(state: ServerState) -> ServerState:
    """Multiply the share with every library matrix and cut into row blocks."""
    if state.share is None:
        raise ProtocolError(f"server {state.server_id} has no share yet")
    rows = state.share.data.rows
    if rows % state.n_blocks:
        raise DivisibilityError(f"{rows} rows do not split into {state.n_blocks} blocks")
    h = rows // state.n_blocks
    state.products = [mat_mul(state.share.data, B) for B in state.library]
    state.blocks = [
        [prod.row_slice(j * h, (j + 1) * h) for j in range(state.n_blocks)]
        for prod in state.products
    ]
    return state


def answer(state: ServerState, req: Request) -> FMatrix:
    if req.server != state.server_id:
        raise WrongServer(f"request {req.id} for server {req.server} sent to {state.server_id}")
    if not req.terms:
        raise EmptyRequest(f"request {req.id} has no terms")
    if not state.blocks:
        raise ProtocolError(f"server {state.server_id} has not computed its products")
    picked = []
    for t in req.terms:
        if not 1 <= t.message <= len(state.blocks) or not 1 <= t.index <= state.n_blocks:
            raise UnknownBlock(f"no block {t} at server {state.server_id}")
        picked.append(state.blocks[t.message - 1][t.index - 1])
    if len(picked) == 1:
        return picked[0]
    return linear_combination([1] * len(picked), picked)
