"""Private download schedule.

Each product share_n @ B_m is cut into N**M row blocks.  The user fetches
them in K repetitions of M rounds.  A round-i request asks one server for
the sum of i blocks, each from a different message:

* round 1: K**(M-1) desired singletons per server, plus the same number
  of singletons of every other message;
* undesired sums are requested in *side-information groups*: the same sum
  at K cyclically consecutive servers, so the user can interpolate it;
* in round i+1 every group from round i is added to a fresh desired block
  at each of the N-K servers that did not serve it, and cancelled again
  after decoding.

Block indices are logical while the plan is built and are mapped through
one independent uniform permutation per message before anything is sent,
so that every server sees identically distributed queries whatever theta
is.
"""
from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Sequence

import numpy as np

from .errors import PlanInfeasible
from .scheme import STREAM_PERMS, SchemeParams, protocol_rng


@dataclass(frozen=True, order=True)
class BlockId:
    message: int
    index: int


@dataclass(frozen=True)
class Request:
    id: int
    server: int
    repetition: int
    round: int
    terms: tuple[BlockId, ...]
    # side-information group this request serves (undesired-only) or consumes
    group: int | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "server": self.server,
            "repetition": self.repetition,
            "round": self.round,
            "terms": [[t.message, t.index] for t in self.terms],
            "group": self.group,
        }


@dataclass(frozen=True)
class SideInfoGroup:
    id: int
    repetition: int
    round: int
    terms: tuple[BlockId, ...]
    servers: tuple[int, ...]


@dataclass
class QueryPlan:
    params: SchemeParams
    perms: list[list[int]]
    requests: list[Request]
    side_info: dict[int, SideInfoGroup] = field(default_factory=dict)

    def desired_requests(self) -> list[Request]:
        theta = self.params.theta
        return [r for r in self.requests if any(t.message == theta for t in r.terms)]

    def to_dict(self) -> dict:
        return {
            "perms": self.perms,
            "requests": [r.to_dict() for r in self.requests],
            "side_info": [
                {
                    "id": g.id,
                    "repetition": g.repetition,
                    "round": g.round,
                    "terms": [[t.message, t.index] for t in g.terms],
                    "servers": list(g.servers),
                }
                for g in self.side_info.values()
            ],
        }


# closed-form per-repetition counts ------------------------------------------

def desired_per_server(N: int, M: int, K: int, rnd: int) -> int:
    """Desired-bearing requests one server gets in round ``rnd`` of a repetition."""
    i = rnd - 1
    return comb(M - 1, i) * K ** (M - i - 1) * (N - K) ** i


def undesired_requests_in_round(N: int, M: int, K: int, rnd: int) -> int:
    if rnd >= M:
        return 0
    return N * comb(M - 1, rnd) * K ** (M - rnd) * (N - K) ** (rnd - 1)


def groups_in_round(N: int, M: int, K: int, rnd: int) -> int:
    if rnd >= M:
        return 0
    return N * comb(M - 1, rnd) * K ** (M - rnd - 1) * (N - K) ** (rnd - 1)


def total_desired(N: int, M: int, K: int) -> int:
    return K * sum(N * comb(M - 1, i) * K ** (M - i - 1) * (N - K) ** i for i in range(M))


def total_undesired(N: int, M: int, K: int) -> int:
    return K * sum(N * comb(M - 1, i) * K ** (M - i) * (N - K) ** (i - 1) for i in range(1, M))


# construction ----------------------------------------------------------------

def sample_permutations(M: int, size: int, rng: np.random.Generator) -> list[list[int]]:
    """M independent uniform permutations of 1..size (entry j-1 is the image of j)."""
    return [[int(v) + 1 for v in rng.permutation(size)] for _ in range(M)]


def identity_permutations(M: int, size: int) -> list[list[int]]:
    return [list(range(1, size + 1)) for _ in range(M)]


def _cyclic(n: int, N: int) -> int:
    # 1-based wrap; position N maps to N, not 0
    return (n - 1) % N + 1


def _first_repetition_desired(N: int, M: int, K: int) -> dict[int, list[int]]:
    """Logical desired indices each server fetches in repetition 1, in slot order."""
    slots: dict[int, list[int]] = {n: [] for n in range(1, N + 1)}
    base = 0
    for rnd in range(1, M + 1):
        c = desired_per_server(N, M, K, rnd)
        for n in range(1, N + 1):
            slots[n].extend(range(base + (n - 1) * c + 1, base + n * c + 1))
        base += N * c
    return slots


def build_plan(
    params: SchemeParams, perms: Sequence[Sequence[int]] | None = None
) -> QueryPlan:
    """Build the full K-repetition schedule.

    Depends only on (N, M, K, theta, seed), never on the library.  ``perms``
    overrides the seeded permutations (pass identity permutations for the
    negative-control planner).
    """
    N, M, K, theta = params.N, params.M, params.K, params.theta
    nb = params.n_blocks
    if perms is None:
        perms = sample_permutations(M, nb, protocol_rng(params.seed, STREAM_PERMS))
    perms = [list(map(int, p)) for p in perms]
    if len(perms) != M or any(sorted(p) != list(range(1, nb + 1)) for p in perms):
        raise ValueError(f"need {M} permutations of 1..{nb}")

    def phys(m: int, j: int) -> BlockId:
        return BlockId(m, perms[m - 1][j - 1])

    others = [m for m in range(1, M + 1) if m != theta]
    rep1 = _first_repetition_desired(N, M, K)
    fresh = {m: 1 for m in others}
    raw: list[tuple] = []  # (repetition, round, server, terms, group)
    groups: dict[int, SideInfoGroup] = {}

    for rep in range(1, K + 1):
        cursor = {n: 0 for n in range(1, N + 1)}

        def next_desired(n: int) -> BlockId:
            src = _cyclic(n - (rep - 1), N)
            j = rep1[src][cursor[n]]
            cursor[n] += 1
            return phys(theta, j)

        prev: list[SideInfoGroup] = []
        for rnd in range(1, M + 1):
            if rnd == 1:
                for n in range(1, N + 1):
                    for _ in range(desired_per_server(N, M, K, 1)):
                        raw.append((rep, 1, n, (next_desired(n),), None))
            else:
                # prev is already ordered by (message set, creation)
                for g in prev:
                    for n in range(1, N + 1):
                        if n in g.servers:
                            continue
                        terms = tuple(sorted((next_desired(n),) + g.terms))
                        raw.append((rep, rnd, n, terms, g.id))

            current: list[SideInfoGroup] = []
            if rnd < M:
                for subset in combinations(others, rnd):
                    for pos in range(1, groups_in_round(N, M, K, rnd) // comb(M - 1, rnd) + 1):
                        terms = []
                        for m in subset:
                            if fresh[m] > nb:
                                raise PlanInfeasible(
                                    f"message {m} ran out of fresh side-information blocks"
                                )
                            terms.append(phys(m, fresh[m]))
                            fresh[m] += 1
                        servers = tuple(_cyclic(K * (pos - 1) + t + 1, N) for t in range(K))
                        g = SideInfoGroup(len(groups), rep, rnd, tuple(sorted(terms)), servers)
                        groups[g.id] = g
                        current.append(g)
                        for n in servers:
                            raw.append((rep, rnd, n, g.terms, g.id))
            prev = current

    # A server must not be able to tell desired from undesired by arrival order.
    raw.sort(key=lambda r: (r[0], r[1], r[2], [(t.message, t.index) for t in r[3]]))
    requests = [
        Request(i, server, rep, rnd, terms, gid)
        for i, (rep, rnd, server, terms, gid) in enumerate(raw)
    ]
    return QueryPlan(params, perms, requests, groups)


def server_view(plan: QueryPlan, server: int) -> tuple:
    """Everything server ``server`` learns from the queries, canonically ordered."""
    return tuple(
        (r.repetition, r.round, tuple((t.message, t.index) for t in r.terms))
        for r in plan.requests
        if r.server == server
    )


def server_descriptor(plan: QueryPlan, server: int) -> Counter:
    """Multiset of (sum size, sorted message set) with indices erased."""
    return Counter(
        (len(r.terms), tuple(sorted(t.message for t in r.terms)))
        for r in plan.requests
        if r.server == server
    )


# validation --------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    constraint: str
    message: str
    witness: object = None


@dataclass
class ValidationReport:
    violations: list[Violation]
    desired_total: int
    undesired_total: int
    expected_desired: int
    expected_undesired: int

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def first(self) -> Violation | None:
        return self.violations[0] if self.violations else None

    def failed(self) -> set[str]:
        return {v.constraint for v in self.violations}

    def summary(self) -> str:
        if self.ok:
            return (
                f"plan OK: desired={self.desired_total} undesired={self.undesired_total}"
            )
        v = self.first
        return f"plan INVALID ({len(self.violations)} violations); first: {v.constraint}: {v.message}"


def validate_plan(plan: QueryPlan) -> ValidationReport:
    """Check the schedule against constraints C1-C6 plus request well-formedness."""
    P = plan.params
    N, M, K, theta = P.N, P.M, P.K, P.theta
    nb = P.n_blocks
    out: list[Violation] = []

    def bad(code, msg, witness=None):
        out.append(Violation(code, msg, witness))

    reqs = plan.requests
    ids = [r.id for r in reqs]
    if len(set(ids)) != len(ids):
        bad("REQ", "duplicate request ids", [i for i, c in Counter(ids).items() if c > 1][0])

    desired, undesired = [], []
    for r in reqs:
        msgs = [t.message for t in r.terms]
        if not r.terms:
            bad("REQ", "empty request", r.id)
            continue
        if not 1 <= r.server <= N or not 1 <= r.repetition <= K or not 1 <= r.round <= M:
            bad("REQ", "server/repetition/round out of range", r.id)
        if len(r.terms) != r.round:
            bad("REQ", f"round-{r.round} request sums {len(r.terms)} blocks", r.id)
        if len(set(msgs)) != len(msgs):
            bad("REQ", "request sums two blocks of one message", r.id)
        if any(not 1 <= t.message <= M or not 1 <= t.index <= nb for t in r.terms):
            bad("REQ", "block id out of range", r.id)
        n_theta = msgs.count(theta)
        if n_theta > 1:
            bad("REQ", "more than one desired term", r.id)
        (desired if n_theta else undesired).append(r)

    # C1 desired volume, per repetition, round and server
    got = Counter((r.repetition, r.round, r.server) for r in desired)
    for rep in range(1, K + 1):
        for rnd in range(1, M + 1):
            want = desired_per_server(N, M, K, rnd)
            for n in range(1, N + 1):
                if got[(rep, rnd, n)] != want:
                    bad(
                        "C1",
                        f"rep {rep} round {rnd} server {n}: {got[(rep, rnd, n)]} desired, want {want}",
                        (rep, rnd, n),
                    )
    extra = set(got) - {
        (rep, rnd, n)
        for rep in range(1, K + 1)
        for rnd in range(1, M + 1)
        for n in range(1, N + 1)
    }
    for key in sorted(extra):
        bad("C1", f"desired requests outside the schedule at {key}", key)

    # C2 undesired volume and group structure
    groups = plan.side_info
    got_u = Counter((r.repetition, r.round) for r in undesired)
    got_g = Counter((g.repetition, g.round) for g in groups.values())
    for rep in range(1, K + 1):
        for rnd in range(1, M + 1):
            want = undesired_requests_in_round(N, M, K, rnd)
            if got_u[(rep, rnd)] != want:
                bad("C2", f"rep {rep} round {rnd}: {got_u[(rep, rnd)]} undesired, want {want}", (rep, rnd))
            want_g = groups_in_round(N, M, K, rnd)
            if got_g[(rep, rnd)] != want_g:
                bad("C2", f"rep {rep} round {rnd}: {got_g[(rep, rnd)]} groups, want {want_g}", (rep, rnd))
    served = defaultdict(list)
    for r in undesired:
        g = groups.get(r.group)
        if g is None:
            bad("C2", "undesired request not tied to a side-information group", r.id)
            continue
        if r.terms != g.terms or r.repetition != g.repetition or r.round != g.round:
            bad("C2", f"request does not match its group {g.id}", r.id)
        served[g.id].append(r.server)
    for g in groups.values():
        s = served.get(g.id, [])
        if len(s) != K or len(set(s)) != K or set(s) != set(g.servers):
            bad("C2", f"group {g.id} requested at servers {sorted(s)}, want {K} distinct {sorted(g.servers)}", g.id)
        if any(t.message == theta for t in g.terms):
            bad("C2", f"group {g.id} contains a desired block", g.id)

    # C3 pairing of later-round desired requests with decoded side information
    paired = defaultdict(list)
    for r in desired:
        side = tuple(t for t in r.terms if t.message != theta)
        if r.round == 1:
            if side or r.group is not None:
                bad("C3", "round-1 desired request carries side information", r.id)
            continue
        g = groups.get(r.group)
        if g is None:
            bad("C3", "desired request uses an unknown side-information group", r.id)
            continue
        if side != g.terms:
            bad("C3", f"side-information terms differ from group {g.id}", r.id)
        if g.repetition != r.repetition or g.round != r.round - 1:
            bad("C3", f"group {g.id} was not decoded in the previous round", r.id)
        if r.server in g.servers:
            bad("C3", f"server {r.server} already served group {g.id}", r.id)
        paired[g.id].append(r.server)
    for g in groups.values():
        if g.round >= M:
            continue
        want = sorted(set(range(1, N + 1)) - set(g.servers))
        if sorted(paired.get(g.id, [])) != want:
            bad("C3", f"group {g.id} paired at {sorted(paired.get(g.id, []))}, want {want}", g.id)

    # C4 every desired block K times, at K distinct servers, once per repetition
    where = defaultdict(list)
    for r in desired:
        for t in r.terms:
            if t.message == theta:
                where[t.index].append((r.server, r.repetition))
    for j in range(1, nb + 1):
        hits = where.get(j, [])
        servers = {s for s, _ in hits}
        reps = [rep for _, rep in hits]
        if len(hits) != K or len(servers) != K or len(set(reps)) != K:
            bad("C4", f"desired block {j} fetched {len(hits)} times from servers {sorted(servers)}", BlockId(theta, j))
    for j in sorted(set(where) - set(range(1, nb + 1))):
        bad("C4", f"desired block {j} out of range", BlockId(theta, j))

    # C5 side-information blocks never reused
    owner: dict[BlockId, int] = {}
    for g in groups.values():
        for t in g.terms:
            if t in owner:
                bad("C5", f"block {t} reused by groups {owner[t]} and {g.id}", t)
            owner[t] = g.id

    # C6 message symmetry per server and sum size
    sym = defaultdict(Counter)
    for r in reqs:
        for t in r.terms:
            sym[(r.server, len(r.terms))][t.message] += 1
    for (n, s), counts in sorted(sym.items()):
        vals = {counts.get(m, 0) for m in range(1, M + 1)}
        if len(vals) != 1:
            bad("C6", f"server {n}, sum size {s}: per-message counts {dict(sorted(counts.items()))}", (n, s))

    return ValidationReport(
        out,
        desired_total=len(desired),
        undesired_total=len(undesired),
        expected_desired=total_desired(N, M, K),
        expected_undesired=total_undesired(N, M, K),
    )
