"""End-to-end protocol runs, transcripts and statistical checks."""
from __future__ import annotations

import csv
import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from .costs import (
    OperatingPoint,
    kimlee_factorizations,
    kimlee_point,
    on_hull_flags,
    theorem1_point,
)
from .decoder import Decoder
from .errors import DimMismatch, InsufficientTrials, ProtocolError
from .field import FMatrix, mat_mul, vstack
from .planner import (
    QueryPlan,
    build_plan,
    identity_permutations,
    server_descriptor,
    server_view,
)
from .scheme import SchemeParams, Share, secure_upload, validate_params
from .server import answer, compute_products, load_library, receive_share

STREAM_DATA = 2
STREAM_SECURITY = 3

CSV_HEADER = ["scheme", "param", "U_num", "U_den", "D_num", "D_den", "on_hull"]


def random_instance(params: SchemeParams, data_seed: int | None = None):
    """A uniform random A and library B_1..B_M for ``params``."""
    seed = params.seed if data_seed is None else data_seed
    rng = np.random.default_rng([int(seed), STREAM_DATA])
    F = params.field
    A = F.random_matrix(params.d1, params.d2, rng)
    library = [F.random_matrix(params.d2, params.d3, rng) for _ in range(params.M)]
    return A, library


@dataclass
class CostReport:
    uploaded: int
    downloaded: int
    U_measured: Fraction
    D_measured: Fraction
    U_formula: Fraction
    D_formula: Fraction
    padded: bool = False

    @property
    def matches(self) -> bool:
        return self.U_measured == self.U_formula and self.D_measured == self.D_formula

    def to_dict(self) -> dict:
        return {
            "uploaded_symbols": self.uploaded,
            "downloaded_symbols": self.downloaded,
            "U_measured": str(self.U_measured),
            "D_measured": str(self.D_measured),
            "U_formula": str(self.U_formula),
            "D_formula": str(self.D_formula),
            "padded": self.padded,
        }


@dataclass
class Transcript:
    params: SchemeParams
    shares: list[Share]
    plan: QueryPlan
    exchanges: list[tuple[int, FMatrix]]
    result: FMatrix | None
    costs: CostReport | None
    data_seed: int | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "data_seed": self.data_seed,
            "shares": [s.to_dict() for s in self.shares],
            "plan": self.plan.to_dict() if self.plan is not None else None,
            "exchanges": [{"request": rid, "answer": a.tolist()} for rid, a in self.exchanges],
            "result": self.result.tolist() if self.result is not None else None,
            "costs": self.costs.to_dict() if self.costs is not None else None,
            "error": self.error,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def write(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")


class ProtocolRunError(ProtocolError):
    """Wraps a failure inside ``run_protocol``; ``transcript`` holds what ran."""

    def __init__(self, cause: Exception, transcript: Transcript):
        super().__init__(f"{type(cause).__name__}: {cause}")
        self.cause = cause
        self.transcript = transcript


def run_protocol(
    params: SchemeParams,
    A: FMatrix | None = None,
    library: Sequence[FMatrix] | None = None,
    *,
    data_seed: int | None = None,
    mask_disabled: bool = False,
    perms=None,
    debug: bool = False,
) -> Transcript:
    """Upload, plan, answer and decode one instance end to end.

    A and the library are drawn from ``data_seed`` (default: the protocol
    seed) when not supplied.
    """
    params = validate_params(params)
    if A is None or library is None:
        gen_A, gen_lib = random_instance(params, data_seed)
        A = gen_A if A is None else A
        library = gen_lib if library is None else library
    if len(library) != params.M:
        raise DimMismatch(f"library has {len(library)} matrices, M={params.M}")

    t = Transcript(params, [], None, [], None, None, data_seed)
    try:
        t.shares, mask = secure_upload(params, A, mask_disabled=mask_disabled)
        servers = {}
        for sh in t.shares:
            st = load_library(sh.server_id, library, params.field, params.n_blocks)
            servers[sh.server_id] = compute_products(receive_share(st, sh))
        t.plan = build_plan(params, perms)
        dec = Decoder(t.plan)
        for req in t.plan.requests:
            ans = answer(servers[req.server], req)
            t.exchanges.append((req.id, ans))
            dec.consume(req, ans)
        if debug:
            t.result = dec.result(mask.data, library[params.theta - 1])
        else:
            t.result = dec.result()
    except Exception as exc:
        t.error = f"{type(exc).__name__}: {exc}"
        raise ProtocolRunError(exc, t) from exc

    uploaded = sum(s.data.size() for s in t.shares)
    block = params.block_rows * params.d3
    downloaded = len(t.exchanges) * block
    point = theorem1_point(params.N, params.M, params.K)
    t.costs = CostReport(
        uploaded=uploaded,
        downloaded=downloaded,
        U_measured=Fraction(uploaded, params.d1 * params.d2),
        D_measured=Fraction(downloaded, params.d1 * params.d3),
        U_formula=point.U,
        D_formula=point.D,
        padded=params.d1 != params.d1_pad,
    )
    return t


@dataclass
class SharedRun:
    result: FMatrix
    uploaded: int
    downloaded: int
    U_measured: Fraction
    D_measured: Fraction
    parts: list[Transcript]


def run_memory_shared(
    params1: SchemeParams,
    params2: SchemeParams,
    alpha,
    A: FMatrix,
    library: Sequence[FMatrix],
) -> SharedRun:
    """Send the top alpha*d1 rows of A with scheme 1 and the rest with scheme 2."""
    alpha = Fraction(alpha)
    d1 = A.rows
    split = alpha * d1
    if split.denominator != 1 or not 0 < split < d1:
        raise DimMismatch(f"alpha={alpha} does not split {d1} rows into two non-empty parts")
    split = int(split)
    top, bottom = A.row_slice(0, split), A.row_slice(split, d1)
    t1 = run_protocol(replace(params1, d1=split, d1_pad=None), top, library)
    t2 = run_protocol(replace(params2, d1=d1 - split, d1_pad=None), bottom, library)
    up = t1.costs.uploaded + t2.costs.uploaded
    down = t1.costs.downloaded + t2.costs.downloaded
    d2, d3 = A.cols, library[0].cols
    return SharedRun(
        vstack([t1.result, t2.result]),
        up,
        down,
        Fraction(up, d1 * d2),
        Fraction(down, d1 * d3),
        [t1, t2],
    )


# statistical checks ----------------------------------------------------------

@dataclass
class StatTestReport:
    name: str
    statistic: float
    dof: int
    p_value: float
    trials: int
    threshold: float
    details: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.p_value > self.threshold

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"{verdict} {self.name}: chi2={self.statistic:.3f} dof={self.dof} "
            f"p={self.p_value:.4g} threshold={self.threshold:.4g} trials={self.trials}"
        )


def _two_sample(c1: Counter, c2: Counter) -> tuple[float, int, float]:
    keys = sorted(set(c1) | set(c2))
    if len(keys) < 2:
        return 0.0, 0, 1.0
    table = np.array([[c1.get(k, 0) for k in keys], [c2.get(k, 0) for k in keys]])
    chi2, pval, dof, _ = stats.chi2_contingency(table, correction=False)
    return float(chi2), int(dof), float(pval)


def _gof_uniform(counts: np.ndarray) -> tuple[float, int, float]:
    res = stats.chisquare(counts)
    return float(res.statistic), len(counts) - 1, float(res.pvalue)


def security_test(
    params: SchemeParams,
    trials: int,
    *,
    mask_disabled: bool = False,
    A: Sequence[int] | None = None,
    A_prime: Sequence[int] | None = None,
    alpha: float = 0.01,
) -> StatTestReport:
    """Empirical check that one server's share is independent of A.

    Uses K-1 scalar partitions so a share is one field symbol.  For two
    different secrets, the share histograms at every server are tested
    against uniform and against each other; Bonferroni over all tests.
    """
    N, K, p = params.N, params.K, params.p
    validate_params(replace(params, d1=K - 1, d2=1, d3=1, d1_pad=None))
    if trials < 100 * p:
        raise InsufficientTrials(f"{trials} trials give fewer than 100 per cell for p={p}")
    A = np.array(A if A is not None else [0] * (K - 1), dtype=np.int64) % p
    A_prime = np.array(A_prime if A_prime is not None else [p - 1] * (K - 1), dtype=np.int64) % p
    if len(A) != K - 1 or len(A_prime) != K - 1:
        raise DimMismatch(f"secrets must have K-1={K - 1} entries")
    rng = np.random.default_rng([int(params.seed), STREAM_SECURITY])
    points = params.points or tuple(range(1, N + 1))

    def shares(secret, masks, x):
        base = sum(int(a) * pow(x, i, p) for i, a in enumerate(secret)) % p
        return (base + masks * pow(x, K - 1, p)) % p

    details = []
    for secret_name, secret in (("A", A), ("A'", A_prime)):
        masks = np.zeros(trials, dtype=np.int64) if mask_disabled else rng.integers(0, p, trials)
        for n, x in enumerate(points, start=1):
            counts = np.bincount(shares(secret, masks, x), minlength=p)
            chi2, dof, pval = _gof_uniform(counts)
            details.append({"test": f"uniform[{secret_name}] server {n}", "chi2": chi2, "dof": dof,
                            "p": pval, "counts": counts.tolist()})
    for n in range(1, N + 1):
        c1 = Counter(dict(enumerate(details[n - 1]["counts"])))
        c2 = Counter(dict(enumerate(details[N + n - 1]["counts"])))
        chi2, dof, pval = _two_sample(+c1, +c2)
        details.append({"test": f"A vs A' server {n}", "chi2": chi2, "dof": dof, "p": pval})
    worst = min(details, key=lambda d: d["p"])
    return StatTestReport(
        "security" + (" (mask disabled)" if mask_disabled else ""),
        worst["chi2"],
        worst["dof"],
        worst["p"],
        trials,
        alpha / len(details),
        details,
    )


def message_symmetric(plan: QueryPlan) -> bool:
    sym: dict[tuple[int, int], Counter] = {}
    for r in plan.requests:
        c = sym.setdefault((r.server, len(r.terms)), Counter())
        for t in r.terms:
            c[t.message] += 1
    M = plan.params.M
    return all(len({c.get(m, 0) for m in range(1, M + 1)}) == 1 for c in sym.values())


def _view_bucket(view: tuple, buckets: int) -> int:
    digest = hashlib.blake2b(repr(view).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") % buckets


def privacy_test(
    params: SchemeParams,
    trials: int,
    *,
    permute: bool = True,
    buckets: int = 64,
    alpha: float = 0.01,
    theta_pair: tuple[int, int] = (1, 2),
) -> StatTestReport:
    """Compare each server's query view under two desired indices.

    ``trials`` plans are drawn per index from per-trial seeds derived from
    ``params.seed``.  Each view is hashed into ``buckets`` cells and the two
    histograms are compared with a chi-square contingency test per server
    (Bonferroni over servers).  Every sampled plan must also be exactly
    message-symmetric, and the index-free descriptors must agree.
    """
    N, M = params.N, params.M
    if M < 2:
        return StatTestReport("privacy (M=1, vacuous)", 0.0, 0, 1.0, 0, alpha / N)
    if trials < 100 * buckets:
        raise InsufficientTrials(f"{trials} trials give fewer than 100 per cell over {buckets} buckets")
    base = validate_params(replace(params, d1=1, d2=1, d3=1, d1_pad=None))
    seeds = np.random.SeedSequence(int(params.seed)).generate_state(2 * trials, dtype=np.uint64)
    perms = None if permute else identity_permutations(M, base.n_blocks)
    hist = {th: [Counter() for _ in range(N)] for th in theta_pair}
    descriptors: dict[int, list[Counter]] = {}
    for t in range(trials):
        for k, th in enumerate(theta_pair):
            plan = build_plan(replace(base, theta=th, seed=int(seeds[2 * t + k])), perms)
            if not message_symmetric(plan):
                raise ProtocolError(f"sampled plan (trial {t}, theta={th}) is not message-symmetric")
            if t == 0:
                descriptors[th] = [server_descriptor(plan, n) for n in range(1, N + 1)]
            for n in range(1, N + 1):
                hist[th][n - 1][_view_bucket(server_view(plan, n), buckets)] += 1
    a, b = theta_pair
    if descriptors[a] != descriptors[b]:
        raise ProtocolError("index-free query descriptors differ between desired indices")
    details = []
    for n in range(N):
        chi2, dof, pval = _two_sample(hist[a][n], hist[b][n])
        details.append({"server": n + 1, "chi2": chi2, "dof": dof, "p": pval})
    worst = min(details, key=lambda d: d["p"])
    return StatTestReport(
        "privacy" + ("" if permute else " (permutations disabled)"),
        worst["chi2"],
        worst["dof"],
        worst["p"],
        trials,
        alpha / N,
        details,
    )


# CSV -------------------------------------------------------------------------

def tradeoff_points(N: int, M: int) -> list[OperatingPoint]:
    return [theorem1_point(N, M, K) for K in range(2, N + 1)]


def kimlee_points(N: int) -> list[OperatingPoint]:
    return [kimlee_point(m1, m2) for m1, m2 in kimlee_factorizations(N)]


def _rows(points: Sequence[OperatingPoint]) -> list[list]:
    by_scheme: dict[str, list[int]] = {}
    for i, pt in enumerate(points):
        by_scheme.setdefault(pt.scheme, []).append(i)
    flags = [False] * len(points)
    for idx in by_scheme.values():
        for i, f in zip(idx, on_hull_flags([points[i] for i in idx])):
            flags[i] = f
    return [
        [pt.scheme, pt.param, pt.U.numerator, pt.U.denominator,
         pt.D.numerator, pt.D.denominator, int(f)]
        for pt, f in zip(points, flags)
    ]


def write_points_csv(points: Sequence[OperatingPoint], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        w.writerows(_rows(points))


def emit_tradeoff_csv(N: int, M: int, path) -> list[OperatingPoint]:
    """Scheme points for K=2..N plus every Kim-Lee factorization of N.

    ``on_hull`` marks lower-convex-hull membership within each scheme.
    """
    points = tradeoff_points(N, M) + kimlee_points(N)
    write_points_csv(points, path)
    return points


def read_points_csv(path) -> list[OperatingPoint]:
    with open(path, newline="") as fh:
        return [
            OperatingPoint(
                Fraction(int(r["U_num"]), int(r["U_den"])),
                Fraction(int(r["D_num"]), int(r["D_den"])),
                r["scheme"],
                r["param"],
            )
            for r in csv.DictReader(fh)
        ]


def compare_kimlee(N: int, M: int) -> list[tuple[int, OperatingPoint, OperatingPoint]]:
    """(K, ours, Kim-Lee) at every upload cost both schemes reach."""
    out = []
    for m1, m2 in kimlee_factorizations(N):
        K = m1 + 1
        out.append((K, theorem1_point(N, M, K), kimlee_point(m1, m2)))
    return out


def direct_product(A: FMatrix, B: FMatrix) -> FMatrix:
    return mat_mul(A, B)
