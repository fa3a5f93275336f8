"""Secure and private distributed matrix multiplication.

A user secret-shares a confidential matrix A to N servers and privately
downloads A @ B_theta for one of M public matrices, using a coded-PIR
download schedule.  Costs are accounted exactly in field symbols.
"""
from .costs import (
    OperatingPoint,
    kimlee_point,
    kimlee_point_k,
    lower_convex_hull,
    memory_share,
    min_upload,
    theorem1_point,
)
from .field import FMatrix, FieldElement, PrimeField, field_new, mat_mul, vandermonde_solve
from .harness import (
    CostReport,
    StatTestReport,
    Transcript,
    emit_tradeoff_csv,
    privacy_test,
    run_memory_shared,
    run_protocol,
    security_test,
)
from .planner import BlockId, QueryPlan, Request, build_plan, validate_plan
from .scheme import SchemeParams, validate_params

__version__ = "0.1.0"
