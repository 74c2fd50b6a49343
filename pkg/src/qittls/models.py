"""Data models using Pydantic for type safety and validation."""

import cmath
from enum import StrEnum
from pathlib import Path
from typing import Any, ClassVar

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class ArrayModel(BaseModel):
    """Base for immutable result records that carry numpy arrays."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class Method(StrEnum):
    """Solver provenance."""

    TLS = "TLS"
    TTLS = "TTLS"
    QITTLS = "QiTTLS"
    RTTLS = "RTTLS"


class SvdFactors(ArrayModel):
    """Thin SVD M = U diag(sigma) V^T with descending sigma.

    When a full right factor was requested for a wide matrix, V carries more
    columns than sigma has entries; the trailing columns span the null space.
    """

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    @property
    def rank_count(self) -> int:
        return int(self.sigma.shape[0])

    def reconstruct(self) -> np.ndarray:
        r = self.rank_count
        return (self.U[:, :r] * self.sigma) @ self.V[:, :r].T


class QiSvdParams(BaseModel):
    """User inputs (epsilon, k, delta) and the derived sketch parameter cascade."""

    epsilon: float = Field(gt=0)
    k: int = Field(ge=1)
    delta: float = Field(gt=0, lt=1)
    xi: float = Field(gt=0, lt=0.5)
    alpha: float = Field(gt=0)
    theta: float = Field(gt=0)
    p_theory: int = Field(ge=1)
    p_used: int = Field(ge=1)
    p_overridden: bool = False
    feasibility_cap: int = Field(default=10**7, ge=1)
    alpha_denominator: float = Field(default=100.0, gt=0)
    warnings: list[str] = Field(default_factory=list)


class SketchState(ArrayModel):
    """Sampled indices, their probabilities and the rescaled sketches S and W."""

    row_indices: np.ndarray
    row_probs: np.ndarray
    S: np.ndarray
    col_indices: np.ndarray
    col_probs: np.ndarray
    W: np.ndarray


class ApproxRightSingular(ArrayModel):
    """Approximate right singular matrix V_hat of shape (n+1) x l."""

    V_hat: np.ndarray
    sigma_bar: np.ndarray
    sigma_bar_all: np.ndarray
    l: int = Field(ge=1)  # noqa: E741
    orthogonality_frob: float
    xi: float | None = None
    sketch: SketchState | None = None


class OrthogonalityReport(BaseModel):
    """Deviation of V_hat from having orthonormal columns."""

    spectral_deviation: float
    frobenius_deviation: float
    frobenius_norm2: float
    spectral_norm: float


class TtlsSolution(ArrayModel):
    """Solution vector plus provenance and diagnostics."""

    x: np.ndarray
    method: Method
    d: int = Field(ge=1)
    tau_d: float | None = None
    v22: float | None = None
    generic: bool | None = None
    rank_deficient: bool = False
    l: int | None = None
    wall_time: float = 0.0


class SubspaceBound(BaseModel):
    """Subspace error bound epsilon_v and its gap hypothesis."""

    epsilon_v: float
    eta: float
    q: int
    hypothesis_ok: bool


class BoundReport(BaseModel):
    """Relative solution error bound together with each hypothesis flag."""

    epsilon_v: float
    gap_eta: float | None = None
    gap_ok: bool = True
    tau_d: float
    tau_ok: bool
    b_ok: bool
    x_nonzero: bool = True
    hypothesis_ok: bool
    rhs: float
    observed: float | None = None
    trial: int | None = None


class TestProblem(ArrayModel):
    """Exact operator, right-hand side and (when known) exact solution."""

    __test__: ClassVar[bool] = False

    name: str
    A_tilde: np.ndarray
    b_tilde: np.ndarray
    x_true: np.ndarray | None = None
    consistency_tol: float | None = None
    rank: int | None = None


class NoiseSpec(BaseModel):
    """Relative noise level and seed for the uniform noise model."""

    eta: float = Field(default=1e-3, ge=0)
    seed: int = 0


def _as_pair(value: Any) -> tuple[float, float]:
    if isinstance(value, dict):
        return float(value.get("re", 0.0)), float(value.get("im", 0.0))
    if isinstance(value, (list, tuple)):
        re, im = value
        return float(re), float(im)
    z = complex(value)
    return z.real, z.imag


class PronySpec(BaseModel):
    """Poles lambda_j, residues gamma_j, sampling interval and system size."""

    poles: list[tuple[float, float]]
    residues: list[tuple[float, float]]
    t_step: float = Field(default=0.2, gt=0)
    m: int = Field(ge=1)
    n: int = Field(ge=1)

    @field_validator("poles", "residues", mode="before")
    @classmethod
    def _coerce_complex(cls, value: Any) -> list[tuple[float, float]]:
        return [_as_pair(v) for v in value]

    @model_validator(mode="after")
    def _check_lengths(self) -> "PronySpec":
        if len(self.poles) != len(self.residues):
            raise ValueError(
                f"got {len(self.poles)} poles but {len(self.residues)} residues"
            )
        if not self.poles:
            raise ValueError("at least one pole is required")
        return self

    def pole_array(self) -> np.ndarray:
        return np.array([complex(re, im) for re, im in self.poles])

    def residue_array(self) -> np.ndarray:
        return np.array([complex(re, im) for re, im in self.residues])

    def nodes(self) -> np.ndarray:
        """z_j = exp(lambda_j * t)."""
        return np.array([cmath.exp(lam * self.t_step) for lam in self.pole_array()])


class BenchConfig(BaseModel):
    """One benchmark sweep: problem, sizes, methods and sketch parameters."""

    model_config = ConfigDict(extra="forbid")

    problem: str = "foxgood"
    m: int = Field(default=256, ge=1)
    n: int | None = Field(default=None, ge=1)
    d: int = Field(default=4, ge=1)
    methods: list[Method] = Field(default_factory=lambda: [Method.TTLS, Method.RTTLS, Method.QITTLS])
    eta: float = Field(default=1e-3, ge=0)
    epsilon: float = Field(default=1e-3, gt=0)
    k: int | None = Field(default=None, ge=1)
    delta: float = Field(default=0.1, gt=0, lt=1)
    p: int | None = Field(default=200, ge=1)
    alpha_denominator: float = Field(default=100.0, gt=0)
    trials: int = Field(default=10, ge=1)
    seed: int = 0
    rttls_sketch: int = Field(default=20, ge=1)
    t_step: float = Field(default=0.2, gt=0)
    pole_file: Path | None = None
    workers: int = Field(default=1, ge=1)
    timing: bool = False
    out: Path | None = None

    @field_validator("methods", mode="before")
    @classmethod
    def _split_methods(cls, value: Any) -> Any:
        if isinstance(value, str):
            value = [v.strip() for v in value.split(",") if v.strip()]
        if isinstance(value, list):
            lookup = {m.value.lower(): m.value for m in Method}
            value = [lookup.get(str(v).lower(), v) for v in value]
        return value

    @model_validator(mode="after")
    def _check(self) -> "BenchConfig":
        if not self.methods:
            raise ValueError("method set must be nonempty")
        if Method.TLS in self.methods:
            raise ValueError("benchmark methods are TTLS, RTTLS and QiTTLS")
        if self.k is not None and self.k < self.d:
            raise ValueError(f"k={self.k} must be at least d={self.d}")
        return self

    @property
    def effective_k(self) -> int:
        return self.k if self.k is not None else self.d

    @property
    def is_prony(self) -> bool:
        return self.problem == "prony"


class PronyConfig(BenchConfig):
    """Noiseless Prony sweep; errors are measured against the exact TTLS solution."""

    problem: str = "prony"
    m: int = Field(default=1000, ge=1)
    n: int | None = Field(default=1000, ge=1)
    d: int = Field(default=12, ge=1)
    eta: float = Field(default=0.0, ge=0)
    trials: int = Field(default=5, ge=1)

    @model_validator(mode="after")
    def _check_problem(self) -> "PronyConfig":
        if self.problem != "prony":
            raise ValueError(f"Prony runs use problem 'prony', got {self.problem!r}")
        return self


class ConcentrationConfig(BaseModel):
    """Monte Carlo check of the sampled Gram-matrix deviation."""

    model_config = ConfigDict(extra="forbid")

    rows: int = Field(default=20, ge=1)
    cols: int = Field(default=10, ge=1)
    p: int = Field(default=200, ge=1)
    theta: float = Field(default=0.3, gt=0)
    trials: int = Field(default=500, ge=1)
    seed: int = 0
    out: Path | None = None


class TrialRecord(BaseModel):
    """One solver run inside a benchmark sweep."""

    problem: str
    m: int
    d: int
    method: Method
    trial: int = Field(ge=0)
    seed: int
    eta: float
    error: float | None = Field(default=None, ge=0)
    reference: str = "x_true"
    wall_time: float = Field(default=0.0, ge=0)
    status: str = "ok"


class ResultSummary(BaseModel):
    """Median error and solve time of one (problem, m, d, method) group."""

    problem: str
    m: int
    d: int
    method: Method
    trials: int
    failures: int
    median_error: float | None = None
    median_time: float


class BenchRun(ArrayModel):
    """Records of a sweep plus the first trial's arrays for plot files."""

    config: BenchConfig
    records: list[TrialRecord]
    decay: np.ndarray
    reference: np.ndarray | None = None
    reference_label: str = "x_true"
    solutions: dict[str, np.ndarray] = Field(default_factory=dict)


class ConcentrationSummary(BaseModel):
    """Empirical violation fractions of the sampled Gram-matrix deviation."""

    rows: int
    cols: int
    p: int
    theta: float
    trials: int
    seed: int
    bound: float
    row_violation_fraction: float
    col_violation_fraction: float
    row_mean_deviation: float
    col_mean_deviation: float


class AuditConfig(BaseModel):
    """Toy instances for auditing the solution error bound."""

    model_config = ConfigDict(extra="forbid")

    m: int = Field(default=8, ge=4)
    d: int = Field(default=2, ge=1)
    k: int = Field(default=3, ge=1)
    q: int | None = Field(default=None, ge=1)
    epsilon: float = Field(default=1e-6, gt=0)
    delta: float = Field(default=0.1, gt=0, lt=1)
    trials: int = Field(default=20, ge=1)
    seed: int = 0
    sigma: list[float] | None = None
    exhaustive: bool = True
    p: int | None = Field(default=None, ge=1)
    out: Path | None = None

    @model_validator(mode="after")
    def _check(self) -> "AuditConfig":
        if self.m & (self.m - 1):
            raise ValueError(f"m={self.m} must be a power of two")
        q = self.q if self.q is not None else self.k
        if not self.d <= q <= self.k < self.m:
            raise ValueError(f"need d <= q <= k < m, got d={self.d}, q={q}, k={self.k}, m={self.m}")
        if self.sigma is not None and len(self.sigma) != self.m:
            raise ValueError(f"sigma must have {self.m} entries")
        return self

    @property
    def effective_q(self) -> int:
        return self.q if self.q is not None else self.k
