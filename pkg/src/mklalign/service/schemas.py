"""Pydantic request/response models for the HTTP service.

Requests convert into the core dataclasses via to_* methods; responses are
built from the jsonable() form of the core reports, so the wire format and
the library reports stay in lockstep.
"""

from __future__ import annotations

from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..alignment import FiniteDistribution
from ..data import (
    BankConfig,
    CsvSource,
    DatasetConfig,
    ExplicitFamily,
    GaussianGrid,
    LibsvmSource,
    Preprocessing,
    RankOneFamily,
    SyntheticSource,
    bundled_dataset_path,
)
from ..errors import DataError
from ..kernels import KernelSpec, gaussian, linear, rank_one


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class KernelSpecModel(StrictModel):
    kind: Literal["gaussian", "linear", "rank_one"]
    gamma: float | None = None
    offset: float = 0.0
    feature_index: int | None = None

    def to_spec(self) -> KernelSpec:
        if self.kind == "gaussian":
            if self.gamma is None:
                raise DataError("gaussian kernel needs gamma")
            return gaussian(self.gamma)
        if self.kind == "linear":
            return linear(self.offset)
        if self.feature_index is None:
            raise DataError("rank_one kernel needs feature_index")
        return rank_one(self.feature_index)


class PreprocessingModel(StrictModel):
    standardize_features: bool = False
    center_labels: bool = False
    unit_second_moment_labels: bool = False

    def to_config(self) -> Preprocessing:
        return Preprocessing(
            standardize_features=self.standardize_features,
            center_labels=self.center_labels,
            unit_second_moment_labels=self.unit_second_moment_labels,
        )


class SourceModel(StrictModel):
    kind: Literal["csv", "libsvm", "synthetic", "bundled"]
    path: str | None = None
    label_column: int | str = "last"
    name: str | None = None
    generator: str | None = None
    params: dict = Field(default_factory=dict)
    seed: int = 0

    def to_source(self):
        if self.kind == "csv":
            if not self.path:
                raise DataError("csv source needs a path")
            return CsvSource(path=self.path, label_column=self.label_column)
        if self.kind == "libsvm":
            if not self.path:
                raise DataError("libsvm source needs a path")
            return LibsvmSource(path=self.path)
        if self.kind == "bundled":
            if not self.name:
                raise DataError("bundled source needs a dataset name")
            return CsvSource(path=str(bundled_dataset_path(self.name)))
        if not self.generator:
            raise DataError("synthetic source needs a generator name")
        return SyntheticSource(
            generator=self.generator, params=dict(self.params), seed=self.seed
        )


class DatasetModel(StrictModel):
    source: SourceModel
    task: Literal["classification", "regression"]
    preprocessing: PreprocessingModel = Field(default_factory=PreprocessingModel)

    def to_config(self) -> DatasetConfig:
        return DatasetConfig(
            source=self.source.to_source(),
            task=self.task,
            preprocessing=self.preprocessing.to_config(),
        )


class BankFamilyModel(StrictModel):
    kind: Literal["gaussian_grid", "rank_one", "explicit"]
    gamma0: int | None = None
    gamma1: int | None = None
    top_k: int | None = None
    kernels: list[KernelSpecModel] | None = None

    def to_family(self):
        if self.kind == "gaussian_grid":
            if self.gamma0 is None or self.gamma1 is None:
                raise DataError("gaussian_grid needs gamma0 and gamma1")
            return GaussianGrid(gamma0=self.gamma0, gamma1=self.gamma1)
        if self.kind == "rank_one":
            if self.top_k is None:
                raise DataError("rank_one family needs top_k")
            return RankOneFamily(top_k=self.top_k)
        if not self.kernels:
            raise DataError("explicit family needs a kernel list")
        return ExplicitFamily(tuple(k.to_spec() for k in self.kernels))


class BankModel(StrictModel):
    family: BankFamilyModel
    trace_one: bool = True
    frobenius_one: bool = False
    center: bool = True

    def to_config(self) -> BankConfig:
        return BankConfig(
            family=self.family.to_family(),
            trace_one=self.trace_one,
            frobenius_one=self.frobenius_one,
            center=self.center,
        )


class DistributionModel(StrictModel):
    """Finite-support distribution: either two_point_alpha or explicit atoms."""

    two_point_alpha: float | None = None
    points: list[list[float]] | None = None
    labels: list[float] | None = None
    masses: list[float] | None = None

    def to_distribution(self) -> FiniteDistribution:
        atoms = (self.points, self.labels, self.masses)
        if self.two_point_alpha is not None:
            if any(a is not None for a in atoms):
                raise DataError("give either two_point_alpha or explicit atoms")
            return FiniteDistribution.two_point(self.two_point_alpha)
        if any(a is None for a in atoms):
            raise DataError("explicit atoms need points, labels, and masses")
        return FiniteDistribution(
            points=np.asarray(self.points, dtype=float),
            labels=np.asarray(self.labels, dtype=float),
            masses=np.asarray(self.masses, dtype=float),
        )


Method = Literal["unif", "align", "alignf", "lq", "l1svm", "l2krr", "onestage"]


class WeightsRequest(StrictModel):
    dataset: DatasetModel
    bank: BankModel
    method: Method
    Lambda: float = 1.0
    q: float | None = None
    C: float = 1.0
    lambda0: float = 1.0
    gamma: float = 1.0
    gamma_prime: float = 1.0
    gamma_dprime: float = 0.0
    tol: float | None = None
    max_outer_iter: int | None = None


class WeightsResponse(StrictModel):
    spec_version: str
    dataset_id: str
    method: str
    task: str
    num_kernels: int
    kernels: list[str]
    mu: list[float]
    norm_kind: str
    radius: float
    train_alignment: float
    objectives: list[float] | None = None


class ExperimentModel(StrictModel):
    dataset: DatasetModel
    bank: BankModel
    method: Method
    folds: int = 5
    Lambda_grid: list[float] = Field(default_factory=lambda: [1.0])
    lambda_grid: list[float] = Field(default_factory=lambda: [1.0])
    q: float | None = None
    onestage_gamma_grid: list[float] = Field(default_factory=lambda: [1.0])
    onestage_gamma_prime_grid: list[float] = Field(default_factory=lambda: [1.0])
    onestage_gamma_dprime_grid: list[float] = Field(default_factory=lambda: [0.0])
    C: float = 1.0
    seed: int = 0
    threads: int = 1


class FoldResultModel(StrictModel):
    fold: int
    test_error: float
    validation_error: float
    train_alignment: float
    chosen: dict[str, float]
    unif_alignment: float | None = None
    alignf_alignment: float | None = None


class ExperimentRunModel(StrictModel):
    spec_version: str
    dataset_id: str
    method: str
    task: str
    folds: int
    seed: int
    generator: str
    num_kernels: int
    num_points: int
    fold_results: list[FoldResultModel]
    mean_test_error: float
    std_test_error: float
    mean_train_alignment: float
    std_train_alignment: float
    wall_clock_s: float


class CorrelateRequest(StrictModel):
    dataset: DatasetModel
    bank: BankModel
    folds: int = 5
    seed: int = 0
    lambda0: float = 1.0
    C: float = 1.0


class KernelCorrelationRowModel(StrictModel):
    index: int
    kernel: str
    accuracy: float
    centered_alignment: float
    uncentered_alignment: float


class CorrelationReportModel(StrictModel):
    spec_version: str
    dataset_id: str
    task: str
    folds: int
    seed: int
    rows: list[KernelCorrelationRowModel]
    pearson_centered: float | None
    pearson_uncentered: float | None


class ConcentrationRequest(StrictModel):
    distribution: DistributionModel
    kernel: KernelSpecModel
    R2: float | None = None
    Rp2: float | None = None
    delta: float = 0.05
    sample_sizes: list[int] = Field(default_factory=lambda: [25, 100, 400])
    trials: int = 500
    seed: int = 0


class ConcentrationRowModel(StrictModel):
    m: int
    bound: float
    coverage: float
    median_abs_error: float
    mean_abs_error: float
    max_abs_error: float
    bias_abs_error: float
    bias_bound: float
    redraws: int


class ConcentrationReportModel(StrictModel):
    spec_version: str
    generator: str
    seed: int
    trials: int
    delta: float
    beta: float
    rho: float
    rows: list[ConcentrationRowModel]


class PerturbationRequest(StrictModel):
    distribution: DistributionModel
    kernel: KernelSpecModel
    m: int = 50
    trials: int = 200
    seed: int = 0
    R2: float | None = None
    Rp2: float | None = None


class PerturbationReportModel(StrictModel):
    spec_version: str
    generator: str
    seed: int
    m: int
    trials: int
    bound: float
    max_abs_delta: float
    max_ratio: float
    violations: int


class PredictorRequest(StrictModel):
    dataset: DatasetModel
    kernel: KernelSpecModel


class PredictorDiagnosticsModel(StrictModel):
    spec_version: str
    task: str
    rho_hat: float
    gamma_hat: float
    empirical_error: float
    bound_value: float
    bound_satisfied: bool
    identity_residual: float


class StabilityRequest(StrictModel):
    distribution: DistributionModel
    bank: BankModel
    m: int = 30
    trials: int = 100
    seed: int = 0
    tol: float = 1e-10


class StabilityReportModel(StrictModel):
    spec_version: str
    generator: str
    seed: int
    m: int
    trials: int
    tol: float
    min_slack: float
    violations: int
    max_mu_shift: float
    redraws: int


class GenBoundRequest(StrictModel):
    Lambda1: float
    lambda0: float
    R2: float
    M_label: float
    delta_mu_norm: float
    K_group_norm: float
    m: int
    delta: float = 0.05
    empirical_error: float = 0.0


class GenBoundReportModel(StrictModel):
    spec_version: str
    m: int
    delta: float
    M1: float
    M2: float
    M2_trace_one: float
    empirical_error: float
    bound: float
    bound_trace_one: float


class TtestRequest(StrictModel):
    errors_a: list[float]
    errors_b: list[float]
    p_level: float = 0.05


class TtestDecisionModel(StrictModel):
    spec_version: str
    n: int
    mean_difference: float
    t_statistic: float
    p_value: float
    p_level: float
    significant: bool
    inconclusive: bool


class CurveRequest(StrictModel):
    alphas: list[float]


class CurvePointModel(StrictModel):
    alpha: float
    centered: float
    uncentered: float


class CurveResponse(StrictModel):
    spec_version: str
    points: list[CurvePointModel]


class HealthResponse(StrictModel):
    status: str
    version: str
    spec_version: str


class ErrorBody(StrictModel):
    kind: str
    message: str
    residual: float | None = None


class ErrorResponse(StrictModel):
    error: ErrorBody
