"""Cross-validation harness, correlation study, and paired comparisons.

The CV protocol uses fold rotations: with f folds, each rotation takes one
fold for testing, the next for validation, and the remaining f - 2 for
training. The combination radius is chosen per rotation by validation error;
C and the ridge parameter stay fixed, since only the ratio of radius to
regularizer matters for the final predictor.
"""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
import scipy.stats

from .alignment import (
    FiniteDistribution,
    centered_alignment,
    population_report,
    uncentered_alignment,
)
from .data import (
    BankConfig,
    CsvSource,
    DatasetConfig,
    ExplicitFamily,
    LibsvmSource,
    SyntheticSource,
    build_bank,
    load_dataset,
)
from .errors import DataError, MklAlignError
from .kernels import Sample, combine, label_kernel, linear
from .learners import (
    OneStageConfig,
    classify,
    krr_fit,
    l1svm_learn,
    l2krr_learn,
    onestage_learn,
    predict,
    svm_fit,
)
from .reports import SPEC_VERSION, jsonable
from .seeding import GENERATOR_NAME, generator
from .weights import (
    align_weights,
    alignf_weights,
    lq_weights,
    unif_weights,
)

METHODS = ("unif", "align", "alignf", "lq", "l1svm", "l2krr", "onestage")
DEFAULT_C = 1.0
DEFAULT_LAMBDA0 = 1.0
DOMINANCE_TOL = 1e-8


@dataclass(frozen=True)
class ExperimentConfig:
    """One cross-validated kernel-learning experiment."""

    dataset: DatasetConfig
    bank: BankConfig
    method: str
    folds: int = 5
    Lambda_grid: tuple = (1.0,)
    lambda_grid: tuple = (DEFAULT_LAMBDA0,)
    q: float | None = None
    onestage_gamma_grid: tuple = (1.0,)
    onestage_gamma_prime_grid: tuple = (1.0,)
    onestage_gamma_dprime_grid: tuple = (0.0,)
    C: float = DEFAULT_C
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise DataError(f"method must be one of {METHODS}, got {self.method!r}")
        if int(self.folds) < 2:
            raise DataError("folds must be at least 2")
        for name in ("Lambda_grid", "lambda_grid"):
            grid = tuple(float(v) for v in getattr(self, name))
            if not grid or any(v <= 0.0 for v in grid):
                raise DataError(f"{name} must be non-empty and positive")
            object.__setattr__(self, name, grid)
        for name in (
            "onestage_gamma_grid",
            "onestage_gamma_prime_grid",
            "onestage_gamma_dprime_grid",
        ):
            grid = tuple(float(v) for v in getattr(self, name))
            if not grid or any(v < 0.0 for v in grid):
                raise DataError(f"{name} must be non-empty and nonnegative")
            object.__setattr__(self, name, grid)
        if self.method == "lq":
            if self.q is None or float(self.q) <= 1.0:
                raise DataError("method lq needs q > 1")
            object.__setattr__(self, "q", float(self.q))
        if self.method == "l1svm" and self.task != "classification":
            raise DataError("l1svm is a classification method")
        if self.method in ("l2krr", "onestage") and self.task != "regression":
            raise DataError(f"{self.method} is a regression method")
        if float(self.C) <= 0.0:
            raise DataError("C must be positive")
        if int(self.threads) < 1:
            raise DataError("threads must be at least 1")

    @property
    def task(self) -> str:
        return self.dataset.task


@dataclass(frozen=True)
class FoldResult:
    fold: int
    test_error: float
    validation_error: float
    train_alignment: float
    chosen: dict
    unif_alignment: float | None = None
    alignf_alignment: float | None = None


@dataclass(frozen=True)
class ExperimentRun:
    spec_version: str
    dataset_id: str
    method: str
    task: str
    folds: int
    seed: int
    generator: str
    num_kernels: int
    num_points: int
    fold_results: tuple
    mean_test_error: float
    std_test_error: float
    mean_train_alignment: float
    std_train_alignment: float
    wall_clock_s: float

    def to_dict(self) -> dict:
        return jsonable(self)


def dataset_id(cfg: DatasetConfig) -> str:
    src = cfg.source
    if isinstance(src, CsvSource):
        return f"csv:{src.path}"
    if isinstance(src, LibsvmSource):
        return f"libsvm:{src.path}"
    if isinstance(src, SyntheticSource):
        return f"synthetic:{src.generator}"
    return type(src).__name__


def _combine_cross(cross_mats, mu) -> np.ndarray:
    out = np.zeros_like(cross_mats[0])
    for w, C in zip(np.asarray(mu, dtype=float).ravel(), cross_mats):
        out += w * C
    return out


def _fold_error(task, model, mu, bank, points, labels, label_offset) -> float:
    Kx = _combine_cross(bank.cross(points), mu)
    if task == "classification":
        return float(np.mean(classify(model, Kx) != labels))
    preds = predict(model, Kx) + label_offset
    return float(np.sqrt(np.mean((preds - labels) ** 2)))


def _hyper_grid(cfg: ExperimentConfig):
    if cfg.method == "onestage":
        grid = [
            {"gamma": g, "gamma_prime": gp, "gamma_dprime": gd}
            for g, gp, gd in itertools.product(
                cfg.onestage_gamma_grid,
                cfg.onestage_gamma_prime_grid,
                cfg.onestage_gamma_dprime_grid,
            )
            if gp > 0.0 or gd > 0.0
        ]
        if not grid:
            raise DataError("onestage grid has no point with a positive penalty")
        return grid
    if cfg.task == "classification":
        return [{"Lambda": v} for v in cfg.Lambda_grid]
    return [
        {"Lambda": v, "lambda0": l}
        for v, l in itertools.product(cfg.Lambda_grid, cfg.lambda_grid)
    ]


def _fit_candidate(cfg: ExperimentConfig, bank, y, hyper):
    """Weights plus fitted second-stage model for one hyperparameter point."""
    task = cfg.task
    lambda0 = hyper.get("lambda0", DEFAULT_LAMBDA0)
    if cfg.method == "l1svm":
        fit = l1svm_learn(bank, y, C=cfg.C, radius=hyper["Lambda"])
        return fit.mu, fit.model
    if cfg.method == "l2krr":
        fit = l2krr_learn(bank, y, lambda0=lambda0, radius=hyper["Lambda"])
        return fit.mu, fit.model
    if cfg.method == "onestage":
        one = OneStageConfig(
            gamma=hyper["gamma"],
            gamma_prime=hyper["gamma_prime"],
            gamma_dprime=hyper["gamma_dprime"],
        )
        fit = onestage_learn(bank, y, one)
        return fit.mu, fit.model

    Lambda = hyper["Lambda"]
    if cfg.method == "unif":
        w = unif_weights(bank.p, radius=Lambda)
    elif cfg.method == "align":
        w = align_weights(bank, y, radius=Lambda)
    elif cfg.method == "alignf":
        w = alignf_weights(bank, y, radius=Lambda, norm_kind="l1")
    else:  # lq
        w = lq_weights(bank, y, cfg.q, radius=Lambda)
    K = combine(bank, w.mu)
    if task == "classification":
        model = svm_fit(K, y, C=cfg.C)
    else:
        model = krr_fit(K, y, lambda0=lambda0)
    return w.mu, model


def _run_rotation(cfg: ExperimentConfig, sample: Sample, chunks, r: int) -> FoldResult:
    folds = len(chunks)
    test_idx = np.sort(chunks[r])
    val_idx = np.sort(chunks[(r + 1) % folds])
    train_idx = np.sort(
        np.concatenate([chunks[i] for i in range(folds) if i not in (r, (r + 1) % folds)])
    )
    if train_idx.size < 2:
        raise DataError("training split needs at least two points; use more folds")

    X_tr = sample.points[train_idx]
    y_raw = sample.labels[train_idx]
    offset = float(y_raw.mean()) if cfg.task == "regression" else 0.0
    y_tr = y_raw - offset
    bank = build_bank(Sample(X_tr, y_tr), cfg.bank)

    best = None
    for hyper in _hyper_grid(cfg):
        mu, model = _fit_candidate(cfg, bank, y_tr, hyper)
        val_err = _fold_error(
            cfg.task, model, mu, bank, sample.points[val_idx], sample.labels[val_idx], offset
        )
        if best is None or val_err < best[0]:
            best = (val_err, hyper, mu, model)
    val_err, hyper, mu, model = best

    test_err = _fold_error(
        cfg.task, model, mu, bank, sample.points[test_idx], sample.labels[test_idx], offset
    )
    target = label_kernel(y_tr)
    rho = centered_alignment(combine(bank, mu), target)

    rho_unif = None
    rho_alignf = None
    if cfg.method in ("align", "alignf"):
        rho_unif = centered_alignment(combine(bank, np.ones(bank.p)), target)
        if cfg.method == "alignf":
            rho_alignf = rho
        else:
            w_star = alignf_weights(bank, y_tr, radius=1.0, norm_kind="l1")
            rho_alignf = centered_alignment(combine(bank, w_star.mu), target)
        if rho_alignf < rho_unif - DOMINANCE_TOL:
            raise MklAlignError(
                f"fold {r}: alignment maximizer underperformed the uniform "
                f"combination ({rho_alignf!r} < {rho_unif!r})"
            )
    return FoldResult(
        fold=r,
        test_error=test_err,
        validation_error=val_err,
        train_alignment=rho,
        chosen=dict(hyper),
        unif_alignment=rho_unif,
        alignf_alignment=rho_alignf,
    )


def run_cv(cfg: ExperimentConfig) -> ExperimentRun:
    """Run the rotation protocol and aggregate per-fold errors and alignments.

    Fold membership is a seeded permutation, every rotation re-learns from
    scratch, and failures abort with the fold index attached. Identical
    configurations produce identical reports apart from wall_clock_s.
    """
    started = time.perf_counter()
    sample = load_dataset(cfg.dataset)
    folds = int(cfg.folds)
    if folds < 3:
        raise DataError("the rotation protocol needs at least 3 folds")
    if sample.m < folds:
        raise DataError(f"{sample.m} points cannot fill {folds} folds")
    perm = generator(cfg.seed).permutation(sample.m)
    chunks = np.array_split(perm, folds)

    def rotation(r):
        try:
            return _run_rotation(cfg, sample, chunks, r)
        except MklAlignError:
            raise
        except Exception as exc:  # surface the fold index on any failure
            raise type(exc)(f"fold {r}: {exc}") from exc

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(rotation, range(folds)))
    else:
        results = [rotation(r) for r in range(folds)]

    errors = np.array([f.test_error for f in results])
    rhos = np.array([f.train_alignment for f in results])
    ddof = 1 if folds > 1 else 0
    return ExperimentRun(
        spec_version=SPEC_VERSION,
        dataset_id=dataset_id(cfg.dataset),
        method=cfg.method,
        task=cfg.task,
        folds=folds,
        seed=int(cfg.seed),
        generator=GENERATOR_NAME,
        num_kernels=len(cfg.bank.family.specs(sample)),
        num_points=sample.m,
        fold_results=tuple(results),
        mean_test_error=float(errors.mean()),
        std_test_error=float(errors.std(ddof=ddof)),
        mean_train_alignment=float(rhos.mean()),
        std_train_alignment=float(rhos.std(ddof=ddof)),
        wall_clock_s=time.perf_counter() - started,
    )


@dataclass(frozen=True)
class KernelCorrelationRow:
    index: int
    kernel: str
    accuracy: float
    centered_alignment: float
    uncentered_alignment: float


@dataclass(frozen=True)
class CorrelationReport:
    spec_version: str
    dataset_id: str
    task: str
    folds: int
    seed: int
    rows: tuple
    pearson_centered: float | None
    pearson_uncentered: float | None

    def to_dict(self) -> dict:
        return jsonable(self)


def _pearson(x, y) -> float | None:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.std() == 0.0 or y.std() == 0.0:
        return None  # correlation undefined under zero variance
    return float(np.corrcoef(x, y)[0, 1])


def correlation_report(
    dataset: DatasetConfig,
    bank: BankConfig,
    folds: int = 5,
    seed: int = 0,
    lambda0: float = DEFAULT_LAMBDA0,
    C: float = DEFAULT_C,
) -> CorrelationReport:
    """Per-kernel single-kernel CV accuracy against both alignment measures.

    Alignments are computed on the full sample with the bank's scaling but
    without stored centering, so the centered and uncentered measures
    genuinely differ; accuracy is 1 - error (misclassification fraction or
    RMSE). Needs at least three kernels for a meaningful correlation.
    """
    sample = load_dataset(dataset)
    folds = int(folds)
    if folds < 2:
        raise DataError("correlation study needs at least 2 folds")
    raw_bank = build_bank(sample, replace(bank, center=False))
    specs = list(raw_bank.specs)
    if len(specs) < 3:
        raise DataError("correlation study needs at least 3 base kernels")

    y = sample.labels
    y_rho = y - y.mean() if dataset.task == "regression" else y
    target_c = label_kernel(y_rho)
    target_u = label_kernel(y)
    rhos = [centered_alignment(K, target_c) for K in raw_bank.matrices()]
    uncs = [uncentered_alignment(K, target_u) for K in raw_bank.matrices()]

    perm = generator(seed).permutation(sample.m)
    chunks = np.array_split(perm, folds)
    fold_bank_cfg = replace(bank, family=ExplicitFamily(tuple(specs)))

    errors = np.zeros(len(specs))
    for r in range(folds):
        test_idx = np.sort(chunks[r])
        train_idx = np.sort(np.concatenate([chunks[i] for i in range(folds) if i != r]))
        X_tr = sample.points[train_idx]
        y_raw = sample.labels[train_idx]
        offset = float(y_raw.mean()) if dataset.task == "regression" else 0.0
        y_tr = y_raw - offset
        fold_bank = build_bank(Sample(X_tr, y_tr), fold_bank_cfg)
        for k, K in enumerate(fold_bank.matrices()):
            if dataset.task == "classification":
                model = svm_fit(K, y_tr, C=C)
            else:
                model = krr_fit(K, y_tr, lambda0=lambda0)
            mu = np.zeros(len(specs))
            mu[k] = 1.0
            errors[k] += _fold_error(
                dataset.task,
                model,
                mu,
                fold_bank,
                sample.points[test_idx],
                sample.labels[test_idx],
                offset,
            )
    errors /= folds
    accuracy = 1.0 - errors

    rows = tuple(
        KernelCorrelationRow(
            index=k,
            kernel=specs[k].describe(),
            accuracy=float(accuracy[k]),
            centered_alignment=float(rhos[k]),
            uncentered_alignment=float(uncs[k]),
        )
        for k in range(len(specs))
    )
    return CorrelationReport(
        spec_version=SPEC_VERSION,
        dataset_id=dataset_id(dataset),
        task=dataset.task,
        folds=folds,
        seed=int(seed),
        rows=rows,
        pearson_centered=_pearson(accuracy, rhos),
        pearson_uncentered=_pearson(accuracy, uncs),
    )


@dataclass(frozen=True)
class TtestDecision:
    spec_version: str
    n: int
    mean_difference: float
    t_statistic: float
    p_value: float
    p_level: float
    significant: bool
    inconclusive: bool

    def to_dict(self) -> dict:
        return jsonable(self)


def paired_ttest(errors_a, errors_b, p_level: float = 0.05) -> TtestDecision:
    """One-sided paired t-test of mean(a) > mean(b).

    Zero-variance differences with zero mean are inconclusive rather than
    a division by zero; with nonzero mean the decision follows the sign.
    """
    a = np.asarray(errors_a, dtype=float).ravel()
    b = np.asarray(errors_b, dtype=float).ravel()
    if a.shape != b.shape:
        raise DataError("paired test needs arrays of equal length")
    n = a.shape[0]
    if n < 2:
        raise DataError("paired test needs at least two pairs")
    if not 0.0 < float(p_level) < 1.0:
        raise DataError("p_level must lie in (0, 1)")
    d = a - b
    mean_d = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        if mean_d == 0.0:
            return TtestDecision(
                spec_version=SPEC_VERSION,
                n=n,
                mean_difference=0.0,
                t_statistic=0.0,
                p_value=1.0,
                p_level=float(p_level),
                significant=False,
                inconclusive=True,
            )
        t_stat = float("inf") if mean_d > 0 else float("-inf")
        p_value = 0.0 if mean_d > 0 else 1.0
    else:
        t_stat = mean_d / (sd / np.sqrt(n))
        p_value = float(scipy.stats.t.sf(t_stat, df=n - 1))
    return TtestDecision(
        spec_version=SPEC_VERSION,
        n=n,
        mean_difference=mean_d,
        t_statistic=float(t_stat),
        p_value=p_value,
        p_level=float(p_level),
        significant=bool(p_value <= float(p_level)),
        inconclusive=False,
    )


@dataclass(frozen=True)
class CurvePoint:
    alpha: float
    centered: float
    uncentered: float


def alignment_curve(alphas) -> list:
    """Population alignment of k(x, z) = x . z + 1 against the labels on the
    two-point distribution, per class-balance alpha. Plot-ready."""
    points = []
    for alpha in alphas:
        pop = population_report(linear(1.0), FiniteDistribution.two_point(float(alpha)))
        points.append(
            CurvePoint(alpha=float(alpha), centered=pop.centered, uncentered=pop.uncentered)
        )
    return points
