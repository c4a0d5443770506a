"""Monte-Carlo bench for the alignment theory: concentration of the sample
alignment around its population value, single-point perturbation bounds,
existence of alignment-matching predictors, stability of the QP weights,
and the generalization-bound evaluator.

Population quantities come from exact enumeration over finite-support
distributions, so every check compares simulation against ground truth
rather than against another estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .alignment import (
    FiniteDistribution,
    alignment_system,
    population_report,
)
from .data import BankConfig, build_bank
from .errors import DataError, DegenerateKernelError, DimensionError, MklAlignError
from .kernels import KernelSpec, Sample, centered_entries, gram, label_kernel, matrix_of
from .reports import SPEC_VERSION
from .seeding import GENERATOR_NAME, derive_seed, generator
from .weights import NnqpProblem, nnqp_solve

MAX_REDRAWS = 1000


def concentration_bound(m: int, delta: float, beta: float) -> float:
    """Deviation bound for the centered sample alignment:
    18 beta (3/m + 8 sqrt(log(6/delta) / (2m)))."""
    m = int(m)
    if m < 1:
        raise DataError("m must be positive")
    if not 0.0 < delta < 1.0:
        raise DataError("delta must lie in (0, 1)")
    return 18.0 * beta * (3.0 / m + 8.0 * math.sqrt(math.log(6.0 / delta) / (2.0 * m)))


def perturbation_bound(m: int, R2: float, Rp2: float) -> float:
    """Single-point change bound for the unnormalized statistic: 24 R^2 R'^2 / m."""
    return 24.0 * R2 * Rp2 / int(m)


def bias_bound(m: int, R2: float, Rp2: float) -> float:
    """Expectation offset bound for the unnormalized statistic: 18 R^2 R'^2 / m."""
    return 18.0 * R2 * Rp2 / int(m)


@dataclass(frozen=True)
class ConcentrationConfig:
    """Monte-Carlo setup for sample-vs-population alignment deviations."""

    dist: FiniteDistribution
    kernel: KernelSpec
    R2: float
    Rp2: float
    delta: float = 0.05
    sample_sizes: tuple = (25, 100, 400)
    trials: int = 500
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < float(self.delta) < 1.0:
            raise DataError("delta must lie in (0, 1)")
        sizes = tuple(int(m) for m in self.sample_sizes)
        if not sizes or any(m < 2 for m in sizes):
            raise DataError("sample sizes must all be at least 2")
        object.__setattr__(self, "sample_sizes", sizes)
        if int(self.trials) < 100:
            raise DataError("need at least 100 trials per sample size")
        if float(self.R2) < self.dist.bound_kernel(self.kernel) - 1e-12:
            raise DataError("R2 must bound k(x, x) over the support")
        if float(self.Rp2) < self.dist.bound_target() - 1e-12:
            raise DataError("Rp2 must bound y^2 over the support")


@dataclass(frozen=True)
class ConcentrationRow:
    m: int
    bound: float
    coverage: float
    median_abs_error: float
    mean_abs_error: float
    max_abs_error: float
    bias_abs_error: float
    bias_bound: float
    redraws: int


@dataclass(frozen=True)
class ConcentrationReport:
    spec_version: str
    generator: str
    seed: int
    trials: int
    delta: float
    beta: float
    rho: float
    rows: tuple


def _sample_alignment_stats(spec, sample):
    """(rho_hat, unnormalized) for a sample against its label kernel,
    or None when the draw is degenerate."""
    K = gram(spec, sample).entries
    Kc = centered_entries(K)
    Tc = centered_entries(label_kernel(sample.labels))
    nk = float(np.linalg.norm(Kc))
    nt = float(np.linalg.norm(Tc))
    if nk == 0.0 or nt == 0.0:
        return None
    num = float(np.tensordot(Kc, Tc))
    m = sample.m
    return num / (nk * nt), num / (m * m)


def concentration_trial(cfg: ConcentrationConfig) -> ConcentrationReport:
    """Draw samples per size, measure |rho - rho_hat| against the deviation
    bound, and check the bias of the unnormalized statistic.

    beta is max(R^2 R'^2 / E[K_c^2], R^2 R'^2 / E[K'_c^2]) with exact
    population moments. Degenerate draws (no centered signal, e.g. all
    points identical) are redrawn and counted.
    """
    pop = population_report(cfg.kernel, cfg.dist)
    prod = float(cfg.R2) * float(cfg.Rp2)
    beta = max(prod / pop.kernel_second_moment, prod / pop.target_second_moment)

    rows = []
    counter = 0
    for m in cfg.sample_sizes:
        errors = np.empty(cfg.trials)
        u_values = np.empty(cfg.trials)
        redraws = 0
        for t in range(cfg.trials):
            for _ in range(MAX_REDRAWS):
                rng = generator(derive_seed(cfg.seed, counter))
                counter += 1
                stats = _sample_alignment_stats(cfg.kernel, cfg.dist.sample(m, rng))
                if stats is not None:
                    break
                redraws += 1
            else:
                raise DataError(
                    f"could not draw a non-degenerate sample of size {m}"
                )
            rho_hat, u_hat = stats
            errors[t] = abs(pop.centered - rho_hat)
            u_values[t] = u_hat
        bound = concentration_bound(m, cfg.delta, beta)
        rows.append(
            ConcentrationRow(
                m=m,
                bound=bound,
                coverage=float(np.mean(errors <= bound)),
                median_abs_error=float(np.median(errors)),
                mean_abs_error=float(np.mean(errors)),
                max_abs_error=float(np.max(errors)),
                bias_abs_error=abs(float(np.mean(u_values)) - pop.cross_moment),
                bias_bound=bias_bound(m, cfg.R2, cfg.Rp2),
                redraws=redraws,
            )
        )
    return ConcentrationReport(
        spec_version=SPEC_VERSION,
        generator=GENERATOR_NAME,
        seed=int(cfg.seed),
        trials=int(cfg.trials),
        delta=float(cfg.delta),
        beta=beta,
        rho=pop.centered,
        rows=tuple(rows),
    )


@dataclass(frozen=True)
class PerturbationReport:
    spec_version: str
    generator: str
    seed: int
    m: int
    trials: int
    bound: float
    max_abs_delta: float
    max_ratio: float
    violations: int


def perturbation_check(
    dist: FiniteDistribution,
    spec: KernelSpec,
    m: int = 50,
    trials: int = 200,
    seed: int = 0,
    R2: float | None = None,
    Rp2: float | None = None,
) -> PerturbationReport:
    """Replace one sample point with a fresh draw and verify the unnormalized
    statistic moves by at most 24 R^2 R'^2 / m."""
    m = int(m)
    if m < 2:
        raise DataError("need at least two points")
    if int(trials) < 1:
        raise DataError("need at least one trial")
    R2 = dist.bound_kernel(spec) if R2 is None else float(R2)
    Rp2 = dist.bound_target() if Rp2 is None else float(Rp2)
    bound = perturbation_bound(m, R2, Rp2)

    def unnormalized(sample):
        K = gram(spec, sample).entries
        Kc = centered_entries(K)
        Tc = centered_entries(label_kernel(sample.labels))
        return float(np.tensordot(Kc, Tc)) / (sample.m**2)

    max_delta = 0.0
    violations = 0
    for t in range(int(trials)):
        rng = generator(derive_seed(seed, t))
        sample = dist.sample(m, rng)
        replacement = rng.choice(dist.support_size, p=dist.masses)
        index = int(rng.integers(m))
        pts = np.array(sample.points)
        lab = np.array(sample.labels)
        pts[index] = dist.points[replacement]
        lab[index] = dist.labels[replacement]
        delta = abs(unnormalized(Sample(pts, lab)) - unnormalized(sample))
        max_delta = max(max_delta, delta)
        if delta > bound * (1.0 + 1e-12):
            violations += 1
    return PerturbationReport(
        spec_version=SPEC_VERSION,
        generator=GENERATOR_NAME,
        seed=int(seed),
        m=m,
        trials=int(trials),
        bound=bound,
        max_abs_delta=max_delta,
        max_ratio=max_delta / bound if bound > 0.0 else float("inf"),
        violations=violations,
    )


@dataclass(frozen=True)
class PredictorDiagnostics:
    """The normalized alignment-matching predictor h_S evaluated in-sample."""

    spec_version: str
    task: str
    rho_hat: float
    gamma_hat: float
    empirical_error: float
    bound_value: float
    bound_satisfied: bool
    identity_residual: float


def predictor_diagnostics(K, y, task: str = "classification") -> PredictorDiagnostics:
    """Build h_S(x) = (1/m) sum_i y_i K_c(x, x_i) / (sqrt(E_hat[K_c^2])
    sqrt(E_hat[(yy')^2])) on the sample and certify its guarantees.

    The alignment it realizes, E_hat[y h_S] = <K_c, yy^T> / (||K_c|| ||yy^T||),
    matches the centered alignment whenever the labels are centered
    (regression convention) or balanced; the identity itself is checked
    unconditionally. Classification error is bounded by 1 - rho_hat/Gamma_hat;
    regression (with labels scaled to unit second moment) by 2 (1 - rho_hat).
    """
    A = matrix_of(K)
    y = np.asarray(y, dtype=float).ravel()
    m = A.shape[0]
    if y.shape[0] != m:
        raise DimensionError(f"kernel is {m}x{m} but y has length {y.shape[0]}")
    if task not in ("classification", "regression"):
        raise DataError(f"unknown task {task!r}")
    if task == "classification":
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise DataError("classification labels must be -1 or +1")
    else:
        power = float(np.mean(y**2))
        if abs(power - 1.0) > 1e-6:
            raise DataError(
                f"regression labels must have unit second moment, got {power!r}"
            )

    Kc = centered_entries(A)
    norm_k = float(np.linalg.norm(Kc))
    if norm_k == 0.0:
        raise DegenerateKernelError("centered kernel is zero; no predictor exists")
    norm_y = float(y @ y)  # ||yy^T||_F

    h = (Kc @ y / m) / ((norm_k / m) * (norm_y / m))
    realized = float(np.mean(y * h))
    rho_hat = float(y @ Kc @ y) / (norm_k * norm_y)
    identity_residual = abs(realized - rho_hat)
    if identity_residual > 1e-9:
        raise MklAlignError(
            f"realized alignment identity failed: residual {identity_residual:.3e}"
        )

    sq = Kc**2
    gamma_hat = float(np.sqrt(np.max(sq.mean(axis=1)) / sq.mean()))
    if task == "classification":
        empirical_error = float(np.mean(y * h < 0.0))
        bound_value = 1.0 - rho_hat / gamma_hat
    else:
        empirical_error = float(np.mean((y - h) ** 2))
        bound_value = 2.0 * (1.0 - rho_hat)
    return PredictorDiagnostics(
        spec_version=SPEC_VERSION,
        task=task,
        rho_hat=rho_hat,
        gamma_hat=gamma_hat,
        empirical_error=empirical_error,
        bound_value=bound_value,
        bound_satisfied=bool(empirical_error <= bound_value + 1e-8),
        identity_residual=identity_residual,
    )


@dataclass(frozen=True)
class GStarReport:
    """The unnormalized predictor g_S(x) = E_hat[y' K_c(x, x')] in-sample."""

    spec_version: str
    rho_u: float
    r2_hat: float
    empirical_error: float
    bound_value: float
    bound_satisfied: bool


def g_star_diagnostics(K, y) -> GStarReport:
    """Classification error of g_S is bounded by 1 - rho_u / R^2 with
    R^2 = max_i K_c(x_i, x_i)."""
    A = matrix_of(K)
    y = np.asarray(y, dtype=float).ravel()
    m = A.shape[0]
    if y.shape[0] != m:
        raise DimensionError(f"kernel is {m}x{m} but y has length {y.shape[0]}")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise DataError("classification labels must be -1 or +1")
    Kc = centered_entries(A)
    g = Kc @ y / m
    rho_u = float(y @ Kc @ y) / (m * m)
    r2_hat = float(np.max(np.diag(Kc)))
    empirical_error = float(np.mean(y * g < 0.0))
    bound_value = 1.0 - rho_u / r2_hat if r2_hat > 0.0 else 1.0
    return GStarReport(
        spec_version=SPEC_VERSION,
        rho_u=rho_u,
        r2_hat=r2_hat,
        empirical_error=empirical_error,
        bound_value=bound_value,
        bound_satisfied=bool(empirical_error <= bound_value + 1e-8),
    )


def delta_mu_identity(v, v_prime) -> float:
    """Residual of the normalized-difference identity
    v'/||v'|| - v/||v|| = dv/||v'|| - (dv . (v + v')) v / (||v|| ||v'|| (||v|| + ||v'||)).

    Exact in real arithmetic for any nonzero v, v'; the return value is the
    floating-point residual norm.
    """
    v = np.asarray(v, dtype=float).ravel()
    vp = np.asarray(v_prime, dtype=float).ravel()
    if v.shape != vp.shape:
        raise DimensionError("vectors must have equal length")
    nv = float(np.linalg.norm(v))
    nvp = float(np.linalg.norm(vp))
    if nv == 0.0 or nvp == 0.0:
        raise DataError("identity needs nonzero vectors")
    dv = vp - v
    lhs = vp / nvp - v / nv
    rhs = dv / nvp - (float(dv @ (v + vp)) / (nv * nvp * (nv + nvp))) * v
    return float(np.linalg.norm(lhs - rhs))


@dataclass(frozen=True)
class StabilityCheck:
    lhs: float    # ||dv||_M^2
    rhs: float    # (da - dM v')^T dv
    slack: float  # rhs - lhs, should be >= -10 tol
    mu_shift: float


def qp_stability_check(
    sample: Sample,
    bank_cfg: BankConfig,
    perturb_index: int,
    replacement_point,
    replacement_label: float,
    tol: float = 1e-10,
) -> StabilityCheck:
    """Solve the alignment QP on a sample and on the sample with one point
    replaced, then verify ||dv||_M^2 <= (da - dM v')^T dv."""
    idx = int(perturb_index)
    if not 0 <= idx < sample.m:
        raise DataError(f"perturb index {idx} out of range for m = {sample.m}")
    pts = np.array(sample.points)
    lab = np.array(sample.labels)
    pts[idx] = np.asarray(replacement_point, dtype=float)
    lab[idx] = float(replacement_label)
    perturbed = Sample(pts, lab)

    bank = build_bank(sample, bank_cfg)
    bank_p = build_bank(perturbed, bank_cfg)
    system = alignment_system(bank, sample.labels)
    system_p = alignment_system(bank_p, perturbed.labels)
    v = nnqp_solve(NnqpProblem(system.M, system.a), tol=tol)
    v_p = nnqp_solve(NnqpProblem(system_p.M, system_p.a), tol=tol)

    dv = v_p - v
    dM = system_p.M - system.M
    da = system_p.a - system.a
    lhs = float(dv @ system.M @ dv)
    rhs = float((da - dM @ v_p) @ dv)
    nv = float(np.linalg.norm(v))
    nvp = float(np.linalg.norm(v_p))
    mu_shift = (
        float(np.linalg.norm(v_p / nvp - v / nv)) if nv > 0.0 and nvp > 0.0 else float("nan")
    )
    return StabilityCheck(lhs=lhs, rhs=rhs, slack=rhs - lhs, mu_shift=mu_shift)


@dataclass(frozen=True)
class StabilityReport:
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


def qp_stability_trials(
    dist: FiniteDistribution,
    bank_cfg: BankConfig,
    m: int = 30,
    trials: int = 100,
    seed: int = 0,
    tol: float = 1e-10,
) -> StabilityReport:
    """Monte-Carlo wrapper: draw samples, replace one random point with a
    fresh draw, and track the worst slack of the stability inequality."""
    m = int(m)
    if m < 2:
        raise DataError("need at least two points")
    min_slack = float("inf")
    max_shift = 0.0
    violations = 0
    redraws = 0
    counter = 0
    for _ in range(int(trials)):
        for _ in range(MAX_REDRAWS):
            rng = generator(derive_seed(seed, counter))
            counter += 1
            sample = dist.sample(m, rng)
            replacement = rng.choice(dist.support_size, p=dist.masses)
            index = int(rng.integers(m))
            try:
                check = qp_stability_check(
                    sample,
                    bank_cfg,
                    index,
                    dist.points[replacement],
                    dist.labels[replacement],
                    tol=tol,
                )
            except DegenerateKernelError:
                redraws += 1
                continue
            break
        else:
            raise DataError("could not draw a non-degenerate stability instance")
        min_slack = min(min_slack, check.slack)
        if not np.isnan(check.mu_shift):
            max_shift = max(max_shift, check.mu_shift)
        if check.slack < -10.0 * tol:
            violations += 1
    return StabilityReport(
        spec_version=SPEC_VERSION,
        generator=GENERATOR_NAME,
        seed=int(seed),
        m=m,
        trials=int(trials),
        tol=float(tol),
        min_slack=min_slack,
        violations=violations,
        max_mu_shift=max_shift,
        redraws=redraws,
    )


@dataclass(frozen=True)
class GenBoundInputs:
    """Constants entering the stability-based generalization bound."""

    Lambda1: float       # L1 radius of the weight vector
    lambda0: float       # ridge parameter
    R2: float            # bound on k(x, x)
    M_label: float       # bound on |y|
    delta_mu_norm: float  # ||mu - mu'|| across one-point changes
    K_group_norm: float   # matching group norm of the centered kernel column stack

    def __post_init__(self):
        for name in ("Lambda1", "lambda0", "R2", "M_label"):
            if not float(getattr(self, name)) > 0.0:
                raise DataError(f"{name} must be positive")
        for name in ("delta_mu_norm", "K_group_norm"):
            if float(getattr(self, name)) < 0.0:
                raise DataError(f"{name} must be nonnegative")


@dataclass(frozen=True)
class GenBoundReport:
    spec_version: str
    m: int
    delta: float
    M1: float
    M2: float
    M2_trace_one: float
    empirical_error: float
    bound: float
    bound_trace_one: float


def generalization_bound_value(
    inputs: GenBoundInputs, m: int, delta: float, empirical_error: float = 0.0
) -> GenBoundReport:
    """Evaluate R_hat + 2 M1 M2 / m + (1 + 16 M2 / M1)(M1 M2 / 4)
    sqrt(log(1/delta) / (2m)).

    M1 = 2 [1 + sqrt(Lambda1 R^2 / lambda0)] M and
    M2 = (2 Lambda1 R^2 / lambda0) [1 + ||dmu|| ||K_c|| / (2 lambda0)] M.
    The trace-one variant replaces ||dmu|| ||K_c|| by its worst case 2 Lambda1.
    """
    m = int(m)
    if m < 1:
        raise DataError("m must be positive")
    if not 0.0 < float(delta) <= 1.0:
        raise DataError("delta must lie in (0, 1]")
    c = inputs
    M1 = 2.0 * (1.0 + math.sqrt(c.Lambda1 * c.R2 / c.lambda0)) * c.M_label
    base = 2.0 * c.Lambda1 * c.R2 / c.lambda0
    M2 = base * (1.0 + c.delta_mu_norm * c.K_group_norm / (2.0 * c.lambda0)) * c.M_label
    M2_trace = base * (1.0 + c.Lambda1 / c.lambda0) * c.M_label
    sqrt_term = math.sqrt(math.log(1.0 / float(delta)) / (2.0 * m))

    def excess(m2: float) -> float:
        return 2.0 * M1 * m2 / m + (1.0 + 16.0 * m2 / M1) * (M1 * m2 / 4.0) * sqrt_term

    return GenBoundReport(
        spec_version=SPEC_VERSION,
        m=m,
        delta=float(delta),
        M1=M1,
        M2=M2,
        M2_trace_one=M2_trace,
        empirical_error=float(empirical_error),
        bound=float(empirical_error) + excess(M2),
        bound_trace_one=float(empirical_error) + excess(M2_trace),
    )
