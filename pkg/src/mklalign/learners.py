"""Prediction models over combined kernels and the interleaved kernel learners.

Second stage: kernel ridge regression solved by Cholesky, and an SVM trained
by coordinate descent on the box-constrained dual (no bias term; callers who
want one add a constant-offset kernel). The interleaved learners wrap those
inner solvers in projected gradient descent over the mixture weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .alignment import alignment_system
from .errors import DataError, DimensionError, NonConvergedError
from .kernels import combine, matrix_of
from .weights import MixtureWeights

ARMIJO_C = 1e-4
ARMIJO_START_STEP = 1.0
MAX_BACKTRACKS = 50


def _solve_spd(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cholesky solve with a one-shot jitter fallback of 1e-12 * tr(A)/m."""
    try:
        c, low = scipy.linalg.cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        jitter = 1e-12 * float(np.trace(A)) / A.shape[0]
        try:
            c, low = scipy.linalg.cho_factor(
                A + jitter * np.eye(A.shape[0]), lower=True, check_finite=False
            )
        except np.linalg.LinAlgError as exc:
            raise DataError("regularized kernel system is not positive definite") from exc
    x = scipy.linalg.cho_solve((c, low), b, check_finite=False)
    if not np.all(np.isfinite(x)):
        raise DataError("linear solve produced non-finite values")
    return x


@dataclass(frozen=True)
class KrrModel:
    """Kernel ridge regression: alpha = (K + m lambda0 I)^{-1} y."""

    alpha: np.ndarray
    effective_lambda: float
    gram: np.ndarray

    @property
    def m(self) -> int:
        return self.alpha.shape[0]

    def fitted(self) -> np.ndarray:
        return self.gram @ self.alpha


def krr_fit(K, y, lambda0: float = 1.0) -> KrrModel:
    A = matrix_of(K)
    y = np.asarray(y, dtype=float).ravel()
    m = A.shape[0]
    if y.shape[0] != m:
        raise DimensionError(f"kernel is {m}x{m} but y has length {y.shape[0]}")
    lambda0 = float(lambda0)
    if lambda0 <= 0.0:
        raise DataError("lambda0 must be positive")
    lam = lambda0 * m
    alpha = _solve_spd(A + lam * np.eye(m), y)
    return KrrModel(alpha=alpha, effective_lambda=lam, gram=A)


@dataclass(frozen=True)
class SvmModel:
    """Dual SVM state: box-constrained alpha, its labels and training kernel."""

    alpha: np.ndarray
    labels: np.ndarray
    C: float
    gram: np.ndarray
    objective: float
    residual: float

    @property
    def m(self) -> int:
        return self.alpha.shape[0]

    def support(self, threshold: float = 1e-10) -> np.ndarray:
        return np.flatnonzero(self.alpha > threshold)

    def decision_values(self) -> np.ndarray:
        return self.gram @ (self.alpha * self.labels)


def svm_fit(K, y, C: float = 1.0, tol: float = 1e-8, max_sweeps: int = 4000) -> SvmModel:
    """Maximize the bias-free dual 2 alpha^T 1 - alpha^T Y K Y alpha over
    0 <= alpha <= C by exact coordinate updates.

    Convergence is measured by the projected-gradient residual
    ||alpha - clip(alpha - grad, 0, C)||_inf <= tol * max(1, C).
    """
    A = matrix_of(K)
    y = np.asarray(y, dtype=float).ravel()
    m = A.shape[0]
    if y.shape[0] != m:
        raise DimensionError(f"kernel is {m}x{m} but y has length {y.shape[0]}")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise DataError("SVM labels must be -1 or +1")
    C = float(C)
    if C < 0.0:
        raise DataError("C must be nonnegative")

    Q = (y[:, None] * y[None, :]) * A
    diag = np.diag(Q).copy()
    alpha = np.zeros(m)
    if C == 0.0:
        return SvmModel(alpha=alpha, labels=y, C=C, gram=A, objective=0.0, residual=0.0)

    w = np.zeros(m)  # running Q @ alpha
    effective_tol = tol * max(1.0, C)
    residual = np.inf
    for _ in range(max_sweeps):
        for i in range(m):
            if diag[i] > 0.0:
                new = min(max(alpha[i] + (1.0 - w[i]) / diag[i], 0.0), C)
            else:
                # Zero diagonal on a PSD matrix means a zero row: the dual is
                # linear and increasing in this coordinate.
                new = C
            delta = new - alpha[i]
            if delta != 0.0:
                w += delta * Q[:, i]
                alpha[i] = new
        w = Q @ alpha
        grad = 2.0 * (w - 1.0)
        residual = float(np.max(np.abs(alpha - np.clip(alpha - grad, 0.0, C))))
        if residual <= effective_tol:
            break
    else:
        raise NonConvergedError(
            f"SVM dual did not reach tolerance {effective_tol:g} in "
            f"{max_sweeps} sweeps (residual {residual:g})",
            best=alpha,
            residual=residual,
        )
    objective = float(2.0 * alpha.sum() - alpha @ w)
    return SvmModel(alpha=alpha, labels=y, C=C, gram=A, objective=objective, residual=residual)


def predict(model, K_cross) -> np.ndarray:
    """Decision values on new points given their kernel rows against training."""
    Kx = np.asarray(K_cross, dtype=float)
    if Kx.ndim == 1:
        Kx = Kx[None, :]
    if Kx.shape[1] != model.m:
        raise DimensionError(
            f"cross-kernel has {Kx.shape[1]} columns but the model trained on {model.m} points"
        )
    if isinstance(model, SvmModel):
        return Kx @ (model.alpha * model.labels)
    return Kx @ model.alpha


def classify(model, K_cross) -> np.ndarray:
    """Hard labels from decision values; zero maps to +1."""
    vals = predict(model, K_cross)
    return np.where(vals < 0.0, -1.0, 1.0)


@dataclass(frozen=True)
class LearnedKernelFit:
    """Result of an interleaved weight/predictor learner."""

    weights: MixtureWeights
    model: object
    objectives: tuple

    @property
    def mu(self) -> np.ndarray:
        return self.weights.mu


def _armijo_step(value, mu, grad, project, evaluate, step):
    """One projected-gradient step with backtracking halving.

    Accepts the first candidate satisfying the sufficient-decrease rule
    f(cand) <= f(mu) + c * grad . (cand - mu); returns None when no step
    down to the floor improves (numerical stationarity).
    """
    t = step
    for _ in range(MAX_BACKTRACKS):
        cand = project(mu - t * grad)
        d = cand - mu
        if not np.any(d):
            return None
        cand_value, payload = evaluate(cand)
        if cand_value <= value + ARMIJO_C * float(grad @ d):
            return cand, cand_value, payload, t
        t *= 0.5
    return None


def _quadratic_forms(mats, vec) -> np.ndarray:
    return np.array([float(vec @ K @ vec) for K in mats])


def _project_l1_cap(x: np.ndarray, radius: float) -> np.ndarray:
    """Exact Euclidean projection onto {v >= 0, sum(v) <= radius}.

    Clamping then rescaling is not a projection here (it cancels any step
    whose gradient points outward across the sum constraint, stalling the
    descent), so use the sort-based simplex projection when the clamped
    point overshoots the cap.
    """
    w = np.maximum(x, 0.0)
    if float(w.sum()) <= radius:
        return w
    u = np.sort(x)[::-1]
    excess = np.cumsum(u) - radius
    counts = np.arange(1, x.shape[0] + 1)
    support = u - excess / counts > 0.0
    k = int(counts[support][-1])
    tau = excess[k - 1] / k
    return np.maximum(x - tau, 0.0)


@dataclass(frozen=True)
class OneStageConfig:
    """Hyperparameters for the one-stage alignment-regularized objective.

    gamma weighs the alignment reward, gamma_prime the L2 penalty, and
    gamma_dprime the M-quadratic penalty; the ridge parameter is absorbed
    into those, so the kernel system is K_mu + I.
    """

    gamma: float = 1.0
    gamma_prime: float = 1.0
    gamma_dprime: float = 0.0
    tol: float = 1e-8
    max_outer_iter: int = 500

    def __post_init__(self):
        for name in ("gamma", "gamma_prime", "gamma_dprime"):
            val = float(getattr(self, name))
            if val < 0.0:
                raise DataError(f"{name} must be nonnegative")
            object.__setattr__(self, name, val)
        if self.gamma_prime == 0.0 and self.gamma_dprime == 0.0:
            raise DataError("at least one of gamma_prime, gamma_dprime must be positive")
        if not float(self.tol) > 0.0:
            raise DataError("tol must be positive")
        if int(self.max_outer_iter) < 1:
            raise DataError("max_outer_iter must be at least 1")


def onestage_learn(bank, y, cfg: OneStageConfig) -> LearnedKernelFit:
    """Minimize y^T (K_mu + I)^{-1} y - gamma mu^T a
    + mu^T (gamma'' M + gamma' I) mu over mu >= 0 by projected gradient.

    The first term's gradient is -alpha^T K_k alpha with
    alpha = (K_mu + I)^{-1} y, so each iteration is one ridge solve. Stops
    when the projected-gradient norm drops below cfg.tol.
    """
    if isinstance(bank, (list, tuple)):
        mats = [matrix_of(K) for K in bank]
    else:
        mats = bank.matrices()
    y = np.asarray(y, dtype=float).ravel()
    m = mats[0].shape[0]
    if y.shape[0] != m:
        raise DimensionError(f"kernels are {m}x{m} but y has length {y.shape[0]}")
    p = len(mats)
    system = alignment_system(bank, y)
    Q = cfg.gamma_dprime * system.M + cfg.gamma_prime * np.eye(p)
    eye = np.eye(m)

    def evaluate(mu):
        K = combine(mats, mu)
        alpha = _solve_spd(K + eye, y)
        value = float(y @ alpha) - cfg.gamma * float(mu @ system.a) + float(mu @ Q @ mu)
        return value, alpha

    def project(x):
        return np.maximum(x, 0.0)

    mu = np.zeros(p)
    value, alpha = evaluate(mu)
    objectives = [value]
    step = ARMIJO_START_STEP
    for _ in range(cfg.max_outer_iter):
        grad = -_quadratic_forms(mats, alpha) - cfg.gamma * system.a + 2.0 * (Q @ mu)
        pg = mu - project(mu - grad)
        if float(np.linalg.norm(pg)) <= cfg.tol:
            break
        moved = _armijo_step(value, mu, grad, project, evaluate, step)
        if moved is None:
            if float(np.linalg.norm(pg)) <= 1e3 * cfg.tol:
                break
            raise NonConvergedError(
                "one-stage descent stalled above tolerance",
                best=mu,
                residual=float(np.linalg.norm(pg)),
            )
        mu, value, alpha, used = moved
        objectives.append(value)
        step = 2.0 * used  # grow on success; backtracking reins it back in
    else:
        grad = -_quadratic_forms(mats, alpha) - cfg.gamma * system.a + 2.0 * (Q @ mu)
        pg = float(np.linalg.norm(mu - project(mu - grad)))
        if pg > cfg.tol:
            raise NonConvergedError(
                f"one-stage descent did not converge in {cfg.max_outer_iter} iterations",
                best=mu,
                residual=pg,
            )
    weights = MixtureWeights(mu, norm_kind="l1", radius=float(np.abs(mu).sum()))
    model = KrrModel(alpha=alpha, effective_lambda=1.0, gram=combine(mats, mu))
    return LearnedKernelFit(weights=weights, model=model, objectives=tuple(objectives))


def l2krr_learn(
    bank,
    y,
    lambda0: float = 1.0,
    radius: float = 1.0,
    mu0=None,
    tol: float = 1e-8,
    max_outer_iter: int = 500,
) -> LearnedKernelFit:
    """Interleaved ridge solution and projected gradient over
    {mu >= 0, ||mu - mu0||_2 <= radius}, minimizing y^T (K_mu + m lambda0 I)^{-1} y.

    The gradient at the inner optimum is -alpha^T K_k alpha. Projection is
    clamp-then-rescale, which is the exact Euclidean projection when mu0 = 0.
    """
    if isinstance(bank, (list, tuple)):
        mats = [matrix_of(K) for K in bank]
    else:
        mats = bank.matrices()
    y = np.asarray(y, dtype=float).ravel()
    m = mats[0].shape[0]
    p = len(mats)
    lambda0 = float(lambda0)
    if lambda0 <= 0.0:
        raise DataError("lambda0 must be positive")
    radius = float(radius)
    if radius <= 0.0:
        raise DataError("radius must be positive")
    center = np.zeros(p) if mu0 is None else np.asarray(mu0, dtype=float).ravel()
    if center.shape[0] != p:
        raise DimensionError("mu0 must have one entry per kernel")
    if np.any(center < 0.0):
        raise DataError("mu0 must be nonnegative")
    lam = lambda0 * m
    eye = np.eye(m)

    def evaluate(mu):
        K = combine(mats, mu)
        alpha = _solve_spd(K + lam * eye, y)
        return float(y @ alpha), alpha

    def project(x):
        w = np.maximum(x, 0.0)
        d = w - center
        n = float(np.linalg.norm(d))
        if n > radius:
            return center + d * (radius / n)
        return w

    mu = project(center)
    value, alpha = evaluate(mu)
    objectives = [value]
    step = ARMIJO_START_STEP
    for _ in range(max_outer_iter):
        grad = -_quadratic_forms(mats, alpha)
        residual = float(np.linalg.norm(mu - project(mu - grad)))
        if residual <= tol:
            break
        moved = _armijo_step(value, mu, grad, project, evaluate, step)
        if moved is None:
            break  # no improving projected step left: numerically stationary
        mu, value, alpha, used = moved
        objectives.append(value)
        step = 2.0 * used  # grow on success; backtracking reins it back in
    else:
        grad = -_quadratic_forms(mats, alpha)
        residual = float(np.linalg.norm(mu - project(mu - grad)))
        if residual > tol:
            raise NonConvergedError(
                f"l2krr did not converge in {max_outer_iter} outer iterations",
                best=mu,
                residual=residual,
            )
    weights = MixtureWeights(mu, norm_kind="l2", radius=float(np.linalg.norm(mu)))
    model = KrrModel(alpha=alpha, effective_lambda=lam, gram=combine(mats, mu))
    return LearnedKernelFit(weights=weights, model=model, objectives=tuple(objectives))


def l1svm_learn(
    bank,
    y,
    C: float = 1.0,
    radius: float = 1.0,
    tol: float = 1e-6,
    max_outer_iter: int = 200,
    svm_tol: float = 1e-10,
) -> LearnedKernelFit:
    """Trace-constrained SVM kernel learning: minimize over
    {mu >= 0, sum_k mu_k <= radius} the optimal dual value
    max_alpha 2 alpha^T 1 - alpha^T Y K_mu Y alpha.

    Expects base kernels with trace at most one, so sum mu_k <= radius caps
    the combined trace. Trace-one normalization satisfies this, and so does
    the centered version of a trace-one kernel (centering cannot raise the
    trace of a PSD matrix). The outer gradient at the inner optimum is
    -(alpha y)^T K_k (alpha y).
    """
    if isinstance(bank, (list, tuple)):
        mats = [matrix_of(K) for K in bank]
    else:
        mats = bank.matrices()
    y = np.asarray(y, dtype=float).ravel()
    p = len(mats)
    radius = float(radius)
    if radius <= 0.0:
        raise DataError("radius must be positive")
    traces = [float(np.trace(K)) for K in mats]
    if any(tr > 1.0 + 1e-6 for tr in traces):
        raise DataError(
            "l1svm expects kernels with trace at most one; enable trace_one "
            "normalization on the bank"
        )

    def evaluate(mu):
        model = svm_fit(combine(mats, mu), y, C=C, tol=svm_tol)
        return model.objective, model

    def project(x):
        return _project_l1_cap(x, radius)

    mu = np.full(p, radius / p)
    value, model = evaluate(mu)
    objectives = [value]
    step = ARMIJO_START_STEP
    for _ in range(max_outer_iter):
        ay = model.alpha * y
        grad = -_quadratic_forms(mats, ay)
        residual = float(np.linalg.norm(mu - project(mu - grad)))
        if residual <= tol:
            break
        moved = _armijo_step(value, mu, grad, project, evaluate, step)
        if moved is None:
            break  # inner-solve noise dominates: treat as stationary
        mu, value, model, used = moved
        objectives.append(value)
        step = 2.0 * used  # grow on success; backtracking reins it back in
    else:
        ay = model.alpha * y
        grad = -_quadratic_forms(mats, ay)
        residual = float(np.linalg.norm(mu - project(mu - grad)))
        if residual > tol:
            raise NonConvergedError(
                f"l1svm did not converge in {max_outer_iter} outer iterations",
                best=mu,
                residual=residual,
            )
    weights = MixtureWeights(mu, norm_kind="l1", radius=float(np.abs(mu).sum()))
    return LearnedKernelFit(weights=weights, model=model, objectives=tuple(objectives))
