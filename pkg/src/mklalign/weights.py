"""First-stage mixture-weight learners and the shared nonnegative QP solver.

Every learner produces a direction over the base kernels and scales it to a
requested norm and radius; the direction is what distinguishes the methods.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alignment import AlignmentSystem, alignment_system
from .errors import (
    DataError,
    DegenerateKernelError,
    DimensionError,
    NonConvergedError,
    NoSignalError,
    SingularSystemError,
)
from .kernels import KernelBank, centered_entries, matrix_of

NORM_KINDS = ("l1", "l2")


def _norm(mu: np.ndarray, norm_kind: str) -> float:
    if norm_kind == "l1":
        return float(np.abs(mu).sum())
    if norm_kind == "l2":
        return float(np.linalg.norm(mu))
    raise DataError(f"unknown norm kind {norm_kind!r}; expected one of {NORM_KINDS}")


@dataclass(frozen=True)
class MixtureWeights:
    """Nonnegative kernel-combination weights with their scaling contract:
    ||mu||_{norm_kind} equals radius (radius 0 only for an all-zero vector)."""

    mu: np.ndarray
    norm_kind: str = "l1"
    radius: float = 1.0

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).ravel()
        if mu.shape[0] == 0:
            raise DataError("weights must be non-empty")
        if np.any(mu < -1e-12):
            raise DataError("mixture weights must be nonnegative")
        mu = np.maximum(mu, 0.0)
        if self.norm_kind not in NORM_KINDS:
            raise DataError(f"unknown norm kind {self.norm_kind!r}")
        radius = float(self.radius)
        if radius < 0.0:
            raise DataError("radius must be nonnegative")
        got = _norm(mu, self.norm_kind)
        if abs(got - radius) > 1e-8 * max(radius, 1.0):
            raise DataError(
                f"||mu||_{self.norm_kind} = {got!r} does not match radius {radius!r}"
            )
        mu = mu.copy()
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "radius", radius)

    @property
    def p(self) -> int:
        return self.mu.shape[0]

    def scaled(self, norm_kind: str, radius: float) -> "MixtureWeights":
        return scale_weights(self.mu, norm_kind=norm_kind, radius=radius)


def scale_weights(direction, norm_kind: str = "l1", radius: float = 1.0) -> MixtureWeights:
    """Scale a nonnegative direction so its chosen norm equals radius."""
    d = np.asarray(direction, dtype=float).ravel()
    if np.any(d < -1e-12):
        raise DataError("weight directions must be nonnegative")
    d = np.maximum(d, 0.0)
    if float(radius) <= 0.0:
        raise DataError("radius must be positive")
    n = _norm(d, norm_kind)
    if n == 0.0:
        raise NoSignalError("all weights are zero; nothing to scale")
    return MixtureWeights(d * (float(radius) / n), norm_kind=norm_kind, radius=float(radius))


def unif_weights(p: int, radius: float = 1.0, norm_kind: str = "l1") -> MixtureWeights:
    """The uniform combination: every kernel gets the same weight."""
    if int(p) < 1:
        raise DataError("need at least one kernel")
    return scale_weights(np.ones(int(p)), norm_kind=norm_kind, radius=radius)


def _centered_bank(bank):
    if isinstance(bank, KernelBank):
        return bank.centered_matrices()
    return [centered_entries(matrix_of(K)) for K in bank]


def _target_scores(bank, y):
    """(<K_kc, yy^T>_F)_k plus the centered norms ||K_kc||_F."""
    centered = _centered_bank(bank)
    y = np.asarray(y, dtype=float).ravel()
    m = centered[0].shape[0]
    if y.shape[0] != m:
        raise DimensionError(f"kernels are {m}x{m} but y has length {y.shape[0]}")
    scores = np.array([float(y @ Kc @ y) for Kc in centered])
    norms = np.array([float(np.linalg.norm(Kc)) for Kc in centered])
    return scores, norms


def align_weights(bank, y, radius: float = 1.0, norm_kind: str = "l1") -> MixtureWeights:
    """Independent per-kernel alignments: mu_k proportional to
    <K_kc, yy^T>_F / ||K_kc||_F."""
    scores, norms = _target_scores(bank, y)
    bad = [i for i, n in enumerate(norms) if n == 0.0]
    if bad:
        raise DegenerateKernelError(f"degenerate centered base kernels at indices {bad}")
    direction = np.maximum(scores, 0.0) / norms
    if not np.any(direction > 0.0):
        raise NoSignalError("every base kernel has zero alignment with the target")
    return scale_weights(direction, norm_kind=norm_kind, radius=radius)


def lq_weights(bank, y, q: float, radius: float = 1.0, norm_kind: str = "l1") -> MixtureWeights:
    """Power family: mu_k proportional to <K_kc, yy^T>_F^(1/(q-1)) for q > 1.

    Stated for banks whose centered kernels have unit Frobenius norm, where
    q = 2 reproduces align_weights exactly. The q -> 1 limit concentrates all
    weight on the best kernel; use argmax_weights for that mode.
    """
    q = float(q)
    if q <= 1.0:
        raise DataError("lq_weights needs q > 1; use argmax_weights for the q = 1 limit")
    scores, _ = _target_scores(bank, y)
    scores = np.maximum(scores, 0.0)
    if not np.any(scores > 0.0):
        raise NoSignalError("every base kernel has zero alignment with the target")
    direction = scores ** (1.0 / (q - 1.0))
    return scale_weights(direction, norm_kind=norm_kind, radius=radius)


def argmax_weights(bank, y, radius: float = 1.0, norm_kind: str = "l1") -> MixtureWeights:
    """One-hot weights on the kernel with the largest target product
    (ties break to the lowest index)."""
    scores, _ = _target_scores(bank, y)
    if not np.any(scores > 0.0):
        raise NoSignalError("every base kernel has zero alignment with the target")
    direction = np.zeros_like(scores)
    direction[int(np.argmax(scores))] = 1.0
    return scale_weights(direction, norm_kind=norm_kind, radius=radius)


@dataclass(frozen=True)
class NnqpProblem:
    """min_{v >= 0} v^T M v - 2 v^T a with M symmetric PSD."""

    M: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.M, dtype=float)
        a = np.asarray(self.a, dtype=float).ravel()
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionError("M must be square")
        if M.shape[0] != a.shape[0]:
            raise DimensionError("M and a sizes differ")
        scale = float(np.abs(M).max()) if M.size else 0.0
        if not np.allclose(M, M.T, rtol=0.0, atol=1e-10 * max(scale, 1.0)):
            raise DataError("M must be symmetric")
        object.__setattr__(self, "M", 0.5 * (M + M.T))
        object.__setattr__(self, "a", a)

    @property
    def p(self) -> int:
        return self.a.shape[0]

    def objective(self, v) -> float:
        v = np.asarray(v, dtype=float).ravel()
        return float(v @ self.M @ v - 2.0 * v @ self.a)

    def gradient(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float).ravel()
        return 2.0 * (self.M @ v - self.a)


def kkt_residual(problem: NnqpProblem, v: np.ndarray) -> float:
    """max_k |min(v_k, grad_k)|: zero exactly at a KKT point of the cone."""
    g = problem.gradient(v)
    return float(np.max(np.abs(np.minimum(v, g)))) if problem.p else 0.0


_POLISH_EVERY = 25


def _polish_support(M, a, v, pinned, effective_tol):
    """Solve the unconstrained problem on the current support and return the
    result only if it passes the full KKT check; the problem is convex, so a
    verified KKT point is a global optimum."""
    support = (v > 0.0) & ~pinned
    if not np.any(support):
        return None
    S = np.flatnonzero(support)
    try:
        wS = np.linalg.solve(M[np.ix_(S, S)], a[S])
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(wS)) or np.any(wS < 0.0):
        return None
    cand = np.zeros_like(v)
    cand[S] = wS
    kkt = np.abs(np.minimum(cand, 2.0 * (M @ cand - a)))
    kkt[pinned] = 0.0
    if float(kkt.max()) <= effective_tol:
        return cand
    return None


def nnqp_solve(M, a=None, tol: float = 1e-10, max_iter: int | None = None) -> np.ndarray:
    """Cyclic coordinate descent for min_{v >= 0} v^T M v - 2 v^T a.

    Each coordinate gets its exact minimizer clamped at zero:
    v_k <- max(0, (a_k - sum_{l != k} M_kl v_l) / M_kk). Coordinates with
    M_kk = 0 are held at zero. Stops when the KKT residual falls below
    tol * max(1, ||a||_inf); the default budget is 100 p^2 sweeps.

    Near-collinear kernels make the sweeps crawl, so every few sweeps the
    currently active support is solved directly and the candidate is accepted
    when it certifies against the full KKT conditions.
    """
    problem = M if isinstance(M, NnqpProblem) else NnqpProblem(M, a)
    M = problem.M
    a = problem.a
    p = problem.p
    if max_iter is None:
        max_iter = 100 * p * p
    effective_tol = tol * max(1.0, float(np.abs(a).max()) if p else 1.0)

    v = np.zeros(p)
    w = np.zeros(p)  # running M @ v
    diag = np.diag(M).copy()
    pinned = diag <= 0.0  # degenerate kernels; Cauchy-Schwarz makes a_k = 0
    residual = np.inf
    for sweep in range(max_iter):
        for k in range(p):
            if pinned[k]:
                new = 0.0
            else:
                rest = w[k] - diag[k] * v[k]
                new = max(0.0, (a[k] - rest) / diag[k])
            delta = new - v[k]
            if delta != 0.0:
                w += delta * M[:, k]
                v[k] = new
        w = M @ v  # resync to cancel incremental drift
        if p:
            kkt = np.abs(np.minimum(v, 2.0 * (w - a)))
            kkt[pinned] = 0.0
            residual = float(kkt.max())
        else:
            residual = 0.0
        if residual <= effective_tol:
            return v
        if (sweep + 1) % _POLISH_EVERY == 0:
            polished = _polish_support(M, a, v, pinned, effective_tol)
            if polished is not None:
                return polished
    polished = _polish_support(M, a, v, pinned, effective_tol)
    if polished is not None:
        return polished
    raise NonConvergedError(
        f"nonnegative QP did not reach tolerance {effective_tol:g} in "
        f"{max_iter} sweeps (residual {residual:g})",
        best=v,
        residual=residual,
    )


def rho0_of_solution(v, M) -> float:
    """||v||_M = sqrt(v^T M v): the unnormalized alignment value of a QP solution."""
    v = np.asarray(v, dtype=float).ravel()
    M = matrix_of(M)
    if np.any(v < -1e-12):
        raise DataError("QP solutions must be nonnegative")
    if not np.any(v > 0.0):
        raise DataError("QP solution is identically zero")
    return float(np.sqrt(max(v @ M @ v, 0.0)))


@dataclass(frozen=True)
class LinearCombination:
    """Closed-form direction M^{-1} a normalized in L2, with its target product."""

    mu: np.ndarray
    mu_dot_a: float


def linear_combination_weights(bank, y, rtol: float = 1e-10) -> LinearCombination:
    """Unconstrained maximizer of the alignment over mixtures: M^{-1} a,
    L2-normalized. Valid only when M is well conditioned; entries may be
    negative, which is why the result is a plain vector, not MixtureWeights."""
    system = bank if isinstance(bank, AlignmentSystem) else alignment_system(bank, y)
    if system.is_singular(rtol):
        raise SingularSystemError(
            f"kernel-products matrix is singular (min eigenvalue "
            f"{system.min_eigenvalue:.3e}); use alignf_weights instead"
        )
    raw = np.linalg.solve(system.M, system.a)
    n = float(np.linalg.norm(raw))
    if n == 0.0:
        raise NoSignalError("M^{-1} a is zero; no alignment signal")
    mu = raw / n
    return LinearCombination(mu=mu, mu_dot_a=float(mu @ system.a))


def alignf_weights(
    bank,
    y=None,
    radius: float = 1.0,
    norm_kind: str = "l2",
    tol: float = 1e-10,
    max_iter: int | None = None,
) -> MixtureWeights:
    """Alignment-maximizing nonnegative combination.

    Solves min_{v >= 0} v^T M v - 2 v^T a, takes the direction v / ||v||_2,
    and rescales it to the requested (norm_kind, radius).
    """
    system = bank if isinstance(bank, AlignmentSystem) else alignment_system(bank, y)
    if not np.any(np.abs(system.a) > 0.0):
        raise NoSignalError("every base kernel has zero alignment with the target")
    v = nnqp_solve(NnqpProblem(system.M, system.a), tol=tol, max_iter=max_iter)
    if not np.any(v > 0.0):
        raise NoSignalError("the alignment QP returned the zero vector")
    return scale_weights(v / np.linalg.norm(v), norm_kind=norm_kind, radius=radius)
