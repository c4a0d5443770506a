"""Alignment measures between kernels, on samples and on finite distributions.

The sample measures operate on Gram matrices. The population measures take a
kernel spec plus a finite-support distribution and evaluate every expectation
exactly by enumerating support pairs, so they serve as ground truth for the
Monte-Carlo bench.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DegenerateKernelError, DimensionError
from .kernels import (
    GramMatrix,
    KernelBank,
    KernelSpec,
    Sample,
    _kernel_matrix,
    centered_entries,
    matrix_of,
)


def _pair(K, Kp):
    A = matrix_of(K)
    B = matrix_of(Kp)
    if A.shape != B.shape:
        raise DimensionError("alignment needs two matrices of identical shape")
    return A, B


def _centered(K, A):
    if isinstance(K, GramMatrix) and K.is_centered:
        return A
    return centered_entries(A)


def centered_alignment(K, Kp) -> float:
    """<K_c, K'_c>_F / (||K_c||_F ||K'_c||_F)."""
    A, B = _pair(K, Kp)
    Ac = _centered(K, A)
    Bc = _centered(Kp, B)
    na = np.linalg.norm(Ac)
    nb = np.linalg.norm(Bc)
    if na == 0.0 or nb == 0.0:
        raise DegenerateKernelError("centered Frobenius norm is zero")
    return float(np.tensordot(Ac, Bc) / (na * nb))


def uncentered_alignment(K, Kp) -> float:
    """<K, K'>_F / (||K||_F ||K'||_F), no centering."""
    A, B = _pair(K, Kp)
    na = np.linalg.norm(A)
    nb = np.linalg.norm(B)
    if na == 0.0 or nb == 0.0:
        raise DegenerateKernelError("Frobenius norm is zero")
    return float(np.tensordot(A, B) / (na * nb))


def unnormalized_alignment(K, Kp) -> float:
    """<K_c, K'_c>_F / m^2: the scale-carrying alignment statistic."""
    A, B = _pair(K, Kp)
    Ac = _centered(K, A)
    Bc = _centered(Kp, B)
    m = A.shape[0]
    return float(np.tensordot(Ac, Bc) / (m * m))


@dataclass(frozen=True)
class AlignmentReport:
    """All sample alignment measures for one kernel pair."""

    centered: float
    uncentered: float
    unnormalized: float
    frobenius_numerator: float
    norm_first: float
    norm_second: float


def alignment_report(K, Kp) -> AlignmentReport:
    A, B = _pair(K, Kp)
    Ac = _centered(K, A)
    Bc = _centered(Kp, B)
    na = float(np.linalg.norm(Ac))
    nb = float(np.linalg.norm(Bc))
    if na == 0.0 or nb == 0.0:
        raise DegenerateKernelError("centered Frobenius norm is zero")
    num = float(np.tensordot(Ac, Bc))
    m = A.shape[0]
    return AlignmentReport(
        centered=num / (na * nb),
        uncentered=uncentered_alignment(A, B),
        unnormalized=num / (m * m),
        frobenius_numerator=num,
        norm_first=na,
        norm_second=nb,
    )


@dataclass(frozen=True)
class FiniteDistribution:
    """A distribution with finite support: labeled atoms with point masses."""

    points: np.ndarray
    labels: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        lab = np.asarray(self.labels, dtype=float).ravel()
        w = np.asarray(self.masses, dtype=float).ravel()
        if pts.shape[0] == 0:
            raise DataError("a distribution needs at least one atom")
        if lab.shape[0] != pts.shape[0] or w.shape[0] != pts.shape[0]:
            raise DimensionError("points, labels and masses must have equal length")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(lab))):
            raise DataError("atoms contain non-finite values")
        if np.any(w < 0.0):
            raise DataError("masses must be nonnegative")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise DataError(f"masses must sum to one, got {float(w.sum())!r}")
        for arr, name in ((pts, "points"), (lab, "labels"), (w, "masses")):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def two_point(cls, alpha: float) -> "FiniteDistribution":
        """Mass alpha at (-1, 0) labeled -1, mass 1-alpha at (1, 0) labeled +1."""
        alpha = float(alpha)
        if not 0.0 < alpha < 1.0:
            raise DataError("alpha must lie strictly between 0 and 1")
        return cls(
            points=np.array([[-1.0, 0.0], [1.0, 0.0]]),
            labels=np.array([-1.0, 1.0]),
            masses=np.array([alpha, 1.0 - alpha]),
        )

    @property
    def support_size(self) -> int:
        return self.points.shape[0]

    def sample(self, m: int, rng: np.random.Generator) -> Sample:
        """Draw m labeled points i.i.d. by atom mass."""
        if m < 2:
            raise DataError("a sample needs at least two points")
        idx = rng.choice(self.support_size, size=int(m), p=self.masses)
        return Sample(self.points[idx], self.labels[idx])

    def bound_kernel(self, spec: KernelSpec) -> float:
        """max_x k(x, x) over the support: a valid R^2 for this kernel."""
        K = _kernel_matrix(spec, self.points, self.points)
        return float(np.max(np.diag(K)))

    def bound_target(self) -> float:
        """max_x y(x)^2 over the support: a valid R^2 for the label kernel."""
        return float(np.max(self.labels**2))


@dataclass(frozen=True)
class PopulationAlignment:
    """Exact population alignment values and the second moments behind them."""

    centered: float
    uncentered: float
    cross_moment: float          # E[K_c K'_c] over independent pairs
    kernel_second_moment: float  # E[K_c^2]
    target_second_moment: float  # E[K'_c^2]


def population_report(spec: KernelSpec, dist: FiniteDistribution) -> PopulationAlignment:
    """Population alignment of a kernel against the label kernel y y'.

    Centering is the population version: K_c(x, x') = K(x, x')
    - E_z[K(x, z)] - E_z[K(z, x')] + E[K]. All expectations enumerate
    support pairs with product masses, so results are exact up to rounding.
    """
    P = dist.points
    y = dist.labels
    w = dist.masses
    K = _kernel_matrix(spec, P, P)
    K = 0.5 * (K + K.T)

    kw = K @ w
    Kc = K - kw[:, None] - kw[None, :] + float(w @ kw)
    ybar = float(y @ w)
    yc = y - ybar
    T = np.outer(y, y)
    Tc = np.outer(yc, yc)

    def pair_expectation(F: np.ndarray) -> float:
        return float(w @ F @ w)

    e_cross = pair_expectation(Kc * Tc)
    e_k = pair_expectation(Kc * Kc)
    e_t = pair_expectation(Tc * Tc)
    if e_k <= 0.0 or e_t <= 0.0:
        raise DegenerateKernelError(
            "population centered second moment vanishes; alignment undefined"
        )
    u_cross = pair_expectation(K * T)
    u_k = pair_expectation(K * K)
    u_t = pair_expectation(T * T)
    if u_k <= 0.0 or u_t <= 0.0:
        raise DegenerateKernelError("population second moment vanishes")
    return PopulationAlignment(
        centered=e_cross / float(np.sqrt(e_k * e_t)),
        uncentered=u_cross / float(np.sqrt(u_k * u_t)),
        cross_moment=e_cross,
        kernel_second_moment=e_k,
        target_second_moment=e_t,
    )


def population_alignment(spec: KernelSpec, dist: FiniteDistribution) -> float:
    return population_report(spec, dist).centered


def population_uncentered_alignment(spec: KernelSpec, dist: FiniteDistribution) -> float:
    return population_report(spec, dist).uncentered


@dataclass(frozen=True)
class AlignmentSystem:
    """Target products a_k = <K_kc, yy^T>_F and kernel products
    M_kl = <K_kc, K_lc>_F for a bank, with M's smallest eigenvalue."""

    a: np.ndarray
    M: np.ndarray
    min_eigenvalue: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).ravel()
        M = np.asarray(self.M, dtype=float)
        if M.shape != (a.shape[0], a.shape[0]):
            raise DimensionError("M must be square and match a in size")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "M", M)

    @property
    def p(self) -> int:
        return self.a.shape[0]

    def is_singular(self, rtol: float = 1e-10) -> bool:
        return self.min_eigenvalue < rtol * float(np.trace(self.M))


def alignment_system(bank, y) -> AlignmentSystem:
    """Build (a, M) from centered bank kernels against the target yy^T.

    Degenerate centered kernels make the system meaningless, so they are
    rejected with their indices listed.
    """
    if isinstance(bank, KernelBank):
        mats = bank.matrices()
        already_centered = bank.centered
    else:
        mats = [matrix_of(K) for K in bank]
        already_centered = False
    y = np.asarray(y, dtype=float).ravel()
    if not mats:
        raise DataError("alignment system needs at least one kernel")
    m = mats[0].shape[0]
    if y.shape[0] != m:
        raise DimensionError(f"kernels are {m}x{m} but y has length {y.shape[0]}")

    centered = [K if already_centered else centered_entries(K) for K in mats]
    bad = [
        i
        for i, (K, Kc) in enumerate(zip(mats, centered))
        if np.linalg.norm(Kc) <= 1e-12 * max(np.linalg.norm(K), 1.0)
    ]
    if bad:
        raise DegenerateKernelError(
            f"degenerate centered base kernels at indices {bad}"
        )

    stack = np.stack(centered)
    a = stack @ y @ y  # a_k = y^T K_kc y = <K_kc, yy^T>_F
    M = np.tensordot(stack, stack, axes=([1, 2], [1, 2]))
    M = 0.5 * (M + M.T)
    min_eig = float(np.linalg.eigvalsh(M)[0])
    return AlignmentSystem(a=a, M=M, min_eigenvalue=min_eig)
