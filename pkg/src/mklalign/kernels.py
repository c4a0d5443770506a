"""Kernel functions, Gram matrices, and feature-space centering.

All matrix work is dense float64. Centering uses the entrywise rule
(subtract row means, column means, add the grand mean), which is the
O(m^2) form of sandwiching with the projector I - 11^T/m; the projector
form is kept in the test suite as an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DataError, DegenerateKernelError, DimensionError

SYMMETRY_RTOL = 1e-10
PSD_RTOL = 1e-8

# Centered norms below this fraction of the uncentered norm count as degenerate.
DEGENERATE_RTOL = 1e-12


def _check_finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{what} contains non-finite entries")


@dataclass(frozen=True)
class Sample:
    """Labeled points: an (m, d) feature matrix and a length-m label vector."""

    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        lab = np.asarray(self.labels, dtype=float).ravel()
        if pts.ndim != 2:
            raise DimensionError("points must form a 2-D array")
        if pts.shape[0] < 2:
            raise DataError("a sample needs at least two points")
        if lab.shape[0] != pts.shape[0]:
            raise DimensionError(
                f"{pts.shape[0]} points but {lab.shape[0]} labels"
            )
        _check_finite(pts, "points")
        _check_finite(lab, "labels")
        pts = pts.copy()
        lab = lab.copy()
        pts.setflags(write=False)
        lab.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", lab)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def signs(self) -> np.ndarray:
        """Labels validated to lie in {-1, +1}."""
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise DataError("classification labels must be -1 or +1")
        return self.labels


@dataclass(frozen=True)
class KernelSpec:
    """A base kernel: gaussian(gamma), linear(offset), or rank_one(feature_index)."""

    kind: str
    gamma: float | None = None
    offset: float | None = None
    feature_index: int | None = None

    def __post_init__(self):
        if self.kind == "gaussian":
            if self.gamma is None or not float(self.gamma) > 0.0:
                raise DataError("gaussian kernel needs gamma > 0")
            object.__setattr__(self, "gamma", float(self.gamma))
        elif self.kind == "linear":
            off = 0.0 if self.offset is None else float(self.offset)
            if off < 0.0:
                raise DataError("linear kernel offset must be >= 0")
            object.__setattr__(self, "offset", off)
        elif self.kind == "rank_one":
            if self.feature_index is None or int(self.feature_index) < 0:
                raise DataError("rank_one kernel needs a feature index >= 0")
            object.__setattr__(self, "feature_index", int(self.feature_index))
        else:
            raise DataError(f"unknown kernel kind {self.kind!r}")

    def describe(self) -> str:
        if self.kind == "gaussian":
            return f"gaussian(gamma={self.gamma:g})"
        if self.kind == "linear":
            return f"linear(offset={self.offset:g})"
        return f"rank_one(feature={self.feature_index})"


def gaussian(gamma: float) -> KernelSpec:
    """k(x, z) = exp(-gamma * ||x - z||^2)."""
    return KernelSpec("gaussian", gamma=float(gamma))


def linear(offset: float = 0.0) -> KernelSpec:
    """k(x, z) = x . z + offset."""
    return KernelSpec("linear", offset=float(offset))


def rank_one(feature_index: int) -> KernelSpec:
    """k(x, z) = x[i] * z[i] for one feature column i."""
    return KernelSpec("rank_one", feature_index=int(feature_index))


@dataclass(frozen=True)
class GramMatrix:
    """A symmetric PSD kernel matrix with preprocessing flags.

    ``is_centered`` / ``is_trace_one`` record what preprocessing the entries
    already carry so downstream operations can skip redundant passes.
    """

    entries: np.ndarray
    is_centered: bool = False
    is_trace_one: bool = False

    def __post_init__(self):
        A = np.asarray(self.entries, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionError("Gram matrix must be square")
        A = A.copy()
        A.setflags(write=False)
        object.__setattr__(self, "entries", A)

    @classmethod
    def from_array(
        cls,
        entries,
        *,
        check_psd: bool = True,
        is_centered: bool = False,
        is_trace_one: bool = False,
    ) -> "GramMatrix":
        """Validate a foreign matrix: symmetry always, PSD unless disabled.

        Symmetry is relative (1e-10 of the largest entry). PSD admits
        eigenvalues down to -1e-8 times the largest eigenvalue; anything
        below that is rejected rather than silently projected.
        """
        A = np.asarray(entries, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionError("Gram matrix must be square")
        _check_finite(A, "kernel matrix")
        scale = float(np.abs(A).max()) if A.size else 0.0
        if not np.allclose(A, A.T, rtol=0.0, atol=SYMMETRY_RTOL * scale):
            raise DataError("kernel matrix is not symmetric")
        A = 0.5 * (A + A.T)
        if check_psd:
            w = np.linalg.eigvalsh(A)
            lam_max = max(float(w[-1]), 0.0)
            if float(w[0]) < -PSD_RTOL * max(lam_max, np.finfo(float).tiny):
                raise DataError(
                    f"matrix is not positive semidefinite "
                    f"(min eigenvalue {float(w[0]):.3e})"
                )
        return cls(A, is_centered=is_centered, is_trace_one=is_trace_one)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None):
        return np.asarray(self.entries, dtype=dtype)


def matrix_of(K) -> np.ndarray:
    """Entries of a GramMatrix, or a square float array passed through."""
    if isinstance(K, GramMatrix):
        return K.entries
    A = np.asarray(K, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError("expected a square matrix")
    return A


def _kernel_matrix(spec: KernelSpec, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    if spec.kind == "gaussian":
        return np.exp(-spec.gamma * cdist(X, Z, "sqeuclidean"))
    if spec.kind == "linear":
        return X @ Z.T + spec.offset
    k = spec.feature_index
    if k >= X.shape[1] or k >= Z.shape[1]:
        raise DataError(
            f"rank_one feature index {k} out of range for dimension {X.shape[1]}"
        )
    return np.outer(X[:, k], Z[:, k])


def _points_of(sample) -> np.ndarray:
    if isinstance(sample, Sample):
        return sample.points
    X = np.asarray(sample, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    _check_finite(X, "points")
    return X


def gram(spec: KernelSpec, sample) -> GramMatrix:
    """Gram matrix of a kernel over a sample (or a raw point array)."""
    X = _points_of(sample)
    K = _kernel_matrix(spec, X, X)
    _check_finite(K, "kernel matrix")
    # These kernel families are PSD by construction; only enforce exact symmetry.
    return GramMatrix(0.5 * (K + K.T))


def gram_cross(spec: KernelSpec, left, right) -> np.ndarray:
    """Kernel values k(left_i, right_j) as a (len(left), len(right)) matrix."""
    X = _points_of(left)
    Z = _points_of(right)
    K = _kernel_matrix(spec, X, Z)
    _check_finite(K, "kernel matrix")
    return K


def centered_entries(K) -> np.ndarray:
    """Entrywise centering: K_ij - rowmean_i - colmean_j + grandmean."""
    A = matrix_of(K)
    row = A.mean(axis=1, keepdims=True)
    col = A.mean(axis=0, keepdims=True)
    return A - row - col + A.mean()


def center(K) -> GramMatrix:
    """Feature-space centering of a Gram matrix. Idempotent."""
    if isinstance(K, GramMatrix) and K.is_centered:
        return K
    return GramMatrix(centered_entries(K), is_centered=True)


def frobenius_product(A, B) -> float:
    """<A, B>_F = Tr[A^T B], i.e. the entrywise product sum."""
    A = matrix_of(A)
    B = matrix_of(B)
    if A.shape != B.shape:
        raise DimensionError("Frobenius product needs matrices of identical shape")
    return float(np.tensordot(A, B))


def frobenius_norm(A) -> float:
    return float(np.linalg.norm(matrix_of(A)))


def trace_normalize(K) -> GramMatrix:
    """Scale a Gram matrix so its trace is one."""
    A = matrix_of(K)
    tr = float(np.trace(A))
    if tr <= 0.0:
        raise DegenerateKernelError("trace must be positive to normalize")
    was_centered = isinstance(K, GramMatrix) and K.is_centered
    return GramMatrix(A / tr, is_centered=was_centered, is_trace_one=True)


def label_kernel(y) -> np.ndarray:
    """The ideal target matrix yy^T built from a label vector."""
    y = np.asarray(y, dtype=float).ravel()
    return np.outer(y, y)


def combine(kernels, mu) -> np.ndarray:
    """Weighted sum sum_k mu_k K_k of kernel matrices."""
    if isinstance(kernels, KernelBank):
        mats = kernels.matrices()
    else:
        mats = [matrix_of(K) for K in kernels]
    w = np.asarray(mu, dtype=float).ravel()
    if len(mats) != w.shape[0]:
        raise DimensionError(f"{len(mats)} kernels but {w.shape[0]} weights")
    if not mats:
        raise DataError("cannot combine an empty kernel list")
    out = np.zeros_like(mats[0])
    for wk, K in zip(w, mats):
        if K.shape != out.shape:
            raise DimensionError("kernel matrices differ in shape")
        out += wk * K
    return out


@dataclass(frozen=True)
class KernelBank:
    """Ordered base kernels over a shared sample.

    Stores the processed training Gram matrices plus the bookkeeping
    (kernel specs, scale factors, training means) needed to evaluate the
    same processed kernels between held-out points and the training sample.
    Banks built from raw matrices have no out-of-sample support.
    """

    grams: tuple
    specs: tuple | None = None
    train_points: np.ndarray | None = None
    scales: tuple | None = None
    centered: bool = False
    row_means: tuple | None = None
    grand_means: tuple | None = None

    def __post_init__(self):
        grams = tuple(
            g if isinstance(g, GramMatrix) else GramMatrix.from_array(g)
            for g in self.grams
        )
        if not grams:
            raise DataError("a kernel bank needs at least one kernel")
        m = grams[0].m
        if any(g.m != m for g in grams):
            raise DimensionError("bank kernels must share one sample size")
        object.__setattr__(self, "grams", grams)
        if self.train_points is not None:
            pts = np.asarray(self.train_points, dtype=float)
            pts = pts.copy()
            pts.setflags(write=False)
            object.__setattr__(self, "train_points", pts)

    @classmethod
    def from_matrices(cls, mats, centered: bool = False) -> "KernelBank":
        """Wrap precomputed Gram matrices (no out-of-sample evaluation)."""
        grams = tuple(
            K if isinstance(K, GramMatrix) else GramMatrix.from_array(K)
            for K in mats
        )
        return cls(grams=grams, centered=centered)

    @property
    def p(self) -> int:
        return len(self.grams)

    @property
    def m(self) -> int:
        return self.grams[0].m

    def matrices(self) -> list:
        return [g.entries for g in self.grams]

    def centered_matrices(self) -> list:
        if self.centered:
            return self.matrices()
        return [centered_entries(g.entries) for g in self.grams]

    def cross(self, points) -> list:
        """Processed kernel values between new points (rows) and the
        training sample (columns), one matrix per base kernel.

        Scaling reuses the recorded per-kernel factor; centering uses the
        training-sample means so new points land in the same centered
        feature space as the stored Gram matrices.
        """
        if self.specs is None or self.train_points is None:
            raise DataError(
                "bank was built from raw matrices; out-of-sample kernels "
                "are unavailable"
            )
        X = _points_of(points)
        scales = self.scales or tuple(1.0 for _ in self.specs)
        out = []
        for i, spec in enumerate(self.specs):
            C = _kernel_matrix(spec, X, self.train_points) * scales[i]
            if self.centered:
                rm = self.row_means[i]
                gm = self.grand_means[i]
                C = C - C.mean(axis=1, keepdims=True) - rm[None, :] + gm
            out.append(C)
        return out

    def degenerate_indices(self) -> list:
        """Indices whose centered matrix is numerically zero."""
        bad = []
        for i, g in enumerate(self.grams):
            A = g.entries
            Ac = A if self.centered else centered_entries(A)
            if np.linalg.norm(Ac) <= DEGENERATE_RTOL * max(np.linalg.norm(A), 1.0):
                bad.append(i)
        return bad
