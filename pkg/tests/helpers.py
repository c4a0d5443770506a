"""Independent oracles for the test suite.

Everything here is deliberately written a different way from the package:
projector products instead of entrywise centering, double loops instead of
tensor contractions, enumeration and grid search instead of iterative
solvers. Slow and obvious on purpose.
"""

import itertools
import math

import numpy as np


def center_oracle(A):
    """Center with the explicit projector U = I - 11^T / m on both sides."""
    A = np.asarray(A, dtype=float)
    m = A.shape[0]
    U = np.eye(m) - np.ones((m, m)) / m
    return U @ A @ U


def frobenius_oracle(A, B):
    """Frobenius inner product by double loop."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    total = 0.0
    for i in range(A.shape[0]):
        for j in range(A.shape[1]):
            total += A[i, j] * B[i, j]
    return total


def alignment_oracle(K1, K2, centered=True):
    """Normalized alignment via the projector and double loops."""
    A = center_oracle(K1) if centered else np.asarray(K1, dtype=float)
    B = center_oracle(K2) if centered else np.asarray(K2, dtype=float)
    num = frobenius_oracle(A, B)
    den = math.sqrt(frobenius_oracle(A, A)) * math.sqrt(frobenius_oracle(B, B))
    return num / den


def population_alignment_oracle(kfun, points, labels, masses, centered=True):
    """Population alignment by explicit summation over the support atoms.

    kfun(x, z) -> float evaluates the kernel; the target kernel is y y'.
    """
    n = len(masses)

    def kc(i, j):
        val = kfun(points[i], points[j])
        if not centered:
            return val
        row = sum(masses[z] * kfun(points[i], points[z]) for z in range(n))
        col = sum(masses[z] * kfun(points[z], points[j]) for z in range(n))
        grand = sum(
            masses[u] * masses[v] * kfun(points[u], points[v])
            for u in range(n)
            for v in range(n)
        )
        return val - row - col + grand

    ybar = sum(masses[z] * labels[z] for z in range(n)) if centered else 0.0

    def tc(i, j):
        return (labels[i] - ybar) * (labels[j] - ybar)

    cross = sum(
        masses[i] * masses[j] * kc(i, j) * tc(i, j) for i in range(n) for j in range(n)
    )
    k2 = sum(
        masses[i] * masses[j] * kc(i, j) ** 2 for i in range(n) for j in range(n)
    )
    t2 = sum(
        masses[i] * masses[j] * tc(i, j) ** 2 for i in range(n) for j in range(n)
    )
    return cross / math.sqrt(k2 * t2)


def nnqp_oracle(M, a, feas_tol=1e-9):
    """Minimize v^T M v - 2 v^T a over v >= 0 by active-set enumeration.

    Tries every support set S, solves the unconstrained system on S, keeps
    solutions that are feasible and KKT-consistent, and returns the best by
    objective. Exponential in p; fine for p <= 12.
    """
    M = np.asarray(M, dtype=float)
    a = np.asarray(a, dtype=float).ravel()
    p = a.shape[0]
    best_v, best_obj = np.zeros(p), 0.0
    scale = max(1.0, float(np.abs(a).max()))
    for r in range(1, p + 1):
        for S in itertools.combinations(range(p), r):
            S = list(S)
            try:
                vS = np.linalg.solve(M[np.ix_(S, S)], a[S])
            except np.linalg.LinAlgError:
                continue
            if np.any(vS < -feas_tol * scale):
                continue
            v = np.zeros(p)
            v[S] = np.maximum(vS, 0.0)
            grad = M @ v - a
            if np.any(grad < -feas_tol * scale * 10):
                continue
            obj = float(v @ M @ v - 2.0 * v @ a)
            if obj < best_obj - 1e-15:
                best_v, best_obj = v, obj
    return best_v


def svm_box_grid_oracle(K, y, C, steps=11):
    """Maximize 2 sum(alpha) - alpha^T Y K Y alpha over the box [0, C]^m by
    exhaustive grid search. Only viable for tiny m."""
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    m = y.shape[0]
    Q = (y[:, None] * K * y[None, :])
    levels = np.linspace(0.0, C, steps)
    best_alpha, best_obj = None, -np.inf
    for combo in itertools.product(levels, repeat=m):
        alpha = np.array(combo)
        obj = 2.0 * alpha.sum() - float(alpha @ Q @ alpha)
        if obj > best_obj:
            best_alpha, best_obj = alpha, obj
    return best_alpha, best_obj


def krr_oracle(K, y, lam):
    """Ridge dual coefficients by plain dense solve."""
    K = np.asarray(K, dtype=float)
    m = K.shape[0]
    return np.linalg.solve(K + lam * np.eye(m), np.asarray(y, dtype=float).ravel())


def golden_section(f, lo, hi, tol=1e-10, max_iter=200):
    """Minimize a unimodal scalar function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def refine_grid_2d(f, lo0, hi0, lo1, hi1, n=25, rounds=4):
    """Two-dimensional minimization by iterated grid refinement."""
    best = None
    for _ in range(rounds):
        xs = np.linspace(lo0, hi0, n)
        ys = np.linspace(lo1, hi1, n)
        vals = [(f(x, z), x, z) for x in xs for z in ys]
        fbest, x0, z0 = min(vals, key=lambda t: t[0])
        best = (x0, z0, fbest)
        dx = (hi0 - lo0) / (n - 1)
        dz = (hi1 - lo1) / (n - 1)
        lo0, hi0 = max(lo0, x0 - 2 * dx), min(hi0, x0 + 2 * dx)
        lo1, hi1 = max(lo1, z0 - 2 * dz), min(hi1, z0 + 2 * dz)
    return best


def simplex_grid(p, n):
    """Nonnegative weight vectors summing to one on a resolution-n grid."""
    out = []
    for combo in itertools.combinations_with_replacement(range(p), n):
        v = np.zeros(p)
        for k in combo:
            v[k] += 1.0 / n
        out.append(v)
    return out


def random_psd(rng, m, rank=None):
    """Random PSD matrix from a Gaussian factor."""
    rank = rank or m
    F = rng.normal(size=(m, rank))
    return F @ F.T


def random_alignment_instance(rng, p, m):
    """A realistic NNQP instance: M and a from random centered PSD kernels
    against random labels, the same structure alignf sees."""
    U = np.eye(m) - np.ones((m, m)) / m
    mats = [U @ random_psd(rng, m, rank=rng.integers(2, m + 1)) @ U for _ in range(p)]
    y = rng.choice([-1.0, 1.0], size=m)
    T = np.outer(y, y)
    Tc = U @ T @ U
    a = np.array([float(np.tensordot(K, Tc)) for K in mats])
    M = np.array([[float(np.tensordot(Ki, Kj)) for Kj in mats] for Ki in mats])
    return M, a
