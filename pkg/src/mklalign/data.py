"""Dataset loading, synthetic generators, and base-kernel bank construction.

CSV files are comma-separated UTF-8 with '.' decimals and an optional header
(detected when the first row fails numeric parsing). LIBSVM lines are
"label index:value ..." with 1-based indices, densified. Synthetic sources
name a registered generator plus its parameters and seed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import DataError, DegenerateKernelError
from .kernels import (
    GramMatrix,
    KernelBank,
    KernelSpec,
    Sample,
    centered_entries,
    gaussian,
    gram,
    rank_one,
)
from .seeding import generator

TASKS = ("classification", "regression")


@dataclass(frozen=True)
class Preprocessing:
    """Steps applied in declaration order after loading."""

    standardize_features: bool = False
    center_labels: bool = False
    unit_second_moment_labels: bool = False


@dataclass(frozen=True)
class CsvSource:
    path: str
    label_column: int | str = "last"


@dataclass(frozen=True)
class LibsvmSource:
    path: str


@dataclass(frozen=True)
class SyntheticSource:
    generator: str
    params: dict = field(default_factory=dict)
    seed: int = 0


@dataclass(frozen=True)
class DatasetConfig:
    source: CsvSource | LibsvmSource | SyntheticSource
    task: str
    preprocessing: Preprocessing = Preprocessing()

    def __post_init__(self):
        if self.task not in TASKS:
            raise DataError(f"task must be one of {TASKS}, got {self.task!r}")


def _parse_float(cell: str) -> float:
    return float(cell.strip())


def _is_numeric_row(row) -> bool:
    try:
        for cell in row:
            _parse_float(cell)
    except ValueError:
        return False
    return len(row) > 0


def _load_csv(source: CsvSource):
    try:
        with open(source.path, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {source.path}: {exc}") from exc
    rows = [row for row in rows if row and any(cell.strip() for cell in row)]
    if not rows:
        raise DataError(f"{source.path}: no data rows")

    header = None
    if not _is_numeric_row(rows[0]):
        header = [cell.strip() for cell in rows[0]]
        rows = rows[1:]
        if not rows:
            raise DataError(f"{source.path}: header only, no data rows")

    width = len(rows[0])
    data = np.empty((len(rows), width))
    for r, row in enumerate(rows):
        if len(row) != width:
            raise DataError(
                f"{source.path}: row {r + 1} has {len(row)} fields, expected {width}"
            )
        try:
            data[r] = [_parse_float(cell) for cell in row]
        except ValueError as exc:
            raise DataError(f"{source.path}: row {r + 1}: {exc}") from exc

    col = source.label_column
    if isinstance(col, str) and col != "last":
        if header is None:
            raise DataError(
                f"{source.path}: label column {col!r} needs a header row"
            )
        try:
            col = header.index(col)
        except ValueError:
            raise DataError(f"{source.path}: no column named {source.label_column!r}")
    elif col == "last":
        col = width - 1
    col = int(col)
    if col < 0:
        col += width
    if not 0 <= col < width:
        raise DataError(f"{source.path}: label column {source.label_column!r} out of range")
    labels = data[:, col]
    points = np.delete(data, col, axis=1)
    if points.shape[1] == 0:
        raise DataError(f"{source.path}: no feature columns besides the label")
    return points, labels


def _load_libsvm(source: LibsvmSource):
    try:
        with open(source.path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DataError(f"cannot read {source.path}: {exc}") from exc
    labels = []
    rows = []
    width = 0
    for n, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            labels.append(float(parts[0]))
        except ValueError as exc:
            raise DataError(f"{source.path}: line {n}: bad label {parts[0]!r}") from exc
        entries = {}
        for tok in parts[1:]:
            try:
                idx, val = tok.split(":", 1)
                idx = int(idx)
                val = float(val)
            except ValueError as exc:
                raise DataError(f"{source.path}: line {n}: bad feature {tok!r}") from exc
            if idx < 1:
                raise DataError(f"{source.path}: line {n}: indices are 1-based")
            entries[idx - 1] = val
            width = max(width, idx)
        rows.append(entries)
    if not rows:
        raise DataError(f"{source.path}: no data rows")
    if width == 0:
        raise DataError(f"{source.path}: no features present")
    points = np.zeros((len(rows), width))
    for r, entries in enumerate(rows):
        for j, val in entries.items():
            points[r, j] = val
    return points, np.asarray(labels)


def synth_two_point(alpha: float, m: int, seed: int = 0) -> Sample:
    """round(alpha * m) points at (-1, 0) labeled -1 and the rest at (1, 0)
    labeled +1, shuffled by seed. Counts are clamped so both classes appear."""
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise DataError("alpha must lie strictly between 0 and 1")
    m = int(m)
    if m < 2:
        raise DataError("need at least two points")
    n_neg = int(np.floor(alpha * m + 0.5))
    n_neg = min(max(n_neg, 1), m - 1)
    points = np.vstack(
        [np.tile([-1.0, 0.0], (n_neg, 1)), np.tile([1.0, 0.0], (m - n_neg, 1))]
    )
    labels = np.concatenate([-np.ones(n_neg), np.ones(m - n_neg)])
    perm = generator(seed).permutation(m)
    return Sample(points[perm], labels[perm])


def synth_gaussian_classes(
    m: int = 100,
    dim: int = 2,
    noise_dim: int = 0,
    separation: float = 2.0,
    scatter: float = 1.0,
    flip: float = 0.0,
    seed: int = 0,
) -> Sample:
    """Two Gaussian clouds at +/- separation/2 along each informative axis,
    optionally padded with pure-noise dimensions and label flips."""
    m = int(m)
    if m < 2:
        raise DataError("need at least two points")
    rng = generator(seed)
    labels = np.where(rng.random(m) < 0.5, -1.0, 1.0)
    if np.all(labels == labels[0]):
        labels[0] = -labels[0]  # keep both classes present
    mean = 0.5 * float(separation)
    pts = rng.normal(0.0, float(scatter), size=(m, int(dim)))
    pts += labels[:, None] * mean
    if noise_dim:
        pts = np.hstack([pts, rng.normal(0.0, float(scatter), size=(m, int(noise_dim)))])
    if flip:
        flips = rng.random(m) < float(flip)
        labels = np.where(flips, -labels, labels)
    return Sample(pts, labels)


def synth_linear_regression(
    m: int = 100,
    dim: int = 4,
    noise: float = 0.1,
    seed: int = 0,
) -> Sample:
    """y = X w + noise with a fixed random direction w."""
    rng = generator(seed)
    X = rng.normal(size=(int(m), int(dim)))
    w = rng.normal(size=int(dim))
    w /= np.linalg.norm(w)
    y = X @ w + float(noise) * rng.normal(size=int(m))
    return Sample(X, y)


def synth_sparse_counts(
    m: int = 120,
    dim: int = 12,
    informative: int = 3,
    rate: float = 1.5,
    seed: int = 0,
) -> Sample:
    """Count-valued features; the label is the sign of a contrast over the
    first `informative` columns. A small corpus for rank-one kernel banks."""
    m = int(m)
    dim = int(dim)
    informative = int(informative)
    if informative < 1 or informative > dim:
        raise DataError("informative must lie in [1, dim]")
    rng = generator(seed)
    X = rng.poisson(float(rate), size=(m, dim)).astype(float)
    signs = np.where(np.arange(informative) % 2 == 0, 1.0, -1.0)
    score = X[:, :informative] @ signs + 0.25 * rng.normal(size=m)
    labels = np.where(score >= np.median(score), 1.0, -1.0)
    if np.all(labels == labels[0]):
        labels[0] = -labels[0]
    return Sample(X, labels)


SYNTHETIC_GENERATORS = {
    "two_point": synth_two_point,
    "gaussian_classes": synth_gaussian_classes,
    "linear_regression": synth_linear_regression,
    "sparse_counts": synth_sparse_counts,
}


def bundled_dataset_path(name: str) -> str:
    """Filesystem path of a dataset shipped with the package; the .csv
    extension is optional."""
    root = resources.files("mklalign") / "datasets"
    for candidate in (name, f"{name}.csv"):
        ref = root / candidate
        if ref.is_file():
            return str(ref)
    raise DataError(f"no bundled dataset named {name!r}")


def load_dataset(cfg: DatasetConfig) -> Sample:
    """Load points and labels, apply preprocessing in declared order, and
    validate classification labels afterwards."""
    src = cfg.source
    if isinstance(src, CsvSource):
        points, labels = _load_csv(src)
    elif isinstance(src, LibsvmSource):
        points, labels = _load_libsvm(src)
    elif isinstance(src, SyntheticSource):
        fn = SYNTHETIC_GENERATORS.get(src.generator)
        if fn is None:
            raise DataError(
                f"unknown synthetic generator {src.generator!r}; "
                f"known: {sorted(SYNTHETIC_GENERATORS)}"
            )
        try:
            sample = fn(seed=src.seed, **dict(src.params))
        except TypeError as exc:
            raise DataError(f"bad parameters for generator {src.generator!r}: {exc}") from exc
        points, labels = np.array(sample.points), np.array(sample.labels)
    else:
        raise DataError(f"unknown dataset source {type(src).__name__}")

    if not (np.all(np.isfinite(points)) and np.all(np.isfinite(labels))):
        raise DataError("dataset contains non-finite values")

    pre = cfg.preprocessing
    if pre.standardize_features:
        mean = points.mean(axis=0)
        std = points.std(axis=0)
        std[std == 0.0] = 1.0  # constant columns pass through centered
        points = (points - mean) / std
    if pre.center_labels:
        labels = labels - labels.mean()
    if pre.unit_second_moment_labels:
        power = float(np.mean(labels**2))
        if power <= 0.0:
            raise DataError("labels are identically zero; cannot normalize")
        labels = labels / np.sqrt(power)

    if cfg.task == "classification":
        if not np.all(np.isin(labels, (-1.0, 1.0))):
            bad = sorted(set(np.unique(labels)) - {-1.0, 1.0})
            raise DataError(
                f"classification labels must be -1 or +1 after preprocessing; got {bad}"
            )
    return Sample(points, labels)


@dataclass(frozen=True)
class GaussianGrid:
    """Gaussian kernels with gamma = 2^g for g in [gamma0, gamma1], ascending."""

    gamma0: int
    gamma1: int

    def __post_init__(self):
        if int(self.gamma0) > int(self.gamma1):
            raise DataError("gamma0 must not exceed gamma1")

    def specs(self, sample: Sample):
        return [gaussian(2.0**g) for g in range(int(self.gamma0), int(self.gamma1) + 1)]


@dataclass(frozen=True)
class RankOneFamily:
    """Rank-one kernels on the top_k feature columns by variance,
    emitted in ascending feature order."""

    top_k: int

    def __post_init__(self):
        if int(self.top_k) < 1:
            raise DataError("top_k must be at least 1")

    def specs(self, sample: Sample):
        k = int(self.top_k)
        if k > sample.dim:
            raise DataError(f"top_k = {k} exceeds feature dimension {sample.dim}")
        variances = sample.points.var(axis=0)
        chosen = np.argsort(-variances, kind="stable")[:k]
        return [rank_one(int(i)) for i in sorted(chosen)]


@dataclass(frozen=True)
class ExplicitFamily:
    specs_list: tuple

    def __post_init__(self):
        specs = tuple(self.specs_list)
        if not specs:
            raise DataError("explicit bank needs at least one kernel spec")
        if not all(isinstance(s, KernelSpec) for s in specs):
            raise DataError("explicit bank entries must be KernelSpec values")
        object.__setattr__(self, "specs_list", specs)

    def specs(self, sample: Sample):
        return list(self.specs_list)


@dataclass(frozen=True)
class BankConfig:
    """How to build the base kernels: the family plus processing flags.

    Normalization happens before centering. trace_one rescales by the trace
    of the raw Gram matrix; frobenius_one rescales so the *centered* matrix
    has unit Frobenius norm (the scaling under which the power-family and
    independent-alignment weights coincide at q = 2).
    """

    family: GaussianGrid | RankOneFamily | ExplicitFamily
    trace_one: bool = True
    frobenius_one: bool = False
    center: bool = True


def build_bank(sample: Sample, cfg: BankConfig) -> KernelBank:
    """Build, scale, and optionally center every base kernel.

    Kernels whose centered matrix vanishes carry no signal direction; they
    are rejected together, listing the offending indices.
    """
    specs = cfg.family.specs(sample)
    processed = []
    scales = []
    row_means = []
    grand_means = []
    degenerate = []
    for i, spec in enumerate(specs):
        K = gram(spec, sample).entries.copy()
        scale = 1.0
        if cfg.trace_one:
            tr = float(np.trace(K))
            if tr <= 0.0:
                degenerate.append(i)
                processed.append(None)
                continue
            K /= tr
            scale /= tr
        if cfg.frobenius_one:
            nc = float(np.linalg.norm(centered_entries(K)))
            if nc <= 1e-12 * max(float(np.linalg.norm(K)), 1.0):
                degenerate.append(i)
                processed.append(None)
                continue
            K /= nc
            scale /= nc
        nc = float(np.linalg.norm(centered_entries(K)))
        if nc <= 1e-12 * max(float(np.linalg.norm(K)), 1.0):
            degenerate.append(i)
            processed.append(None)
            continue
        row_means.append(K.mean(axis=1))
        grand_means.append(float(K.mean()))
        scales.append(scale)
        stored = centered_entries(K) if cfg.center else K
        processed.append(
            GramMatrix(
                stored,
                is_centered=cfg.center,
                is_trace_one=cfg.trace_one and not (cfg.center or cfg.frobenius_one),
            )
        )
    if degenerate:
        raise DegenerateKernelError(
            f"degenerate centered base kernels at indices {degenerate}"
        )
    return KernelBank(
        grams=tuple(processed),
        specs=tuple(specs),
        train_points=sample.points,
        scales=tuple(scales),
        centered=cfg.center,
        row_means=tuple(row_means),
        grand_means=tuple(grand_means),
    )
