"""Datasets: the four-cluster XOR set and the Versicolor/Virginica Iris subset.

Labels are 0 for class A and 1 for class B. Every emitted feature lies in
[0, 1] because the features are used directly as rotation angles.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import IngestionError

CLASS_A, CLASS_B = 0, 1

XOR_CENTERS_A = ((0.25, 0.25), (0.75, 0.75))
XOR_CENTERS_B = ((0.25, 0.75), (0.75, 0.25))

_IRIS_CLASSES = {
    "versicolor": CLASS_A,
    "iris-versicolor": CLASS_A,
    "1": CLASS_A,
    "virginica": CLASS_B,
    "iris-virginica": CLASS_B,
    "2": CLASS_B,
}
_IRIS_OTHER = {"setosa", "iris-setosa", "0"}


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels, dtype=int)
        if x.ndim != 2 or x.shape[1] != 2:
            raise ValueError(f"features must have shape (n, 2), got {x.shape}")
        if len(x) == 0:
            raise ValueError("dataset is empty")
        if len(y) != len(x):
            raise ValueError("features and labels differ in length")
        if x.min() < 0.0 or x.max() > 1.0:
            raise ValueError("features must lie in [0, 1]")
        if not np.isin(y, (CLASS_A, CLASS_B)).all():
            raise ValueError("labels must be 0 (A) or 1 (B)")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, idx) -> Dataset:
        idx = np.asarray(idx)
        return Dataset(self.features[idx], self.labels[idx], self.name)

    def class_counts(self) -> tuple[int, int]:
        n_b = int(self.labels.sum())
        return len(self) - n_b, n_b

    def to_csv(self, path=None) -> str:
        """``x0,x1,label`` rows; floats use ``repr`` so a reload is exact."""
        buf = io.StringIO()
        buf.write("x0,x1,label\n")
        for (x0, x1), lab in zip(self.features, self.labels):
            buf.write(f"{float(x0)!r},{float(x1)!r},{int(lab)}\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path, name: str | None = None) -> Dataset:
        path = Path(path)
        rows = list(csv.reader(path.read_text().splitlines()))
        if not rows or [c.strip() for c in rows[0]] != ["x0", "x1", "label"]:
            raise IngestionError("expected header x0,x1,label", row=1)
        x, y = [], []
        for i, r in enumerate(rows[1:], start=2):
            if not r:
                continue
            if len(r) != 3:
                raise IngestionError(f"expected 3 columns, got {len(r)}", row=i)
            try:
                x.append((float(r[0]), float(r[1])))
                y.append(int(r[2]))
            except ValueError as exc:
                raise IngestionError(str(exc), row=i) from exc
        return cls(np.array(x), np.array(y), name or path.stem)


def gen_xor(n_per_cluster: int = 16, sigma: float = 0.05, seed: int = 1) -> Dataset:
    """Four isotropic Gaussian clusters in the unit square, XOR-labelled.

    Bottom-left and top-right clusters are class A, the off-diagonal pair is
    class B. Samples are clipped to [0, 1]^2.
    """
    if n_per_cluster < 1:
        raise ValueError("n_per_cluster must be >= 1")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for centers, label in ((XOR_CENTERS_A, CLASS_A), (XOR_CENTERS_B, CLASS_B)):
        for c in centers:
            pts = np.asarray(c) + sigma * rng.standard_normal((n_per_cluster, 2))
            xs.append(np.clip(pts, 0.0, 1.0))
            ys.append(np.full(n_per_cluster, label))
    return Dataset(np.concatenate(xs), np.concatenate(ys), f"xor_n{n_per_cluster}_s{sigma:g}_seed{seed}")


def _iris_rows(text: str):
    reader = csv.reader(text.splitlines())
    for i, r in enumerate(reader, start=1):
        if not r or not "".join(r).strip():
            continue
        if len(r) != 5:
            raise IngestionError(f"expected 5 columns, got {len(r)}", row=i)
        try:
            feats = [float(v) for v in r[:4]]
        except ValueError:
            if i == 1:
                continue  # header
            raise IngestionError(f"non-numeric feature in {r[:4]}", row=i) from None
        yield i, feats, r[4].strip().strip('"').lower()


def load_iris(path=None, normalization: str = "max") -> Dataset:
    """Versicolor (A) vs Virginica (B) on petal length and petal width.

    ``path`` is a standard 150-row Iris CSV (four numeric columns then the
    species); the bundled copy is used when omitted. ``normalization="max"``
    divides each feature by its maximum over the subset; ``"minmax"`` maps
    each feature onto [0, 1].
    """
    if path is None:
        text = resources.files("photonic_qnn").joinpath("data/iris.csv").read_text()
        name = "iris"
    else:
        text = Path(path).read_text()
        name = Path(path).stem
    x, y = [], []
    for row, feats, species in _iris_rows(text):
        if species in _IRIS_CLASSES:
            x.append((feats[2], feats[3]))
            y.append(_IRIS_CLASSES[species])
        elif species not in _IRIS_OTHER:
            raise IngestionError(f"unknown species {species!r}", row=row)
    y = np.array(y, dtype=int)
    for label, cname in ((CLASS_A, "versicolor"), (CLASS_B, "virginica")):
        if not (y == label).any():
            raise IngestionError(f"no {cname} rows found")
    x = np.array(x, dtype=float)
    if normalization == "max":
        x = x / x.max(axis=0)
    elif normalization == "minmax":
        lo, hi = x.min(axis=0), x.max(axis=0)
        x = (x - lo) / (hi - lo)
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    return Dataset(x, y, f"{name}_versicolor_virginica")


def shuffle_split_order(dataset: Dataset | int, seed) -> np.ndarray:
    """Seeded permutation of sample indices (numpy's Fisher-Yates shuffle)."""
    n = dataset if isinstance(dataset, int) else len(dataset)
    return np.random.default_rng(seed).permutation(n)
