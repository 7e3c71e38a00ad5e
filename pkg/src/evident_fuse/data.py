"""Synthetic multi-view data, on-disk manifests and view corruption.

A dataset is V aligned feature matrices (one per view) sharing one label
vector, plus a train/val/test split and optionally an out-of-distribution
cluster.  On disk every view is a CSV with a header row and the metadata is
a JSON manifest whose paths are relative to the manifest's directory.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ValidationError

MANIFEST_VERSION = 1
SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class SyntheticSpec:
    """Gaussian class clusters per view.

    Class means in each view are ``separation`` times an orthonormal set of
    directions, so any two class means are ``separation * sqrt(2)`` apart.
    ``conflict_fraction`` of the samples in every view (or, given a tuple,
    that view's fraction) get another class's mean instead of their own.
    OOD samples sit ``ood_offset`` away from the origin along a direction
    orthogonal to all class means of that view.
    """

    class_count: int = 4
    view_count: int = 3
    feature_dim: int = 8
    separation: float = 4.0
    sigma: float = 1.0
    samples_per_class: int = 200
    conflict_fraction: float | tuple = 0.1
    ood_samples: int = 200
    ood_offset: float = 128.0
    split_fractions: tuple = (0.6, 0.2, 0.2)

    def __post_init__(self):
        if self.class_count < 2 or self.view_count < 1 or self.samples_per_class < 1:
            raise ValidationError("need class_count >= 2, view_count >= 1, samples_per_class >= 1")
        if self.feature_dim < 1:
            raise ValidationError("feature_dim must be >= 1")
        if not self.sigma > 0:
            raise ValidationError("sigma must be > 0")
        rho = self.conflict_fraction
        rho = tuple(float(r) for r in rho) if isinstance(rho, (tuple, list)) else float(rho)
        rhos = rho if isinstance(rho, tuple) else (rho,)
        if isinstance(rho, tuple) and len(rho) != self.view_count:
            raise ValidationError("per-view conflict_fraction needs one entry per view")
        if not all(0.0 <= r <= 1.0 for r in rhos):
            raise ValidationError("conflict_fraction must lie in [0, 1]")
        object.__setattr__(self, "conflict_fraction", rho)
        if self.ood_samples < 0:
            raise ValidationError("ood_samples must be >= 0")
        fr = tuple(float(f) for f in self.split_fractions)
        if len(fr) != 3 or min(fr) < 0 or abs(sum(fr) - 1.0) > 1e-9:
            raise ValidationError("split_fractions must be three non-negative numbers summing to 1")
        object.__setattr__(self, "split_fractions", fr)

    def to_json(self) -> dict:
        out = asdict(self)
        out["split_fractions"] = list(self.split_fractions)
        if isinstance(self.conflict_fraction, tuple):
            out["conflict_fraction"] = list(self.conflict_fraction)
        return out

    def view_conflict_fraction(self, view: int) -> float:
        rho = self.conflict_fraction
        return rho[view] if isinstance(rho, tuple) else rho

    @classmethod
    def from_json(cls, obj: dict) -> "SyntheticSpec":
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"unknown synthetic spec field(s): {sorted(unknown)}")
        obj = dict(obj)
        if "split_fractions" in obj:
            obj["split_fractions"] = tuple(obj["split_fractions"])
        return cls(**obj)


@dataclass
class Dataset:
    """In-memory multi-view dataset.

    ``conflicts`` rows are ``(sample, view, true_class, substituted_class)``.
    """

    views: list
    labels: np.ndarray
    class_count: int
    split: dict
    ood_views: Optional[list] = None
    conflicts: Optional[np.ndarray] = None
    generator: Optional[dict] = None
    view_means: Optional[list] = field(default=None, repr=False)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        n = self.labels.size
        if not self.views:
            raise ValidationError("dataset needs at least one view")
        for v, x in enumerate(self.views):
            if x.ndim != 2 or x.shape[0] != n:
                raise ValidationError(f"view {v} has shape {x.shape}, expected ({n}, d)")
        if n and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise ValidationError(f"labels must lie in [0, {self.class_count})")
        self.split = {name: np.asarray(self.split.get(name, []), dtype=np.int64) for name in SPLITS}
        allidx = np.concatenate([self.split[s] for s in SPLITS])
        if allidx.size != n or not np.array_equal(np.sort(allidx), np.arange(n)):
            raise ValidationError("splits must be disjoint and cover every sample exactly once")
        if self.ood_views is not None:
            if len(self.ood_views) != len(self.views):
                raise ValidationError("OOD data must provide every view")
            for v, (x, o) in enumerate(zip(self.views, self.ood_views)):
                if o.ndim != 2 or o.shape[1] != x.shape[1]:
                    raise ValidationError(f"OOD view {v} has the wrong feature dimension")

    @property
    def view_count(self) -> int:
        return len(self.views)

    def subset(self, name: str) -> tuple[list, np.ndarray]:
        idx = self.split[name]
        return [x[idx] for x in self.views], self.labels[idx]


def _orthonormal(rng, dim, count):
    a = rng.standard_normal((dim, count))
    q, r = np.linalg.qr(a, mode="complete" if count > dim else "reduced")
    return (q * np.sign(np.diag(r))[: q.shape[1]]).T


def make_synthetic(spec: SyntheticSpec, seed: int) -> Dataset:
    """Draw a dataset from ``spec``; a pure function of ``(spec, seed)``."""
    rng = np.random.default_rng(seed)
    k, d = spec.class_count, spec.feature_dim
    n = k * spec.samples_per_class
    labels = np.repeat(np.arange(k), spec.samples_per_class)
    labels = labels[rng.permutation(n)]

    means, ood_dirs = [], []
    for _ in range(spec.view_count):
        if d > k:
            basis = _orthonormal(rng, d, k + 1)
            means.append(spec.separation * spec.sigma * basis[:k])
            ood_dirs.append(basis[k])
        else:
            dirs = rng.standard_normal((k + 1, d))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            means.append(spec.separation * spec.sigma * dirs[:k])
            ood_dirs.append(dirs[k])

    conflicts = []
    views = []
    for v in range(spec.view_count):
        n_conf = int(round(spec.view_conflict_fraction(v) * n))
        signature = labels.copy()
        swapped = np.sort(rng.choice(n, size=n_conf, replace=False))
        signature[swapped] = (labels[swapped] + rng.integers(1, k, size=n_conf)) % k
        conflicts.extend((int(i), v, int(labels[i]), int(signature[i])) for i in swapped)
        views.append(means[v][signature] + spec.sigma * rng.standard_normal((n, d)))

    ood = None
    if spec.ood_samples:
        ood = [
            spec.ood_offset * spec.sigma * ood_dirs[v]
            + spec.sigma * rng.standard_normal((spec.ood_samples, d))
            for v in range(spec.view_count)
        ]

    order = rng.permutation(n)
    n_train = int(round(spec.split_fractions[0] * n))
    n_val = int(round(spec.split_fractions[1] * n))
    split = {
        "train": np.sort(order[:n_train]),
        "val": np.sort(order[n_train:n_train + n_val]),
        "test": np.sort(order[n_train + n_val:]),
    }
    return Dataset(
        views, labels, k, split, ood,
        np.array(conflicts, dtype=np.int64).reshape(-1, 4),
        {"seed": int(seed), "spec": spec.to_json()},
        means,
    )


def corrupt_view(data: Dataset, view_index: int, noise_sigma: float, seed: int) -> Dataset:
    """Add seeded Gaussian noise to one view's test rows; training rows are untouched."""
    if not 0 <= view_index < data.view_count:
        raise ValidationError(f"view_index {view_index} out of range [0, {data.view_count})")
    if noise_sigma < 0:
        raise ValidationError("noise_sigma must be >= 0")
    rng = np.random.default_rng(seed)
    views = [x.copy() for x in data.views]
    test = data.split["test"]
    x = views[view_index]
    x[test] = x[test] + noise_sigma * rng.standard_normal((test.size, x.shape[1]))
    return replace(data, views=views)


def nearest_mean_accuracy(x: np.ndarray, labels: np.ndarray, means: np.ndarray) -> float:
    """Accuracy of assigning every row to its closest class mean."""
    d2 = ((x[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
    return float(np.mean(np.argmin(d2, axis=1) == labels))


# ---------------------------------------------------------------------------
# files

def write_csv(path: Path, x: np.ndarray, prefix: str = "f") -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"{prefix}{j}" for j in range(x.shape[1])])
        for row in x:
            w.writerow([repr(float(val)) for val in row])


def read_csv(path: Path) -> np.ndarray:
    """Read a headed numeric CSV; NaN/Inf cells are rejected with their position."""
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"file not found: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValidationError(f"{path}: empty file, expected a header row")
    header, body = rows[0], rows[1:]
    out = np.empty((len(body), len(header)))
    for i, row in enumerate(body, start=1):
        if len(row) != len(header):
            raise ValidationError(f"{path}: row {i} has {len(row)} columns, header has {len(header)}")
        for j, cell in enumerate(row):
            try:
                val = float(cell)
            except ValueError:
                raise ValidationError(f"{path}: row {i}, column {header[j]!r}: not a number ({cell!r})")
            if not np.isfinite(val):
                raise ValidationError(f"{path}: row {i}, column {header[j]!r}: non-finite value {cell}")
            out[i - 1, j] = val
    return out


@dataclass
class DatasetManifest:
    """On-disk description of a dataset; see ``write_dataset``/``load``."""

    class_count: int
    views: list            # [{"path": str, "dim": int}]
    labels: str
    split: dict
    ood_views: Optional[list] = None
    conflicts: Optional[str] = None
    generator: Optional[dict] = None
    root: Path = field(default=Path("."), compare=False)

    def to_json(self) -> dict:
        out = {
            "version": MANIFEST_VERSION,
            "class_count": self.class_count,
            "views": self.views,
            "labels": self.labels,
            "split": {k: [int(i) for i in v] for k, v in self.split.items()},
        }
        for key in ("ood_views", "conflicts", "generator"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        return out

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n")
        return path

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        path = Path(path)
        if not path.is_file():
            raise ValidationError(f"manifest not found: {path}")
        try:
            obj = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})")
        if obj.get("version") != MANIFEST_VERSION:
            raise ValidationError(f"{path}: unsupported manifest version {obj.get('version')!r}")
        allowed = {"version", "class_count", "views", "labels", "split", "ood_views", "conflicts", "generator"}
        if set(obj) - allowed:
            raise ValidationError(f"{path}: unknown manifest field(s): {sorted(set(obj) - allowed)}")
        obj.pop("version")
        return cls(root=path.parent, **obj)

    def load_dataset(self) -> Dataset:
        views = []
        for v, desc in enumerate(self.views):
            x = read_csv(self.root / desc["path"])
            if x.shape[1] != desc["dim"]:
                raise ValidationError(f"view {v}: manifest says dim {desc['dim']}, file has {x.shape[1]}")
            views.append(x)
        labels = read_csv(self.root / self.labels)
        if labels.shape[1] != 1 or np.any(labels != np.round(labels)):
            raise ValidationError(f"{self.labels}: expected a single integer label column")
        ood = None
        if self.ood_views is not None:
            ood = [read_csv(self.root / d["path"]) for d in self.ood_views]
        conflicts = None
        if self.conflicts is not None:
            conflicts = read_csv(self.root / self.conflicts).astype(np.int64).reshape(-1, 4)
        return Dataset(views, labels[:, 0].astype(np.int64), self.class_count, self.split,
                       ood, conflicts, self.generator)


def write_dataset(data: Dataset, out_dir) -> DatasetManifest:
    """Write views, labels, OOD views and the conflict sidecar plus ``manifest.json``."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ValidationError(f"cannot create output directory {out_dir}: {exc}")
    views = []
    for v, x in enumerate(data.views):
        name = f"view{v}.csv"
        write_csv(out_dir / name, x)
        views.append({"path": name, "dim": int(x.shape[1])})
    with open(out_dir / "labels.csv", "w", newline="") as fh:
        fh.write("label\n" + "".join(f"{int(y)}\n" for y in data.labels))
    ood = None
    if data.ood_views is not None:
        ood = []
        for v, x in enumerate(data.ood_views):
            name = f"ood_view{v}.csv"
            write_csv(out_dir / name, x)
            ood.append({"path": name, "dim": int(x.shape[1])})
    conflicts = None
    if data.conflicts is not None:
        conflicts = "conflicts.csv"
        with open(out_dir / conflicts, "w", newline="") as fh:
            fh.write("sample,view,true_class,substituted_class\n")
            fh.writelines(",".join(str(int(c)) for c in row) + "\n" for row in data.conflicts)
    manifest = DatasetManifest(
        data.class_count, views, "labels.csv",
        {k: v.tolist() for k, v in data.split.items()},
        ood, conflicts, data.generator, out_dir,
    )
    manifest.save(out_dir / "manifest.json")
    return manifest


def generate_synthetic(spec: SyntheticSpec, seed: int, out_dir) -> DatasetManifest:
    """``make_synthetic`` followed by ``write_dataset``."""
    return write_dataset(make_synthetic(spec, seed), out_dir)
