"""Labeled assignment datasets: generation, binary storage, splitting, scaling.

File layout (little-endian):

    header  magic "LSAP" | version u16 = 1 | order n u16 | count u64 | seed u64
    record  n*n float32 cost entries, row-major | n uint8 label indices

Sample k's topology is drawn from the documented SplitMix64 stream seeded with
``seed XOR k`` (see :mod:`lsapkit.rng`), so a (config, count, seed) triple maps
to one exact byte sequence. Costs are quantized to float32 before labeling so
the stored label is optimal for the stored matrix, not for a finer-precision
one that was thrown away.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import d2d
from .lsap import hungarian_solve
from .rng import derive_seed

MAGIC = b"LSAP"
VERSION = 1
_HEADER = struct.Struct("<4sHHQQ")


class DatasetFormatError(ValueError):
    """Raised for bad magic/version, truncated files, or out-of-range labels."""


@dataclass(frozen=True)
class DatasetHeader:
    order: int
    sample_count: int
    scenario_seed: int
    version: int = VERSION


@dataclass(frozen=True)
class DatasetSample:
    raw_cost: np.ndarray  # (n, n) float32, Mbit/s-scaled, signed
    label: np.ndarray     # (n,) permutation, optimal for raw_cost


class Dataset:
    """In-memory sample collection backed by contiguous arrays."""

    def __init__(self, costs: np.ndarray, labels: np.ndarray, scenario_seed: int = 0):
        if costs.ndim != 3 or costs.shape[1] != costs.shape[2]:
            raise ValueError(f"costs must be (N, n, n), got {costs.shape}")
        if labels.shape != costs.shape[:2]:
            raise ValueError(f"labels shape {labels.shape} does not match costs {costs.shape}")
        self.costs = costs
        self.labels = labels
        self.scenario_seed = scenario_seed

    @property
    def order(self) -> int:
        return self.costs.shape[1]

    def __len__(self) -> int:
        return self.costs.shape[0]

    def __getitem__(self, k: int) -> DatasetSample:
        return DatasetSample(raw_cost=self.costs[k], label=self.labels[k])

    def take(self, indices) -> "Dataset":
        return Dataset(self.costs[indices], self.labels[indices], self.scenario_seed)


def _record_dtype(n: int) -> np.dtype:
    return np.dtype([("cost", "<f4", (n * n,)), ("label", "u1", (n,))])


def generate_samples(config: d2d.ScenarioConfig, count: int, seed: int) -> Dataset:
    """Simulate ``count`` scenarios and label each cost matrix exactly."""
    if count < 1:
        raise ValueError("count must be >= 1")
    n = config.n_cu
    costs = np.empty((count, n, n), dtype=np.float32)
    labels = np.empty((count, n), dtype=np.uint8)
    for k in range(count):
        topo = d2d.sample_topology(config, derive_seed(seed, k))
        gains = d2d.compute_gains(topo, config)
        rates = d2d.compute_rates(gains, config)
        cost32 = d2d.cost_matrix_from_rates(rates, config).astype(np.float32)
        result = hungarian_solve(cost32.astype(np.float64))
        costs[k] = cost32
        labels[k] = result.permutation
    return Dataset(costs, labels, scenario_seed=seed)


def save_dataset(ds: Dataset, path) -> None:
    """Write the documented binary layout."""
    n = ds.order
    rec = np.empty(len(ds), dtype=_record_dtype(n))
    rec["cost"] = ds.costs.reshape(len(ds), n * n)
    rec["label"] = ds.labels
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, len(ds), ds.scenario_seed))
        fh.write(rec.tobytes())


def load_dataset(path) -> Dataset:
    """Read and validate a dataset file; lossless round-trip of costs and labels."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise DatasetFormatError("file too short for a dataset header")
    magic, version, n, count, scenario_seed = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise DatasetFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise DatasetFormatError(f"unsupported version {version}, expected {VERSION}")
    body = blob[_HEADER.size:]
    expected = count * _record_dtype(n).itemsize
    if len(body) != expected:
        raise DatasetFormatError(
            f"record section holds {len(body)} bytes, header declares {expected}"
        )
    rec = np.frombuffer(body, dtype=_record_dtype(n))
    labels = rec["label"]
    if labels.size and labels.max() >= n:
        raise DatasetFormatError(f"label index {int(labels.max())} out of range for n={n}")
    costs = rec["cost"].reshape(count, n, n).copy()
    return Dataset(costs, labels.copy(), scenario_seed=scenario_seed)


def generate_dataset(config: d2d.ScenarioConfig, count: int, seed: int, destination) -> dict:
    """Generate, write to ``destination``, and return {count, mean_optimal_cost}."""
    ds = generate_samples(config, count, seed)
    save_dataset(ds, destination)
    idx = np.arange(ds.order)
    per_sample = ds.costs[np.arange(len(ds))[:, None], idx[None, :], ds.labels].astype(np.float64)
    return {"count": len(ds), "mean_optimal_cost": float(per_sample.sum(axis=1).mean())}


def split_dataset(ds: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Disjoint shuffled split; train size floors, the remainder goes to test."""
    if len(ds) == 0:
        raise ValueError("cannot split an empty dataset")
    if not (0.0 < train_fraction < 1.0):
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    order = np.random.default_rng(seed).permutation(len(ds))
    n_train = int(np.floor(len(ds) * train_fraction))
    return ds.take(order[:n_train]), ds.take(order[n_train:])


def normalize_cost(raw: np.ndarray) -> np.ndarray:
    """Per-matrix min-max scaling to [0, 1]; a constant matrix maps to all 0.5."""
    r = np.asarray(raw)
    if not np.issubdtype(r.dtype, np.floating):
        r = r.astype(np.float64)
    if not np.isfinite(r).all():
        raise ValueError("cost entries must be finite")
    lo = r.min()
    hi = r.max()
    if hi == lo:
        return np.full_like(r, 0.5)
    return (r - lo) / (hi - lo)


def normalize_cost_batch(costs: np.ndarray) -> np.ndarray:
    """Vectorized :func:`normalize_cost` over a (N, n, n) stack (same arithmetic)."""
    c = costs if np.issubdtype(costs.dtype, np.floating) else costs.astype(np.float64)
    if not np.isfinite(c).all():
        raise ValueError("cost entries must be finite")
    lo = c.min(axis=(1, 2), keepdims=True)
    hi = c.max(axis=(1, 2), keepdims=True)
    span = hi - lo
    flat = np.where(span == 0, np.asarray(1, dtype=c.dtype), span)
    out = (c - lo) / flat
    return np.where(span == 0, np.asarray(0.5, dtype=c.dtype), out)


def one_hot_labels(labels: np.ndarray, dtype=np.float32) -> np.ndarray:
    """(N, n) permutations -> (N, n*n) flattened one-hot assignment matrices."""
    count, n = labels.shape
    out = np.zeros((count, n, n), dtype=dtype)
    out[np.arange(count)[:, None], np.arange(n)[None, :], labels] = 1
    return out.reshape(count, n * n)
