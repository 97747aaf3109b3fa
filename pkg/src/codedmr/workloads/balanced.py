"""A workload whose intermediate values all have exactly the same size.

Record ``i`` starts with ``i`` as a little-endian u64 and belongs to function
``i mod Q + 1``.  When every subfile holds a multiple of ``Q`` consecutive
records, each value carries exactly ``records_per_subfile / Q`` records, which
makes measured loads match the closed-form ones bit for bit.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from codedmr.errors import ParameterError
from codedmr.workloads.base import Workload


def make_dataset(n: int, record_size: int = 16, seed: int = 0) -> np.ndarray:
    if record_size < 8:
        raise ParameterError("records need at least 8 bytes for their index")
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, 256, size=(n, record_size), dtype=np.uint8)
    rows[:, :8] = np.arange(n, dtype="<u8").view(np.uint8).reshape(n, 8)
    return rows


def _sorted(rows: np.ndarray) -> np.ndarray:
    if len(rows) == 0:
        return rows
    rows = np.ascontiguousarray(rows)
    return rows[np.argsort(rows.view(f"V{rows.shape[1]}").ravel(), kind="stable")]


class Balanced(Workload):
    name = "balanced"

    def __init__(self, num_functions: int, record_size: int = 16):
        super().__init__(num_functions)
        self.record_size = record_size

    def _functions(self, rows: np.ndarray) -> np.ndarray:
        index = np.ascontiguousarray(rows[:, :8]).view("<u8").ravel()
        return (index % self.num_functions).astype(np.int64) + 1

    def num_records(self, dataset: np.ndarray) -> int:
        return len(dataset)

    def take(self, dataset: np.ndarray, start: int, stop: int) -> np.ndarray:
        return dataset[start:stop]

    def map(self, subfile: np.ndarray) -> list[bytes]:
        f = self._functions(subfile)
        return [subfile[f == j].tobytes() for j in range(1, self.num_functions + 1)]

    def reduce(self, function: int, values: Sequence[bytes]) -> bytes:
        body = b"".join(values)
        rows = np.frombuffer(body, dtype=np.uint8).reshape(-1, self.record_size)
        return _sorted(rows).tobytes()

    def reference(self, dataset: np.ndarray) -> bytes:
        f = self._functions(dataset)
        return b"".join(
            _sorted(dataset[f == j]).tobytes() for j in range(1, self.num_functions + 1)
        )
