"""TeraSort: 100-byte records range-partitioned on a 10-byte key.

Records are held as an ``(n, 100)`` uint8 array.  Keys compare as raw
unsigned bytes, leftmost byte most significant.
"""

from __future__ import annotations

import bisect
import math
import struct
from dataclasses import dataclass
from os import PathLike
from typing import Sequence

import numpy as np

from codedmr.errors import ParameterError
from codedmr.workloads.base import Workload

RECORD_SIZE = 100
KEY_SIZE = 10
DEFAULT_SAMPLES = 1024

_COUNT = struct.Struct("<I")


def generate_records(n: int, seed: int) -> np.ndarray:
    """Uniformly random keys and values, a pure function of ``(n, seed)``."""
    if n < 0:
        raise ParameterError(f"record count must be >= 0, got {n}")
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=(n, RECORD_SIZE), dtype=np.uint8)


def read_records(path: str | PathLike) -> np.ndarray:
    raw = np.fromfile(path, dtype=np.uint8)
    if raw.size % RECORD_SIZE:
        raise ParameterError(f"{path}: size {raw.size} is not a multiple of {RECORD_SIZE}")
    return raw.reshape(-1, RECORD_SIZE)


def write_records(path: str | PathLike, records: np.ndarray) -> None:
    np.ascontiguousarray(records, dtype=np.uint8).tofile(path)


def sort_records(records: np.ndarray) -> np.ndarray:
    """Sort rows by their full byte string (key first, value breaks ties)."""
    if len(records) == 0:
        return records.reshape(0, RECORD_SIZE)
    rows = np.ascontiguousarray(records)
    order = np.argsort(rows.view(f"V{rows.shape[1]}").ravel(), kind="stable")
    return rows[order]


@dataclass(frozen=True)
class PartitionBoundaries:
    """Strictly increasing split keys ``b_1 < ... < b_{K-1}``.

    Partition ``i`` (1-based) holds keys ``b_{i-1} <= key < b_i``.  A boundary
    may be longer than a key when duplicates forced a synthetic split point.
    """

    keys: tuple[bytes, ...]

    def __post_init__(self) -> None:
        for a, b in zip(self.keys, self.keys[1:]):
            if not a < b:
                raise ParameterError("partition boundaries must be strictly increasing")

    @property
    def num_partitions(self) -> int:
        return len(self.keys) + 1

    def partition_of(self, key: bytes) -> int:
        return bisect.bisect_right(self.keys, bytes(key)) + 1


def _pick_boundaries(samples: Sequence[bytes], parts: int) -> list[bytes]:
    s = len(samples)
    chosen: list[bytes] = []
    last_pos = -1
    for j in range(1, parts):
        pos = max(math.ceil(j * s / parts) - 1, last_pos + 1)
        if chosen:
            while pos < s and samples[pos] <= chosen[-1]:
                pos += 1
        if pos < s:
            chosen.append(samples[pos])
            last_pos = pos
        else:
            # smallest byte string strictly above the previous boundary
            chosen.append(chosen[-1] + b"\x00")
            last_pos = s
    return chosen


def sample_and_partition(
    dataset: np.ndarray, s: int, K: int, seed: int = 0
) -> PartitionBoundaries:
    """Draw ``s`` keys at distinct random positions and pick ``K - 1`` split points.

    The ``j``-th boundary is sorted sample number ``ceil(j * s / K)``; collisions
    advance to the next larger sample.
    """
    if K < 1:
        raise ParameterError(f"partition count must be positive, got {K}")
    if s < K - 1:
        raise ParameterError(f"need s >= K - 1 samples, got s={s}, K={K}")
    n = len(dataset)
    if n == 0:
        raise ParameterError("cannot sample partition boundaries from an empty dataset")
    if K == 1:
        return PartitionBoundaries(())
    rng = np.random.default_rng(seed)
    positions = rng.choice(n, size=min(s, n), replace=False)
    samples = sorted(bytes(dataset[p, :KEY_SIZE]) for p in positions)
    return PartitionBoundaries(tuple(_pick_boundaries(samples, K)))


def _split_key(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rows = np.ascontiguousarray(rows[:, :KEY_SIZE])
    head = rows[:, :8].copy().view(">u8").ravel()
    tail = rows[:, 8:10].copy().view(">u2").ravel()
    return head, tail


class KeyTrie:
    """Two-level 256-way index on the first two key bytes.

    The first byte picks one of 256 children, the second one of its 256
    children; ``lo[a, b]:hi[a, b]`` is the run of boundaries with prefix ``ab``.
    A lookup starts after every boundary with a smaller prefix and scans only
    that run.
    """

    def __init__(self, boundaries: PartitionBoundaries):
        self.boundaries = boundaries
        keys = boundaries.keys
        prefixes = np.array([k[0] * 256 + k[1] for k in keys], dtype=np.int64)
        cells = np.arange(65536)
        self.lo = np.searchsorted(prefixes, cells, side="left").reshape(256, 256)
        self.hi = np.searchsorted(prefixes, cells, side="right").reshape(256, 256)
        self.width = int((self.hi - self.lo).max()) if keys else 0
        padded = np.zeros((len(keys), KEY_SIZE), dtype=np.uint8)
        for i, k in enumerate(keys):
            padded[i] = np.frombuffer(k[:KEY_SIZE], dtype=np.uint8)
        self._head, self._tail = _split_key(padded)
        self._longer = np.array([len(k) > KEY_SIZE for k in keys], dtype=bool)

    def lookup(self, key: bytes) -> int:
        key = bytes(key)
        lo, hi = int(self.lo[key[0], key[1]]), int(self.hi[key[0], key[1]])
        return bisect.bisect_right(self.boundaries.keys, key, lo, hi) + 1

    def lookup_many(self, keys: np.ndarray) -> np.ndarray:
        """Vectorised ``lookup`` over an ``(n, >=10)`` uint8 array of keys."""
        if len(keys) == 0:
            return np.zeros(0, dtype=np.int64)
        lo = self.lo[keys[:, 0], keys[:, 1]]
        hi = self.hi[keys[:, 0], keys[:, 1]]
        result = lo.astype(np.int64)
        head, tail = _split_key(keys)
        for offset in range(self.width):
            idx = lo + offset
            live = idx < hi
            if not live.any():
                break
            i = np.where(live, idx, 0)
            bh, bt, ext = self._head[i], self._tail[i], self._longer[i]
            le = (bh < head) | ((bh == head) & ((bt < tail) | ((bt == tail) & ~ext)))
            result += live & le
        return result + 1


def lookup_partition(trie: KeyTrie, key: bytes) -> int:
    return trie.lookup(key)


def _pack(rows: np.ndarray) -> bytes:
    return _COUNT.pack(len(rows)) + rows.tobytes()


def _unpack(value: bytes) -> np.ndarray:
    (count,) = _COUNT.unpack_from(value, 0)
    body = np.frombuffer(value, dtype=np.uint8, offset=_COUNT.size)
    if body.size != count * RECORD_SIZE:
        raise ParameterError(f"value claims {count} records but carries {body.size} bytes")
    return body.reshape(count, RECORD_SIZE)


class TeraSort(Workload):
    """Range-partitioned sort; function ``j`` sorts the keys of partition ``j``.

    Each intermediate value is a u32 record count followed by the subfile's
    records that fall into that partition.
    """

    name = "terasort"
    record_size = RECORD_SIZE

    def __init__(self, num_partitions: int, samples: int | None = None, seed: int = 0):
        super().__init__(num_partitions)
        self.samples = max(num_partitions - 1, DEFAULT_SAMPLES) if samples is None else samples
        if self.samples < num_partitions - 1:
            raise ParameterError(f"need at least {num_partitions - 1} samples")
        self.seed = seed
        self.boundaries: PartitionBoundaries | None = None
        self.trie: KeyTrie | None = None

    def prepare(self, dataset: np.ndarray) -> None:
        self.boundaries = sample_and_partition(dataset, self.samples, self.num_functions, self.seed)
        self.trie = KeyTrie(self.boundaries)

    def num_records(self, dataset: np.ndarray) -> int:
        return len(dataset)

    def take(self, dataset: np.ndarray, start: int, stop: int) -> np.ndarray:
        return dataset[start:stop]

    def map(self, subfile: np.ndarray) -> list[bytes]:
        if self.trie is None:
            raise ParameterError("TeraSort.prepare must run before map")
        parts = self.trie.lookup_many(subfile)
        order = np.argsort(parts, kind="stable")
        cuts = np.searchsorted(parts[order], np.arange(1, self.num_functions + 2))
        rows = subfile[order]
        return [_pack(rows[cuts[j] : cuts[j + 1]]) for j in range(self.num_functions)]

    def reduce(self, function: int, values: Sequence[bytes]) -> bytes:
        if not values:
            return b""
        rows = np.concatenate([_unpack(v) for v in values])
        return sort_records(rows).tobytes()

    def reference(self, dataset: np.ndarray) -> bytes:
        return sort_records(dataset).tobytes()

    def check_outputs(self, outputs: Sequence[bytes]) -> str | None:
        previous_max = None
        for j, out in enumerate(outputs, start=1):
            if len(out) % RECORD_SIZE:
                return f"partition {j}: output length {len(out)} is not a multiple of {RECORD_SIZE}"
            if not out:
                continue
            rows = np.frombuffer(out, dtype=np.uint8).reshape(-1, RECORD_SIZE)
            head, tail = _split_key(rows)
            ordered = (head[:-1] < head[1:]) | ((head[:-1] == head[1:]) & (tail[:-1] <= tail[1:]))
            if not ordered.all():
                return f"partition {j}: keys out of order"
            if previous_max is not None and not previous_max < bytes(rows[0, :KEY_SIZE]):
                return f"partition {j}: smallest key does not exceed partition {j - 1}'s largest"
            previous_max = bytes(rows[-1, :KEY_SIZE])
        return None
