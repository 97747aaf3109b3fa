"""The map/reduce decomposition every workload provides to the engine."""

from __future__ import annotations

import abc
from typing import Any, Sequence


def split_counts(n: int, parts: int) -> list[int]:
    """Near-equal chunk sizes; the first ``n % parts`` chunks get one extra record."""
    base, extra = divmod(n, parts)
    return [base + (i < extra) for i in range(parts)]


class Workload(abc.ABC):
    """A job expressed as ``Q`` map functions per subfile and ``Q`` reducers.

    Intermediate values are ``bytes`` because the coded shuffle XORs them.
    ``reduce`` must not depend on the order of ``values``.
    """

    name = "workload"
    #: Granularity used when reporting where two outputs diverge.
    record_size = 1

    def __init__(self, num_functions: int):
        self.num_functions = num_functions

    def prepare(self, dataset: Any) -> None:
        """Master-side setup done during CodeGen (e.g. partition sampling)."""

    @abc.abstractmethod
    def num_records(self, dataset: Any) -> int: ...

    def subfile_records(self, subfile: Any) -> int:
        return len(subfile)

    @abc.abstractmethod
    def take(self, dataset: Any, start: int, stop: int) -> Any:
        """Records ``start:stop`` of ``dataset`` as a subfile."""

    def split(self, dataset: Any, n: int) -> list[Any]:
        subfiles, start = [], 0
        for count in split_counts(self.num_records(dataset), n):
            subfiles.append(self.take(dataset, start, start + count))
            start += count
        return subfiles

    @abc.abstractmethod
    def map(self, subfile: Any) -> list[bytes]:
        """Return the ``Q`` intermediate values of one subfile."""

    @abc.abstractmethod
    def reduce(self, function: int, values: Sequence[bytes]) -> bytes:
        """Combine every subfile's value for the 1-based ``function``."""

    @abc.abstractmethod
    def reference(self, dataset: Any) -> bytes:
        """Single-node ground truth, equal to the reducer outputs concatenated in order."""

    def check_outputs(self, outputs: Sequence[bytes]) -> str | None:
        """Workload-specific structural check; return a failure message or None."""
        return None
