"""Resolvable designs built from (k, k-1) single parity-check codes over Z_q.

Points are subfile indices ``1..N`` with ``N = q**(k-1)``.  Row ``i`` of the
codeword matrix induces the parallel class ``P_i``; block ``B_{i,l}`` holds
the columns whose ``i``-th symbol equals ``l``.  Class indices are 1-based,
levels are 0-based, matching the usual ``B_{i,l}`` notation.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from codedmr.errors import ParameterError

MAX_POINTS = 2**24


@dataclass(frozen=True)
class DesignParams:
    q: int
    k: int

    def __post_init__(self) -> None:
        if not isinstance(self.q, (int, np.integer)) or self.q < 2:
            raise ParameterError(f"q must be an integer >= 2, got {self.q!r}")
        if not isinstance(self.k, (int, np.integer)) or self.k < 2:
            raise ParameterError(f"k must be an integer >= 2, got {self.k!r}")
        if self.q ** (self.k - 1) > MAX_POINTS:
            raise ParameterError(
                f"q**(k-1) = {self.q ** (self.k - 1)} exceeds the {MAX_POINTS} point ceiling"
            )

    @property
    def K(self) -> int:
        """Number of servers."""
        return self.k * self.q

    @property
    def N(self) -> int:
        """Number of subfiles (design points)."""
        return self.q ** (self.k - 1)


@dataclass(frozen=True, eq=False)
class CodewordMatrix:
    """The ``k x q**(k-1)`` matrix whose columns are all SPC codewords."""

    params: DesignParams
    entries: np.ndarray

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CodewordMatrix):
            return NotImplemented
        return self.params == other.params and np.array_equal(self.entries, other.entries)

    def __hash__(self) -> int:
        return hash((self.params, self.entries.tobytes()))

    def tolist(self) -> list[list[int]]:
        return self.entries.tolist()


def generate_codeword_matrix(params: DesignParams) -> CodewordMatrix:
    """Enumerate every codeword ``u @ G_SPC`` of the (k, k-1) SPC code mod q.

    Messages run in lexicographic order with the first coordinate most
    significant, so the column index of message ``u`` is its base-q value.
    """
    q, k = params.q, params.k
    cols = np.arange(params.N, dtype=np.int64)
    entries = np.empty((k, params.N), dtype=np.int64)
    for i in range(k - 1):
        entries[i] = (cols // q ** (k - 2 - i)) % q
    entries[k - 1] = entries[: k - 1].sum(axis=0) % q
    entries.setflags(write=False)
    return CodewordMatrix(params, entries)


@dataclass(frozen=True)
class Block:
    class_index: int
    level: int
    points: frozenset[int]

    @property
    def server(self) -> tuple[int, int]:
        return (self.class_index, self.level)

    def __len__(self) -> int:
        return len(self.points)

    def __contains__(self, point: object) -> bool:
        return point in self.points


@dataclass(frozen=True)
class ResolvableDesign:
    params: DesignParams
    classes: tuple[tuple[Block, ...], ...]

    def block(self, class_index: int, level: int) -> Block:
        return self.classes[class_index - 1][level]

    def blocks(self) -> Iterator[Block]:
        """All blocks in (class, level) order, i.e. server ordinal order."""
        for parallel_class in self.classes:
            yield from parallel_class

    def to_dict(self) -> dict:
        return {
            "q": self.params.q,
            "k": self.params.k,
            "K": self.params.K,
            "N": self.params.N,
            "classes": [[sorted(b.points) for b in cls] for cls in self.classes],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "ResolvableDesign":
        params = DesignParams(int(data["q"]), int(data["k"]))
        classes = tuple(
            tuple(Block(i, l, frozenset(pts)) for l, pts in enumerate(blocks))
            for i, blocks in enumerate(data["classes"], start=1)
        )
        return cls(params, classes)


def build_design(T: CodewordMatrix) -> ResolvableDesign:
    params = T.params
    classes = []
    for i in range(params.k):
        row = T.entries[i]
        classes.append(
            tuple(
                Block(i + 1, l, frozenset((np.flatnonzero(row == l) + 1).tolist()))
                for l in range(params.q)
            )
        )
    return ResolvableDesign(params, tuple(classes))


def intersect_blocks(blocks: Sequence[Block]) -> set[int]:
    """Intersect blocks drawn from pairwise distinct parallel classes."""
    if not blocks:
        raise ValueError("need at least one block to intersect")
    seen = set()
    for b in blocks:
        if b.class_index in seen:
            raise ValueError(f"two blocks from parallel class {b.class_index}")
        seen.add(b.class_index)
    result = set(blocks[0].points)
    for b in blocks[1:]:
        result &= b.points
    return result


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(Check(name, bool(passed), detail))

    def __str__(self) -> str:
        return "\n".join(
            f"[{'PASS' if c.passed else 'FAIL'}] {c.name}" + (f": {c.detail}" if c.detail else "")
            for c in self.checks
        )


def validate_design(d: ResolvableDesign) -> ValidationReport:
    """Check block sizes, the partition property and unit (k-1)-intersections."""
    report = ValidationReport()
    q, k, N = d.params.q, d.params.k, d.params.N
    everything = set(range(1, N + 1))

    report.add("class count", len(d.classes) == k, f"{len(d.classes)} classes, expected {k}")
    total = sum(len(c) for c in d.classes)
    report.add("block count", total == k * q, f"{total} blocks, expected {k * q}")

    bad_sizes = [(b.class_index, b.level, len(b)) for b in d.blocks() if len(b) != q ** (k - 2)]
    report.add(
        "block size",
        not bad_sizes,
        f"expected {q ** (k - 2)}" + (f"; offenders {bad_sizes[:5]}" if bad_sizes else ""),
    )

    for i, cls in enumerate(d.classes, start=1):
        union: set[int] = set()
        disjoint = True
        for b in cls:
            if union & b.points:
                disjoint = False
            union |= b.points
        report.add(
            f"class {i} partitions points",
            disjoint and union == everything,
            "" if disjoint else "blocks overlap",
        )

    if len(d.classes) == k:
        bad = []
        for omit in range(k):
            chosen = [cls for idx, cls in enumerate(d.classes) if idx != omit]
            for combo in itertools.product(*chosen):
                n = len(intersect_blocks(combo))
                if n != 1:
                    bad.append(([b.server for b in combo], n))
        report.add(
            "(k-1)-wise intersections are singletons",
            not bad,
            f"{len(bad)} violations" if bad else f"{k * q ** (k - 1)} tuples checked",
        )
    return report


def design_for(q: int, k: int) -> ResolvableDesign:
    """Shorthand: build the SPC design for ``(q, k)``."""
    return build_design(generate_codeword_matrix(DesignParams(q, k)))

