"""Counting a fixed set of words across the chapters of a text."""

from __future__ import annotations

import re
import struct
from collections import Counter
from typing import Sequence

import numpy as np

from codedmr.errors import ParameterError
from codedmr.workloads.base import Workload, split_counts

_WORD = re.compile(r"[a-z]+")
_COUNT = struct.Struct("<Q")


def tokenize(text: str) -> list[str]:
    return _WORD.findall(text.lower())


class WordCount(Workload):
    """Function ``j`` counts occurrences of ``words[j - 1]``.

    The map step emits one little-endian u64 per word, and reduce sums them.
    Records are tokens, so subfiles are runs of consecutive words.
    """

    name = "wordcount"
    record_size = _COUNT.size

    def __init__(self, words: Sequence[str]):
        words = [w.lower() for w in words]
        if not words:
            raise ParameterError("word count needs at least one target word")
        if len(set(words)) != len(words):
            raise ParameterError("target words must be distinct")
        bad = [w for w in words if not _WORD.fullmatch(w)]
        if bad:
            raise ParameterError(f"target words must be alphabetic: {bad}")
        super().__init__(len(words))
        self.words = words

    def num_records(self, dataset: str) -> int:
        return len(tokenize(dataset))

    def take(self, dataset: str, start: int, stop: int) -> list[str]:
        return tokenize(dataset)[start:stop]

    def split(self, dataset: str, n: int) -> list[list[str]]:
        tokens = tokenize(dataset)
        subfiles, start = [], 0
        for count in split_counts(len(tokens), n):
            subfiles.append(tokens[start : start + count])
            start += count
        return subfiles

    def map(self, subfile: Sequence[str]) -> list[bytes]:
        counts = Counter(subfile)
        return [_COUNT.pack(counts[w]) for w in self.words]

    def reduce(self, function: int, values: Sequence[bytes]) -> bytes:
        return _COUNT.pack(sum(_COUNT.unpack(v)[0] for v in values))

    def reference(self, dataset: str) -> bytes:
        counts = Counter(tokenize(dataset))
        return b"".join(_COUNT.pack(counts[w]) for w in self.words)

    def decode(self, outputs: Sequence[bytes]) -> dict[str, int]:
        return {w: _COUNT.unpack(o)[0] for w, o in zip(self.words, outputs)}


EXAMPLE_WORDS = ("and", "if", "when", "the")
_FILLER = ("book", "chapter", "server", "map", "reduce", "data", "code", "file")


def random_text(n_words: int, seed: int, vocabulary: Sequence[str] = EXAMPLE_WORDS + _FILLER) -> str:
    """Seeded filler text drawn uniformly from ``vocabulary``, wrapped at 12 words per line."""
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, len(vocabulary), size=n_words)
    words = [vocabulary[i] for i in picks]
    lines = [" ".join(words[i : i + 12]) for i in range(0, len(words), 12)]
    return "\n".join(lines)
