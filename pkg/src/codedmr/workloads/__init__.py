from codedmr.workloads.balanced import Balanced
from codedmr.workloads.base import Workload, split_counts
from codedmr.workloads.terasort import (
    KeyTrie,
    PartitionBoundaries,
    TeraSort,
    generate_records,
    lookup_partition,
    sample_and_partition,
)
from codedmr.workloads.wordcount import WordCount, tokenize


def wordcount_workload(words):
    return WordCount(words)


__all__ = [
    "Balanced",
    "KeyTrie",
    "PartitionBoundaries",
    "TeraSort",
    "WordCount",
    "Workload",
    "generate_records",
    "lookup_partition",
    "sample_and_partition",
    "split_counts",
    "tokenize",
    "wordcount_workload",
]
