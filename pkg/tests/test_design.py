import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from codedmr.design import (
    Block,
    DesignParams,
    ResolvableDesign,
    build_design,
    design_for,
    generate_codeword_matrix,
    intersect_blocks,
    validate_design,
)
from codedmr.errors import ParameterError

SMALL = list(itertools.product([2, 3, 4], [2, 3, 4]))


def brute_force_codewords(q, k):
    """Columns in base-q message order, parity computed independently."""
    cols = []
    for u in itertools.product(range(q), repeat=k - 1):
        cols.append(list(u) + [sum(u) % q])
    return [list(row) for row in zip(*cols)]


def test_q2_k3_matrix():
    T = generate_codeword_matrix(DesignParams(2, 3))
    assert T.tolist() == [[0, 0, 1, 1], [0, 1, 0, 1], [0, 1, 1, 0]]


def test_q2_k2_matrix():
    assert generate_codeword_matrix(DesignParams(2, 2)).tolist() == [[0, 1], [0, 1]]


def test_q3_k2_matrix():
    assert generate_codeword_matrix(DesignParams(3, 2)).tolist() == brute_force_codewords(3, 2)
    assert brute_force_codewords(3, 2) == [[0, 1, 2], [0, 1, 2]]


@pytest.mark.parametrize("q,k", SMALL + [(5, 3), (6, 2), (2, 6)])
def test_matrix_matches_enumeration(q, k):
    T = generate_codeword_matrix(DesignParams(q, k))
    assert T.entries.shape == (k, q ** (k - 1))
    assert T.tolist() == brute_force_codewords(q, k)


def test_matrix_is_deterministic():
    p = DesignParams(3, 4)
    assert generate_codeword_matrix(p) == generate_codeword_matrix(p)


def test_derived_sizes():
    p = DesignParams(4, 4)
    assert (p.K, p.N) == (16, 64)


@pytest.mark.parametrize("q,k", [(1, 3), (2, 1), (0, 0), (2.5, 3)])
def test_invalid_params(q, k):
    with pytest.raises(ParameterError):
        DesignParams(q, k)


def test_point_ceiling():
    DesignParams(2, 25)
    with pytest.raises(ParameterError, match="ceiling"):
        DesignParams(2, 26)


def classes_as_sets(d):
    return [[set(b.points) for b in cls] for cls in d.classes]


def test_q2_k3_classes(example_design):
    assert classes_as_sets(example_design) == [
        [{1, 2}, {3, 4}],
        [{1, 3}, {2, 4}],
        [{1, 4}, {2, 3}],
    ]


def test_q2_k2_singletons():
    assert classes_as_sets(design_for(2, 2)) == [[{1}, {2}], [{1}, {2}]]


def test_q4_k4_partition_brute_force():
    d = design_for(4, 4)
    assert len(d.classes) == 4
    for cls in d.classes:
        assert len(cls) == 4
        seen = []
        for b in cls:
            assert len(b.points) == 16
            seen.extend(b.points)
        assert sorted(seen) == list(range(1, 65))


def test_blocks_follow_matrix_rows():
    T = generate_codeword_matrix(DesignParams(3, 3))
    d = build_design(T)
    for b in d.blocks():
        expected = {j + 1 for j in range(T.entries.shape[1]) if T.entries[b.class_index - 1, j] == b.level}
        assert set(b.points) == expected


def test_intersect_pair(example_design):
    assert intersect_blocks([example_design.block(1, 0), example_design.block(2, 0)]) == {1}


def test_intersect_single(example_design):
    assert intersect_blocks([example_design.block(1, 0)]) == {1, 2}


def test_intersect_same_class_rejected(example_design):
    with pytest.raises(ValueError):
        intersect_blocks([example_design.block(1, 0), example_design.block(1, 1)])


def test_unit_intersections_exhaustive_q3_k3():
    d = design_for(3, 3)
    count = 0
    for omit in range(3):
        classes = [c for i, c in enumerate(d.classes) if i != omit]
        for combo in itertools.product(*classes):
            assert len(intersect_blocks(combo)) == 1
            count += 1
    assert count == 3 * 3**2


@pytest.mark.parametrize("q,k", SMALL)
def test_validate_sweep(q, k):
    report = validate_design(design_for(q, k))
    assert report.passed, str(report)


def test_validate_example(example_design):
    report = validate_design(example_design)
    assert report.passed
    assert {c.name for c in report.checks} >= {"block size", "class 1 partitions points"}


def test_validate_detects_moved_point(example_design):
    cls = example_design.classes[0]
    moved = (
        Block(1, 0, frozenset({1})),
        Block(1, 1, frozenset({2, 3, 4})),
    )
    broken = ResolvableDesign(example_design.params, (moved,) + example_design.classes[1:])
    report = validate_design(broken)
    assert not report.passed
    names = {c.name for c in report.failed()}
    assert "block size" in names
    assert cls != moved


def test_validate_detects_overlap(example_design):
    overlapping = (Block(1, 0, frozenset({1, 2})), Block(1, 1, frozenset({2, 4})))
    broken = ResolvableDesign(example_design.params, (overlapping,) + example_design.classes[1:])
    assert "class 1 partitions points" in {c.name for c in validate_design(broken).failed()}


def test_json_dump_roundtrip(example_design):
    doc = json.loads(example_design.to_json())
    assert doc == {
        "q": 2,
        "k": 3,
        "K": 6,
        "N": 4,
        "classes": [[[1, 2], [3, 4]], [[1, 3], [2, 4]], [[1, 4], [2, 3]]],
    }
    assert ResolvableDesign.from_dict(doc) == example_design


@given(st.integers(2, 5), st.integers(2, 5))
def test_block_sizes_property(q, k):
    d = design_for(q, k)
    sizes = {len(b) for b in d.blocks()}
    assert sizes == {q ** (k - 2)}
    assert sum(1 for _ in d.blocks()) == k * q


def test_matrix_is_read_only():
    T = generate_codeword_matrix(DesignParams(2, 3))
    with pytest.raises(ValueError):
        T.entries[0, 0] = 1
    assert isinstance(T.entries, np.ndarray)
