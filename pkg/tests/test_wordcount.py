from collections import Counter

import pytest

from codedmr.errors import ParameterError
from codedmr.workloads import wordcount_workload
from codedmr.workloads.wordcount import EXAMPLE_WORDS, WordCount, random_text, tokenize


def run_locally(wl, text, n):
    subfiles = wl.split(text, n)
    values = [wl.map(sf) for sf in subfiles]
    return [wl.reduce(j + 1, [v[j] for v in values]) for j in range(wl.num_functions)]


def test_four_word_counts():
    text = "And then, if the rain stops and the sun shines, when? and AND.\n" * 3
    wl = wordcount_workload(list(EXAMPLE_WORDS))
    counts = wl.decode(run_locally(wl, text, 4))
    assert counts == {"and": 12, "if": 3, "when": 3, "the": 6}


def test_empty_text():
    wl = WordCount(EXAMPLE_WORDS)
    out = run_locally(wl, "", 4)
    assert wl.decode(out) == dict.fromkeys(EXAMPLE_WORDS, 0)
    assert b"".join(out) == wl.reference("")


@pytest.mark.parametrize("seed", range(50))
def test_split_matches_whole_file(seed):
    text = random_text(400 + 37 * seed, seed)
    words = list(EXAMPLE_WORDS) + ["book"]
    wl = WordCount(words)
    oracle = Counter(w for w in text.lower().replace("\n", " ").split(" ") if w)
    n = 1 + seed % 9
    assert wl.decode(run_locally(wl, text, n)) == {w: oracle[w] for w in words}


def test_tokenize_ignores_punctuation():
    assert tokenize("It's a Dog-eat-dog 2nd world.") == ["it", "s", "a", "dog", "eat", "dog", "nd", "world"]


@pytest.mark.parametrize("words", [[], ["a", "a"], ["two words"], ["x1"]])
def test_bad_words(words):
    with pytest.raises(ParameterError):
        WordCount(words)


def test_random_text_deterministic():
    assert random_text(100, 3) == random_text(100, 3)
    assert random_text(100, 3) != random_text(100, 4)
