import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from juggler_mab.reward import NdcgConfig, dcg, dcg_batch, ideal_dcg, ndcg, ndcg_batch

label_lists = st.lists(st.integers(min_value=0, max_value=5), min_size=1, max_size=8)


def ref_dcg(labels, gain="exponential", k=None):
    total = 0.0
    for i, rel in enumerate(labels[:k] if k else labels, start=1):
        g = 2**rel - 1 if gain == "exponential" else rel
        total += g / math.log2(i + 1)
    return total


def test_dcg_worked_example():
    # 7 / log2(2) + 3 / log2(3) + 0
    assert dcg([3, 2, 0]) == pytest.approx(8.892789260714372, abs=1e-12)
    assert dcg([3, 2, 0]) == pytest.approx(7 + 3 / math.log2(3), abs=1e-12)


def test_dcg_trivial_cases():
    assert dcg([0, 0, 0]) == 0.0
    assert dcg([5], NdcgConfig(gain="linear")) == 5.0


def test_ndcg_examples():
    assert ndcg([5, 1, 1, 0]) == 1.0
    assert ndcg([0, 0, 0]) == 0.0
    expected = (1 / math.log2(3) + 3 / math.log2(4)) / (3 + 1 / math.log2(3))
    assert ndcg([0, 1, 2]) == pytest.approx(expected, abs=1e-12)


def test_ndcg_0_1_2_is_dominated_by_descending_permutation():
    values = {perm: ndcg(list(perm)) for perm in itertools.permutations([0, 1, 2])}
    assert max(values, key=values.get) == (2, 1, 0)
    assert values[(2, 1, 0)] == 1.0


def test_cutoff_truncates_both_dcg_and_ideal():
    cfg = NdcgConfig(cutoff=2)
    assert dcg([1, 0, 5], cfg) == pytest.approx(1.0)
    assert ndcg([1, 0, 5], cfg) == pytest.approx(1.0 / (31 + 1 / math.log2(3)))


def test_invalid_config_and_empty_input():
    with pytest.raises(ValueError):
        NdcgConfig(cutoff=0)
    with pytest.raises(ValueError):
        NdcgConfig(gain="cubic")
    with pytest.raises(ValueError):
        dcg([])


@given(label_lists, st.sampled_from(["exponential", "linear"]), st.one_of(st.none(), st.integers(1, 8)))
def test_dcg_matches_reference(labels, gain, k):
    assert dcg(labels, NdcgConfig(cutoff=k, gain=gain)) == pytest.approx(ref_dcg(labels, gain, k), rel=1e-12)


@given(label_lists)
def test_ndcg_bounded(labels):
    assert 0.0 <= ndcg(labels) <= 1.0


@given(st.lists(st.integers(0, 20), min_size=1, max_size=7, unique=True))
def test_ndcg_is_one_iff_sorted_on_distinct_labels(labels):
    is_sorted = all(a >= b for a, b in zip(labels, labels[1:]))
    if max(labels) == 0:
        return
    assert (ndcg(labels) == pytest.approx(1.0, abs=1e-12)) == is_sorted


@given(label_lists, st.data())
def test_swap_higher_label_forward_never_decreases_dcg(labels, data):
    if len(labels) < 2:
        return
    i = data.draw(st.integers(0, len(labels) - 2))
    j = data.draw(st.integers(i + 1, len(labels) - 1))
    if labels[j] <= labels[i]:
        return
    swapped = list(labels)
    swapped[i], swapped[j] = swapped[j], swapped[i]
    assert dcg(swapped) >= dcg(labels)


@given(label_lists, st.randoms())
def test_ideal_dcg_is_permutation_invariant(labels, rnd):
    shuffled = list(labels)
    rnd.shuffle(shuffled)
    assert ideal_dcg(labels) == ideal_dcg(shuffled)


@settings(max_examples=50)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=6))
def test_descending_sort_is_the_exhaustive_maximum(labels):
    scores = [ndcg(list(p)) for p in itertools.permutations(labels)]
    assert ndcg(sorted(labels, reverse=True)) == max(scores)


def test_batch_rows_are_bit_identical_to_scalar_path():
    rng = np.random.default_rng(3)
    labels = rng.integers(0, 6, size=20)
    rows = np.array([rng.permutation(labels) for _ in range(9)])
    batch = ndcg_batch(rows)
    for row, value in zip(rows, batch):
        assert ndcg(row) == value
    assert (dcg_batch(rows) == np.array([dcg(r) for r in rows])).all()
