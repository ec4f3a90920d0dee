import itertools
import math

import numpy as np
import pytest
from conftest import random_rows
from hypothesis import given, settings, strategies as st

from fltop.emissions import EmissionMatrix
from fltop.oracle import (InstanceTooLarge, alignment_posterior, brute_force_best,
                          labeling_posteriors, raw_path_posteriors)

T2 = EmissionMatrix([[0.1, 0.8, 0.1], [0.2, 0.7, 0.1]])


def test_t2_posterior():
    # paths aa, blank-a, a-blank: 0.8*0.7 + 0.1*0.7 + 0.8*0.2
    assert alignment_posterior(T2, [1], 0) == pytest.approx(0.79, abs=1e-15)


def test_repeat_needs_separating_blank():
    assert alignment_posterior(T2, [1, 1], 0) == 0.0


def test_empty_labeling_is_all_blank():
    assert alignment_posterior(T2, [], 0) == pytest.approx(0.1 * 0.2, abs=1e-17)


def test_brute_force_t2():
    best = brute_force_best(T2, 0)
    assert best.labeling == (1,) and best.posterior == pytest.approx(0.79, abs=1e-15)


def test_brute_force_tie_prefers_shorter():
    best = brute_force_best(EmissionMatrix([[0.5, 0.5]]), 0)
    assert best.labeling == () and best.posterior == 0.5


def test_brute_force_all_blank():
    em = EmissionMatrix([[1.0, 0.0, 0.0]] * 3)
    best = brute_force_best(em, 0)
    assert best.labeling == () and best.posterior == 1.0


def test_size_guard():
    em = EmissionMatrix(np.full((12, 10), 0.1))
    with pytest.raises(InstanceTooLarge):
        alignment_posterior(em, [1], 0)
    with pytest.raises(InstanceTooLarge):
        raw_path_posteriors(em, 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_three_oracles_agree(T, V, seed):
    em = EmissionMatrix(random_rows(np.random.default_rng(seed), T, V))
    raw = raw_path_posteriors(em, 0)
    rec = labeling_posteriors(em, 0)
    assert raw.keys() == rec.keys()
    for lab, p in raw.items():
        assert abs(rec[lab] - p) <= 1e-12
        assert abs(alignment_posterior(em, lab, 0) - p) <= 1e-12
    assert math.fsum(raw.values()) == pytest.approx(1.0, abs=1e-9)


def test_unreachable_labelings_score_zero():
    em = EmissionMatrix(random_rows(np.random.default_rng(0), 3, 3))
    reach = labeling_posteriors(em, 0)
    for L in range(4):
        for lab in itertools.product([1, 2], repeat=L):
            if lab not in reach:
                assert alignment_posterior(em, lab, 0) == 0.0
