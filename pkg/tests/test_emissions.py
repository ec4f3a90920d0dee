import json
import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fltop.emissions import (EmissionError, EmissionMatrix, SyntheticSpec,
                             collapse, generate_synthetic, load_emissions,
                             save_emissions, softmax_row)


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return path


class TestSoftmaxRow:
    def test_equal_inputs_are_uniform(self):
        np.testing.assert_allclose(softmax_row([0.0, 0.0]), [0.5, 0.5])

    def test_large_equal_inputs_are_stable(self):
        np.testing.assert_allclose(softmax_row([1000.0, 1000.0]), [0.5, 0.5])

    def test_ln2(self):
        np.testing.assert_allclose(softmax_row([math.log(2), 0.0]), [2 / 3, 1 / 3],
                                   rtol=0, atol=1e-15)

    def test_rejects_empty_and_nonfinite(self):
        with pytest.raises(EmissionError):
            softmax_row([])
        with pytest.raises(EmissionError):
            softmax_row([0.0, math.inf])

    @given(st.lists(st.floats(-50, 50), min_size=1, max_size=40),
           st.floats(-1e3, 1e3))
    def test_shift_invariance_and_ranking(self, row, shift):
        a = softmax_row(row)
        b = softmax_row([x + shift for x in row])
        assert abs(a.sum() - 1) <= 1e-12
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)
        order = np.argsort(row, kind="stable")
        assert np.all(np.diff(a[order]) >= 0)


class TestLoad:
    def test_json_probabilities(self, tmp_path):
        p = write_json(tmp_path / "e.json", {"T": 1, "V": 2, "probs": [[0.5, 0.5]]})
        em = load_emissions(p, "json", "probabilities")
        assert em.num_frames == 1 and em.vocab_size == 2
        np.testing.assert_array_equal(em.probs, [[0.5, 0.5]])

    def test_json_logits(self, tmp_path):
        p = write_json(tmp_path / "e.json", {"T": 1, "V": 2, "probs": [[0.0, 0.0]]})
        np.testing.assert_array_equal(load_emissions(p, "json", "logits").probs, [[0.5, 0.5]])

    def test_row_sum_violation_names_frame(self, tmp_path):
        p = write_json(tmp_path / "e.json", {"T": 1, "V": 2, "probs": [[0.9, 0.2]]})
        with pytest.raises(EmissionError, match="row sum 1.1 .*frame 0"):
            load_emissions(p, "json")

    def test_dimension_mismatch(self, tmp_path):
        p = write_json(tmp_path / "e.json", {"T": 2, "V": 2, "probs": [[0.5, 0.5]]})
        with pytest.raises(EmissionError):
            load_emissions(p)
        p = write_json(tmp_path / "f.json", {"T": 1, "V": 3, "probs": [[0.5, 0.5]]})
        with pytest.raises(EmissionError, match="frame 0"):
            load_emissions(p)

    def test_nonfinite_names_frame(self, tmp_path):
        p = tmp_path / "e.json"
        p.write_text('{"T": 2, "V": 2, "probs": [[0.5, 0.5], [NaN, 1.0]]}')
        with pytest.raises(EmissionError, match="frame 1"):
            load_emissions(p)

    def test_malformed_header(self, tmp_path):
        p = write_json(tmp_path / "e.json", {"V": 2, "probs": []})
        with pytest.raises(EmissionError, match="malformed header"):
            load_emissions(p)
        b = tmp_path / "e.fltp"
        b.write_bytes(b"NOPE" + bytes(10))
        with pytest.raises(EmissionError, match="magic"):
            load_emissions(b)

    def test_binary_truncated_body(self, tmp_path):
        b = tmp_path / "e.fltp"
        b.write_bytes(struct.pack("<4sHII", b"FLTP", 1, 2, 2) + struct.pack("<3f", 0.5, 0.5, 1))
        with pytest.raises(EmissionError, match="dimension mismatch"):
            load_emissions(b)


class TestBinaryFormat:
    def test_golden_bytes(self, tmp_path):
        em = EmissionMatrix([[0.25, 0.75], [1.0, 0.0]])
        p = tmp_path / "g.fltp"
        save_emissions(em, p)
        golden = (b"FLTP" + b"\x01\x00" + b"\x02\x00\x00\x00" + b"\x02\x00\x00\x00"
                  + struct.pack("<4f", 0.25, 0.75, 1.0, 0.0))
        assert p.read_bytes() == golden

    def test_roundtrip_is_bit_exact(self, tmp_path):
        rng = np.random.default_rng(3)
        src = tmp_path / "a.fltp"
        save_emissions(EmissionMatrix(rng.dirichlet(np.ones(7), size=13)), src)
        em = load_emissions(src)
        dst = tmp_path / "b.fltp"
        save_emissions(em, dst)
        assert src.read_bytes() == dst.read_bytes()
        np.testing.assert_array_equal(load_emissions(dst).probs, em.probs)

    def test_empty_matrix(self, tmp_path):
        p = tmp_path / "z.fltp"
        save_emissions(EmissionMatrix.empty(4), p)
        em = load_emissions(p)
        assert em.num_frames == 0 and em.vocab_size == 4


class TestSynthetic:
    def test_deterministic(self):
        a, ra = generate_synthetic(SyntheticSpec(4, 3, 100, 7))
        b, rb = generate_synthetic(SyntheticSpec(4, 3, 100, 7))
        assert a.probs.tobytes() == b.probs.tobytes() and ra == rb

    def test_seed_sensitive(self):
        a, _ = generate_synthetic(SyntheticSpec(4, 3, 100, 7))
        b, _ = generate_synthetic(SyntheticSpec(4, 3, 100, 8))
        assert not np.array_equal(a.probs, b.probs)

    def test_peaked_rows_have_dominant_winner(self):
        em, _ = generate_synthetic(SyntheticSpec(50, 32, 50, 1))
        assert em.probs.max(axis=1).min() > 0.5

    def test_reference_is_collapsed_argmax_path(self):
        em, ref = generate_synthetic(SyntheticSpec(120, 8, 50, 5, word_sep_id=1))
        assert ref == collapse(em.probs.argmax(axis=1), 0)

    def test_peakedness_concentrates_mass(self):
        lo, _ = generate_synthetic(SyntheticSpec(400, 16, 25, 9))
        hi, _ = generate_synthetic(SyntheticSpec(400, 16, 400, 9))
        assert hi.probs.max(axis=1).mean() > lo.probs.max(axis=1).mean()

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 60), st.integers(2, 40), st.floats(0.5, 500),
           st.integers(0, 2**64 - 1))
    def test_invariants_hold(self, T, V, peak, seed):
        em, ref = generate_synthetic(SyntheticSpec(T, V, peak, seed))
        assert em.probs.shape == (T, V)
        assert np.all(np.isfinite(em.probs)) and np.all(em.probs >= 0)
        np.testing.assert_allclose(em.probs.sum(axis=1), 1.0, atol=1e-4)
        assert 0 not in ref

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            SyntheticSpec(3, 3, 0.0, 1)
        with pytest.raises(ValueError):
            SyntheticSpec(3, 1, 1.0, 1)
