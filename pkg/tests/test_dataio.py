import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from smsrank.dataio import (
    Layer,
    PredictorWeights,
    load_accuracies,
    load_distribution,
    load_features,
    load_labels,
    load_logits,
    load_weights,
    predict_logits,
    save_logits,
    save_weights,
)
from smsrank.errors import DimensionMismatch, EmptyFile, NonFiniteValue, ParseError


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLogits:
    def test_csv(self, tmp_path):
        m = load_logits(write(tmp_path, "a.csv", "z0,z1\n1.0,2.0\n"))
        np.testing.assert_array_equal(m.values, [[1.0, 2.0]])
        assert m.sample_ids is None and m.n_samples == 1 and m.n_outputs == 2

    def test_csv_with_ids(self, tmp_path):
        m = load_logits(write(tmp_path, "a.csv", "sample_id,z0,z1\ns0,1,2\ns1,3,4\n"))
        assert m.sample_ids == ("s0", "s1")
        np.testing.assert_array_equal(m.values, [[1, 2], [3, 4]])

    def test_binary(self, tmp_path):
        values = np.arange(6, dtype=float).reshape(2, 3) / 7
        save_logits(tmp_path / "a.bin", values)
        raw = (tmp_path / "a.bin").read_bytes()
        assert raw[:4] == b"SMSL" and struct.unpack("<II", raw[4:12]) == (2, 3)
        assert len(raw) == 12 + 6 * 8
        m = load_logits(tmp_path / "a.bin")
        np.testing.assert_array_equal(m.values, values)

    def test_nan(self, tmp_path):
        with pytest.raises(NonFiniteValue) as info:
            load_logits(write(tmp_path, "a.csv", "z0,z1\n1.0,2.0\n3.0,nan\n"))
        assert (info.value.row, info.value.col) == (1, 1)

    def test_binary_inf(self, tmp_path):
        save_logits(tmp_path / "a.bin", np.array([[1.0, np.inf]]))
        with pytest.raises(NonFiniteValue):
            load_logits(tmp_path / "a.bin")

    def test_bad_header(self, tmp_path):
        with pytest.raises(ParseError):
            load_logits(write(tmp_path, "a.csv", "a,b\n1,2\n"))
        with pytest.raises(ParseError):
            load_logits(write(tmp_path, "b.csv", "z1,z0\n1,2\n"))

    def test_ragged(self, tmp_path):
        with pytest.raises(ParseError, match=":3:"):
            load_logits(write(tmp_path, "a.csv", "z0,z1\n1,2\n3\n"))

    def test_not_a_number(self, tmp_path):
        with pytest.raises(ParseError):
            load_logits(write(tmp_path, "a.csv", "z0,z1\n1,abc\n"))

    def test_empty(self, tmp_path):
        with pytest.raises(EmptyFile):
            load_logits(write(tmp_path, "a.csv", ""))

    def test_bad_magic(self, tmp_path):
        (tmp_path / "a.bin").write_bytes(b"XXXX" + struct.pack("<II", 1, 1) + b"\0" * 8)
        with pytest.raises(ParseError, match="offset 0"):
            load_logits(tmp_path / "a.bin")

    def test_truncated(self, tmp_path):
        (tmp_path / "a.bin").write_bytes(b"SMSL" + struct.pack("<II", 2, 2) + b"\0" * 8)
        with pytest.raises(ParseError):
            load_logits(tmp_path / "a.bin")

    @settings(max_examples=50)
    @given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5)),
                  elements=st.floats(allow_nan=False, allow_infinity=False)))
    def test_round_trip(self, tmp_path_factory, values):
        d = tmp_path_factory.mktemp("rt")
        save_logits(d / "a.csv", values)
        save_logits(d / "a.bin", values)
        from_csv, from_bin = load_logits(d / "a.csv").values, load_logits(d / "a.bin").values
        np.testing.assert_array_equal(from_csv, values)
        np.testing.assert_array_equal(from_bin, values)
        assert np.abs(from_csv - from_bin).max() <= 1e-12


class TestPredict:
    def test_identity(self):
        w = PredictorWeights((Layer(np.eye(2), np.zeros(2)),))
        np.testing.assert_array_equal(predict_logits(w, [[3, 4]]).values, [[3, 4]])

    def test_affine(self):
        w = PredictorWeights((Layer(np.array([[1.0, 1.0]]), np.array([0.5])),))
        np.testing.assert_array_equal(predict_logits(w, [[2, 3]]).values, [[5.5]])

    def test_rectifier(self):
        w = PredictorWeights((Layer(np.eye(2), np.zeros(2), "relu"), Layer(np.eye(2), np.zeros(2))))
        np.testing.assert_array_equal(predict_logits(w, [[-1, 2]]).values, [[0, 2]])

    def test_mismatch(self):
        w = PredictorWeights((Layer(np.eye(2), np.zeros(2)),))
        with pytest.raises(DimensionMismatch):
            predict_logits(w, [[1, 2, 3]])

    def test_chain_check(self):
        with pytest.raises(DimensionMismatch):
            PredictorWeights((Layer(np.eye(2), np.zeros(2)), Layer(np.ones((2, 3)), np.zeros(2))))

    def test_pure(self):
        rng = np.random.default_rng(0)
        w = PredictorWeights((Layer(rng.normal(size=(8, 4)), rng.normal(size=8), "relu"),
                              Layer(rng.normal(size=(3, 8)), rng.normal(size=3))))
        x = rng.normal(size=(20, 4))
        a, b = predict_logits(w, x).values, predict_logits(w, x).values
        assert a.tobytes() == b.tobytes()
        # row-wise: predicting a subset gives the same rows
        np.testing.assert_array_equal(predict_logits(w, x[5:9]).values, a[5:9])

    def test_weights_file(self, tmp_path):
        doc = {"layers": [{"W": [[1, 0], [0, 1]], "b": [0, 0], "activation": "relu"},
                          {"W": [[1, 1]], "b": [0.5], "activation": "none"}]}
        p = write(tmp_path, "w.json", json.dumps(doc))
        w = load_weights(p)
        assert w.in_dim == 2 and w.out_dim == 1
        np.testing.assert_array_equal(predict_logits(w, [[-1, 2]]).values, [[2.5]])
        save_weights(tmp_path / "w2.json", w)
        assert json.loads((tmp_path / "w2.json").read_text())["layers"][0]["activation"] == "relu"
        np.testing.assert_array_equal(load_weights(tmp_path / "w2.json").layers[1].W, [[1, 1]])

    @pytest.mark.parametrize("doc", [
        "{",
        '{"layers": [{"W": [[1]], "b": [0, 1]}]}',
        '{"layers": [{"W": [[1]], "b": [0], "activation": "tanh"}]}',
        '{"nope": []}',
        '{"layers": []}',
    ])
    def test_bad_weights(self, tmp_path, doc):
        with pytest.raises(ParseError):
            load_weights(write(tmp_path, "w.json", doc))


class TestLabels:
    def test_basic(self, tmp_path):
        lab = load_labels(write(tmp_path, "l.csv", "sample_id,label\ns0,1\ns1,0\n"))
        assert lab.labels.tolist() == [1, 0] and lab.sample_ids == ("s0", "s1")

    def test_regression(self, tmp_path):
        lab = load_labels(write(tmp_path, "l.csv", "sample_id,label\ns0,1.5\ns1,-2\n"), "regression")
        assert lab.labels.tolist() == [1.5, -2.0] and lab.task == "regression"

    def test_missing_header(self, tmp_path):
        with pytest.raises(ParseError, match="label"):
            load_labels(write(tmp_path, "l.csv", "sample_id,target\ns0,1\n"))

    def test_negative_or_float_class(self, tmp_path):
        with pytest.raises(ParseError):
            load_labels(write(tmp_path, "l.csv", "sample_id,label\ns0,-1\n"))
        with pytest.raises(ParseError):
            load_labels(write(tmp_path, "m.csv", "sample_id,label\ns0,1.5\n"))

    def test_empty(self, tmp_path):
        with pytest.raises(EmptyFile):
            load_labels(write(tmp_path, "l.csv", "sample_id,label\n"))
        with pytest.raises(EmptyFile):
            load_labels(write(tmp_path, "m.csv", ""))


def test_accuracies(tmp_path):
    acc = load_accuracies(write(tmp_path, "a.csv", "model_id,accuracy\nm1,0.9\nm2,0.5\n"))
    assert acc == {"m1": 0.9, "m2": 0.5} and list(acc) == ["m1", "m2"]
    with pytest.raises(ParseError, match="accuracy"):
        load_accuracies(write(tmp_path, "b.csv", "model_id,acc\nm1,0.9\n"))


def test_features(tmp_path):
    x = load_features(write(tmp_path, "f.csv", "sample_id,a,b\ns0,1,2\ns1,3,4\n"))
    np.testing.assert_array_equal(x, [[1, 2], [3, 4]])


def test_distribution(tmp_path):
    np.testing.assert_array_equal(load_distribution(write(tmp_path, "p.csv", "p\n0.25\n0.75\n")), [0.25, 0.75])
    with pytest.raises(ParseError):
        load_distribution(write(tmp_path, "q.csv", "q\n1\n"))
