import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ensc import io as eio
from ensc.errors import FormatError

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=finite))
@settings(max_examples=60, deadline=None)
def test_binary_roundtrip_bit_exact(m):
    back = eio.matrix_from_bytes(eio.matrix_to_bytes(m))
    assert back.shape == m.shape and back.flags.f_contiguous
    np.testing.assert_array_equal(back.view(np.uint64), np.asarray(m).view(np.uint64))


@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5)), elements=finite))
@settings(max_examples=60, deadline=None)
def test_csv_roundtrip_bit_exact(tmp_path_factory, m):
    path = tmp_path_factory.mktemp("csv") / "m.csv"
    eio.write_matrix_csv(path, m)
    np.testing.assert_array_equal(eio.read_matrix(path), m)


def test_binary_layout_is_column_major():
    m = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    raw = eio.matrix_to_bytes(m)
    assert raw[:8] == b"ENSCMAT1"
    assert int.from_bytes(raw[8:12], "little") == 2
    assert int.from_bytes(raw[12:16], "little") == 3
    np.testing.assert_array_equal(np.frombuffer(raw[16:], "<f8"), [1, 4, 2, 5, 3, 6])


def test_bad_binary_files():
    good = eio.matrix_to_bytes(np.ones((2, 2)))
    with pytest.raises(FormatError):
        eio.matrix_from_bytes(b"NOTMAGIC" + good[8:])
    with pytest.raises(FormatError):
        eio.matrix_from_bytes(good[:-1])
    with pytest.raises(FormatError):
        eio.matrix_from_bytes(good[:5])
    with pytest.raises(FormatError):
        eio.matrix_to_bytes(np.ones(3))


def test_read_matrix_sniffs_binary(tmp_path):
    m = np.arange(6.0).reshape(3, 2)
    eio.write_matrix_binary(tmp_path / "m.bin", m)
    np.testing.assert_array_equal(eio.read_matrix(tmp_path / "m.bin"), m)


def test_csv_header_and_errors(tmp_path):
    p = tmp_path / "h.csv"
    eio.write_matrix_csv(p, np.eye(2), header=["a", "b"])
    text = p.read_text()
    assert text.startswith("a,b\n") and "\r" not in text
    np.testing.assert_array_equal(eio.read_matrix_csv(p), np.eye(2))
    p.write_text("1,2\n3\n")
    with pytest.raises(FormatError):
        eio.read_matrix_csv(p)
    p.write_text("x,y\n")
    with pytest.raises(FormatError):
        eio.read_matrix_csv(p)


def test_read_vector(tmp_path):
    p = tmp_path / "v.csv"
    eio.write_matrix_csv(p, np.array([[1.0], [2.0], [3.0]]), header=["c"])
    np.testing.assert_array_equal(eio.read_vector(p), [1.0, 2.0, 3.0])
    eio.write_matrix_csv(p, np.array([[1.0, 2.0, 3.0]]))
    np.testing.assert_array_equal(eio.read_vector(p), [1.0, 2.0, 3.0])
    eio.write_matrix_csv(p, np.eye(2))
    with pytest.raises(FormatError):
        eio.read_vector(p)


def test_labels_roundtrip(tmp_path):
    p = tmp_path / "labels.csv"
    eio.write_labels(p, np.array([2, 0, 1, 1]))
    assert p.read_bytes() == b"2\n0\n1\n1\n"
    np.testing.assert_array_equal(eio.read_labels(p), [2, 0, 1, 1])
    p.write_text("label\n3\n4\n")
    np.testing.assert_array_equal(eio.read_labels(p), [3, 4])


def test_atomic_write_leaves_no_temp_files(tmp_path):
    target = tmp_path / "sub" / "out.txt"
    eio.atomic_write(target, "first\n")
    eio.atomic_write(target, "second\n")
    assert target.read_text() == "second\n"
    assert os.listdir(target.parent) == ["out.txt"]

    class Boom:
        pass
    with pytest.raises(TypeError):
        eio.atomic_write(target, Boom())
    assert target.read_text() == "second\n"
    assert os.listdir(target.parent) == ["out.txt"]


def test_manifest_and_hash(tmp_path):
    cfg = {"b": 1, "a": np.float64(2.0)}
    eio.write_manifest(tmp_path, cfg, 7, "solve")
    import json
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["seed"] == 7 and man["command"] == "solve"
    assert man["config_sha256"] == eio.config_hash({"a": 2.0, "b": 1})
    assert "version" in man
