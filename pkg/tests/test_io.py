import numpy as np
import pytest

from bhtsne import InputMatrix, load_matrix, save_matrix
from bhtsne.io import load_labels, sniff_format


def test_csv_load_counts(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1,2\n3,4\n5,6\n")
    m = load_matrix(p, format="csv")
    assert m.n_points == 3
    assert m.n_dims == 2
    np.testing.assert_array_equal(m.data, [[1, 2], [3, 4], [5, 6]])


def test_csv_ragged_row_names_row(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,2\n3\n5,6\n")
    with pytest.raises(ValueError, match="row 2"):
        load_matrix(p, format="csv")


def test_csv_non_numeric_names_row(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,2\n3,x\n")
    with pytest.raises(ValueError, match="row 2"):
        load_matrix(p, format="csv")


def test_csv_header_skip(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("a,b\n1,2\n3,4\n")
    m = load_matrix(p, format="csv", has_header=True)
    assert m.n_points == 2


def test_non_finite_rejected(tmp_path):
    p = tmp_path / "inf.csv"
    p.write_text("1,2\n3,inf\n")
    with pytest.raises(ValueError, match="row 1, column 1"):
        load_matrix(p, format="csv")


@pytest.mark.parametrize("dtype", [np.float64, np.float32])
def test_binary_roundtrip_bitwise(tmp_path, rng, dtype):
    m = rng.standard_normal((10, 5)).astype(dtype)
    p = tmp_path / "m.bin"
    save_matrix(m, p, format="bin")
    back = load_matrix(p, format="bin",
                       precision="f32" if dtype == np.float32 else "f64")
    assert back.data.dtype == dtype
    np.testing.assert_array_equal(
        back.data.view(np.uint8), m.view(np.uint8))


def test_binary_header_layout(tmp_path):
    m = np.arange(6, dtype=np.float64).reshape(3, 2)
    p = tmp_path / "m.bin"
    save_matrix(m, p, format="bin")
    raw = p.read_bytes()
    assert raw[:4] == b"BHTM"
    assert raw[4] == 0  # f64 tag
    assert int.from_bytes(raw[5:13], "little") == 3
    assert int.from_bytes(raw[13:21], "little") == 2
    assert len(raw) == 21 + 6 * 8


def test_csv_roundtrip_value_equal(tmp_path, rng):
    m = rng.standard_normal((7, 3))
    p = tmp_path / "m.csv"
    save_matrix(m, p, format="csv")
    back = load_matrix(p, format="csv")
    np.testing.assert_array_equal(back.data, m)  # repr() round-trips f64


def test_save_rejects_single_row(tmp_path):
    with pytest.raises(ValueError, match="at least 2 rows"):
        save_matrix(np.ones((1, 3)), tmp_path / "x.bin", format="bin")


def test_csv_shape_of_output(tmp_path):
    save_matrix(np.eye(2), tmp_path / "m.csv", format="csv")
    lines = (tmp_path / "m.csv").read_text().strip().split("\n")
    assert len(lines) == 2
    assert all(len(ln.split(",")) == 2 for ln in lines)


def test_precision_conversion(tmp_path, rng):
    m = rng.standard_normal((4, 4))
    p = tmp_path / "m.bin"
    save_matrix(m, p, format="bin")
    as32 = load_matrix(p, precision="f32")
    assert as32.data.dtype == np.float32
    np.testing.assert_allclose(as32.data, m, rtol=1e-6)


def test_sniff_format(tmp_path, rng):
    pb = tmp_path / "m.bin"
    pc = tmp_path / "m.csv"
    save_matrix(rng.standard_normal((3, 2)), pb, format="bin")
    save_matrix(rng.standard_normal((3, 2)), pc, format="csv")
    assert sniff_format(pb) == "bin"
    assert sniff_format(pc) == "csv"


def test_invalid_matrix_shapes():
    with pytest.raises(ValueError, match="at least 2 rows"):
        InputMatrix(np.ones((1, 2)))
    with pytest.raises(ValueError):
        InputMatrix(np.ones((3, 0)))


def test_labels(tmp_path):
    p = tmp_path / "labels.csv"
    p.write_text("0\n1\n2\n")
    np.testing.assert_array_equal(load_labels(p), [0, 1, 2])
