import numpy as np
import pytest

from morigeo.formats import FormatError, read_mgf, read_pgm, write_mgf, write_pgm


def test_pgm_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    grid = rng.integers(0, 65536, size=(13, 7)).astype(np.uint16)
    path = tmp_path / "grid.pgm"
    write_pgm(path, grid)
    assert np.array_equal(read_pgm(path), grid)


def test_pgm_header_layout(tmp_path):
    path = tmp_path / "tiny.pgm"
    write_pgm(path, np.array([[1, 2], [3, 513]], dtype=np.uint16))
    raw = path.read_bytes()
    assert raw.startswith(b"P5\n2 2\n65535\n")
    # big-endian two-byte samples, row major
    assert raw[len(b"P5\n2 2\n65535\n") :] == bytes([0, 1, 0, 2, 0, 3, 2, 1])


def test_pgm_reads_comments_and_8bit(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5 # magic\n# a comment line\n 3 2 # dims\n255\n" + bytes(range(6)))
    grid = read_pgm(path)
    assert grid.shape == (2, 3)
    assert grid.dtype == np.uint16
    assert grid[1, 2] == 5


def test_pgm_malformed_magic(tmp_path):
    path = tmp_path / "bad.pgm"
    path.write_bytes(b"P2\n2 2\n255\n")
    with pytest.raises(FormatError, match="bad.pgm"):
        read_pgm(path)


def test_pgm_truncated_raster(tmp_path):
    path = tmp_path / "short.pgm"
    path.write_bytes(b"P5\n4 4\n65535\n\x00\x01")
    with pytest.raises(FormatError, match="truncated"):
        read_pgm(path)


def test_mgf_round_trip_single_channel(tmp_path):
    rng = np.random.default_rng(2)
    field = rng.normal(size=(9, 5))
    path = tmp_path / "f.mgf"
    write_mgf(path, field)
    back = read_mgf(path)
    assert back.dtype == np.float32
    assert back.shape == (9, 5)
    assert np.array_equal(back, field.astype(np.float32))


def test_mgf_round_trip_multichannel(tmp_path):
    rng = np.random.default_rng(3)
    field = rng.normal(size=(4, 6, 3)).astype(np.float32)
    path = tmp_path / "e.mgf"
    write_mgf(path, field)
    back = read_mgf(path)
    assert back.shape == (4, 6, 3)
    assert np.array_equal(back, field)


def test_mgf_header_bytes(tmp_path):
    path = tmp_path / "h.mgf"
    write_mgf(path, np.zeros((2, 3)))
    raw = path.read_bytes()
    assert raw[:4] == b"MGF1"
    assert raw[4:16] == (2).to_bytes(4, "little") + (3).to_bytes(4, "little") + (1).to_bytes(4, "little")
    assert len(raw) == 16 + 2 * 3 * 4


def test_mgf_bad_magic(tmp_path):
    path = tmp_path / "x.mgf"
    path.write_bytes(b"MGF2" + bytes(12))
    with pytest.raises(FormatError, match="x.mgf"):
        read_mgf(path)


def test_missing_file_is_format_error(tmp_path):
    with pytest.raises(FormatError):
        read_pgm(tmp_path / "absent.pgm")
    with pytest.raises(FormatError):
        read_mgf(tmp_path / "absent.mgf")
