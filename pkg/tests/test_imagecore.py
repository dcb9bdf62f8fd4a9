import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from authindex.errors import CorruptStream, MissingFile, UnsupportedFormat
from authindex.imagecore import ImageBuffer, load_image, resize_bilinear, save_image, to_grayscale


def test_pgm_decode_direct_bytes(tmp_path):
    p = tmp_path / "tiny.pgm"
    p.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 128, 255, 64]))
    img = load_image(p)
    assert (img.height, img.width, img.channels) == (2, 2, 1)
    assert img.max_value == 255.0
    assert img.data.ravel().tolist() == [0.0, 128.0, 255.0, 64.0]


def test_pgm_comment_header(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5\n# a comment\n2 1\n255\n" + bytes([10, 20]))
    assert load_image(p).data.ravel().tolist() == [10.0, 20.0]


def test_ppm_roundtrip_exact(tmp_path, rng):
    img = ImageBuffer(rng.integers(0, 256, size=(7, 5, 3)).astype(float))
    path = tmp_path / "x.ppm"
    save_image(img, path)
    again = load_image(path)
    np.testing.assert_array_equal(img.data, again.data)


def test_png_roundtrip_exact(tmp_path, rng):
    img = ImageBuffer(rng.integers(0, 256, size=(9, 11, 3)).astype(float))
    path = tmp_path / "x.png"
    save_image(img, path)
    again = load_image(path)
    np.testing.assert_array_equal(img.data, again.data)


def test_truncated_png_is_corrupt(tmp_path, rng):
    img = ImageBuffer(rng.integers(0, 256, size=(16, 16, 3)).astype(float))
    path = tmp_path / "x.png"
    save_image(img, path)
    raw = path.read_bytes()
    bad = tmp_path / "bad.png"
    bad.write_bytes(raw[: len(raw) // 2])
    with pytest.raises(CorruptStream) as err:
        load_image(bad)
    assert "bad.png" in str(err.value)


def test_truncated_pgm_is_corrupt(tmp_path):
    p = tmp_path / "short.pgm"
    p.write_bytes(b"P5\n4 4\n255\n" + bytes([1, 2, 3]))
    with pytest.raises(CorruptStream):
        load_image(p)


def test_missing_and_unsupported(tmp_path):
    with pytest.raises(MissingFile):
        load_image(tmp_path / "nope.png")
    weird = tmp_path / "x.bin"
    weird.write_bytes(b"GIF89a not really")
    with pytest.raises(UnsupportedFormat):
        load_image(weird)


def test_grayscale_white_and_red():
    white = ImageBuffer(np.full((1, 1, 3), 255.0))
    assert to_grayscale(white).data[0, 0, 0] == pytest.approx(255.0)
    red = ImageBuffer(np.array([[[255.0, 0.0, 0.0]]]))
    assert to_grayscale(red).data[0, 0, 0] == pytest.approx(76.245)


def test_grayscale_identity_on_gray(rng):
    img = ImageBuffer(rng.random((4, 4, 1)) * 255)
    assert to_grayscale(img) is img


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_grayscale_stays_in_range(seed):
    r = np.random.default_rng(seed)
    img = ImageBuffer(r.random((5, 5, 3)) * 255)
    g = to_grayscale(img)
    assert g.data.min() >= 0.0 and g.data.max() <= 255.0


def test_resize_identity(rng):
    img = ImageBuffer(rng.random((6, 7, 3)) * 255)
    out = resize_bilinear(img, 6, 7)
    np.testing.assert_array_equal(out.data, img.data)


def test_resize_midpoint():
    img = ImageBuffer(np.array([[[0.0], [255.0]]]))
    out = resize_bilinear(img, 1, 3)
    assert out.data.ravel().tolist() == [0.0, 127.5, 255.0]


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.floats(0.0, 255.0))
def test_resize_constant_stays_constant(h, w, value):
    img = ImageBuffer(np.full((3, 4, 1), value))
    out = resize_bilinear(img, h, w)
    assert np.max(np.abs(out.data - value)) < 1e-9


def test_buffer_invariants():
    with pytest.raises(ValueError):
        ImageBuffer(np.full((2, 2, 2), 1.0))  # bad channel count
    with pytest.raises(ValueError):
        ImageBuffer(np.full((2, 2, 1), -1.0))
    with pytest.raises(ValueError):
        ImageBuffer(np.full((2, 2, 1), 2.0), max_value=1.0)
    ImageBuffer(np.full((2, 2, 1), 0.5), max_value=1.0)  # normalized range ok
