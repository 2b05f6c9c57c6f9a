import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from vehclass.imgio import (
    GrayImage,
    Mask,
    PnmError,
    full_mask,
    load_image_and_mask,
    load_mask,
    load_pnm,
    mask_path_for,
    rgb_to_gray,
    save_pgm,
    to_p5_bytes,
)


def write(tmp_path, name, data: bytes):
    p = tmp_path / name
    p.write_bytes(data)
    return p


def test_p5_identity(tmp_path):
    p = write(tmp_path, "a.pgm", b"P5\n2 2\n255\n" + bytes([0, 255, 128, 64]))
    img = load_pnm(p)
    assert (img.width, img.height) == (2, 2)
    assert img.data.ravel().tolist() == [0, 255, 128, 64]


def test_p6_white_and_red(tmp_path):
    white = load_pnm(write(tmp_path, "w.ppm", b"P6\n1 1\n255\n" + bytes([255, 255, 255])))
    red = load_pnm(write(tmp_path, "r.ppm", b"P6\n1 1\n255\n" + bytes([255, 0, 0])))
    assert white.data.tolist() == [[255]]
    # round(0.299 * 255) = round(76.245)
    assert red.data.tolist() == [[76]]


def test_ascii_formats_with_comments(tmp_path):
    p2 = write(tmp_path, "a.pgm", b"P2\n# a comment\n3 1 # trailing\n255\n0 7\n255\n")
    assert load_pnm(p2).data.tolist() == [[0, 7, 255]]
    p3 = write(tmp_path, "a.ppm", b"P3 2 1 255\n10 20 30  200 200 200\n")
    assert load_pnm(p3).data.tolist() == [[18, 200]]


@pytest.mark.parametrize("rgb,expected", [((0, 0, 0), 0), ((200, 200, 200), 200), ((10, 20, 30), 18)])
def test_rgb_to_gray_examples(rgb, expected):
    assert rgb_to_gray(*rgb) == expected


def test_rgb_to_gray_rounds_half_up():
    # 0.114 * 250 = 28.5 exactly; banker's rounding would give 28
    assert rgb_to_gray(0, 0, 250) == 29
    assert rgb_to_gray(1, 1, 0) == 1  # 0.886


def test_rgb_to_gray_grey_axis_is_identity():
    v = np.arange(256)
    assert np.array_equal(rgb_to_gray(v, v, v), v.astype(np.uint8))


channel = st.integers(0, 255)


@given(channel, channel, channel, st.integers(0, 2), st.integers(0, 255))
def test_rgb_to_gray_monotone(r, g, b, which, bump):
    rgb = [r, g, b]
    hi = list(rgb)
    hi[which] = max(hi[which], bump)
    assert rgb_to_gray(*hi) >= rgb_to_gray(*rgb)


@settings(max_examples=50)
@given(arrays(np.uint8, st.tuples(st.integers(1, 12), st.integers(1, 12))))
def test_p5_round_trip(tmp_path_factory, data):
    p = tmp_path_factory.mktemp("rt") / "x.pgm"
    save_pgm(p, GrayImage(data))
    back = load_pnm(p)
    assert back.data.shape == data.shape
    assert back.data.tobytes() == data.tobytes()


@settings(max_examples=30)
@given(arrays(np.uint8, st.tuples(st.integers(1, 8), st.integers(1, 8))))
def test_load_mask_matches_brute_force(tmp_path_factory, data):
    p = tmp_path_factory.mktemp("mask") / "m.pgm"
    p.write_bytes(to_p5_bytes(data))
    mask = load_mask(p, GrayImage(np.zeros_like(data)))
    raw = p.read_bytes()
    pixels = raw[len(raw) - data.size:]
    assert [bool(v) for v in mask.data.ravel()] == [v > 0 for v in pixels]


def test_mask_examples(tmp_path):
    img3 = GrayImage(np.zeros((3, 3), np.uint8))
    p = write(tmp_path, "on.pgm", to_p5_bytes(np.full((3, 3), 255, np.uint8)))
    assert load_mask(p, img3).data.all()
    p = write(tmp_path, "off.pgm", to_p5_bytes(np.zeros((3, 3), np.uint8)))
    assert not load_mask(p, img3).data.any()
    p = write(tmp_path, "row.pgm", b"P5\n3 1\n255\n" + bytes([0, 1, 200]))
    assert load_mask(p, GrayImage(np.zeros((1, 3), np.uint8))).data.tolist() == [[False, True, True]]


def test_mask_dimension_mismatch(tmp_path):
    p = write(tmp_path, "m.pgm", to_p5_bytes(np.zeros((2, 2), np.uint8)))
    with pytest.raises(PnmError, match="mask is 2x2"):
        load_mask(p, GrayImage(np.zeros((3, 3), np.uint8)))


@pytest.mark.parametrize("shape", [(3, 4), (1, 1), (7, 2)])
def test_full_mask(shape):
    m = full_mask(GrayImage(np.zeros(shape, np.uint8)))
    assert m.data.shape == shape and m.data.all()


@pytest.mark.parametrize(
    "payload,fragment",
    [
        (b"P7\n1 1\n255\n\x00", "unsupported magic"),
        (b"XX", "not a Netpbm"),
        (b"P5\n2 2\n65535\n" + bytes(8), "maxval 65535"),
        (b"P5\n2 2\n255\n\x00\x01", "truncated raster"),
        (b"P5\n2 x\n255\n\x00", "expected height"),
        (b"P2\n2 1\n255\n3\n", "truncated raster"),
        (b"P5\n1 1\n10\n\x20", "exceeds maxval"),
    ],
)
def test_malformed_files(tmp_path, payload, fragment):
    p = write(tmp_path, "bad.pgm", payload)
    with pytest.raises(PnmError, match=fragment) as info:
        load_pnm(p)
    assert str(p) in str(info.value)
    assert "byte" in str(info.value)


def test_missing_file(tmp_path):
    with pytest.raises(PnmError, match="cannot read"):
        load_pnm(tmp_path / "nope.pgm")


def test_mask_pairing(tmp_path):
    img = np.arange(12, dtype=np.uint8).reshape(3, 4)
    (tmp_path / "car.pgm").write_bytes(to_p5_bytes(img))
    image, mask = load_image_and_mask(tmp_path / "car.pgm")
    assert mask.data.all()
    assert mask_path_for(tmp_path / "car.pgm") == tmp_path / "car.mask.pgm"
    m = np.zeros_like(img)
    m[1, 1] = 255
    (tmp_path / "car.mask.pgm").write_bytes(to_p5_bytes(m))
    _, mask = load_image_and_mask(tmp_path / "car.pgm")
    assert mask.data.sum() == 1 and mask.data[1, 1]


def test_images_are_immutable():
    img = GrayImage(np.zeros((2, 2), np.uint8))
    with pytest.raises(ValueError):
        img.data[0, 0] = 1
    with pytest.raises(ValueError):
        GrayImage(np.array([[300]]))
    assert Mask(np.ones((2, 2))) == Mask(np.ones((2, 2), bool))
