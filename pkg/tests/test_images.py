"""Image rendering and the two file formats (PGM, packed tensor)."""

import struct

import numpy as np
import pytest

from refined import (
    DataError,
    FeatureGridMap,
    FeatureTable,
    ImageStack,
    automorphs,
    read_pgm,
    read_tensor,
    render,
    write_pgm,
    write_tensor,
)


def names(p):
    return [f"f{j + 1}" for j in range(p)]


def table(values):
    values = np.asarray(values, dtype=float)
    n, p = values.shape
    return FeatureTable(
        values, names(p), [f"s{i + 1}" for i in range(n)]
    )


def full_map(g):
    flat = np.arange(g * g)
    return FeatureGridMap(g, np.column_stack(divmod(flat, g)), names(g * g))


# ----------------------------------------------------------------- render


def test_render_places_values_at_assigned_pixels():
    m = FeatureGridMap(4, np.array([[2, 3], [0, 0]]), ["f1", "f2"])
    stack = render(table([[1.0, 0.25]]), m)
    img = stack.pixels[0]
    assert img[2, 3] == 1.0
    assert img[0, 0] == 0.25
    assert np.count_nonzero(img) == 2
    assert (img == 0).sum() == 16 - 2  # vacant pixels exactly 0


def test_render_all_zero_sample():
    m = full_map(2)
    stack = render(table([[0.0, 0.0, 0.0, 0.0]]), m)
    np.testing.assert_array_equal(stack.pixels[0], np.zeros((2, 2)))


def test_render_conserves_mass():
    rng = np.random.default_rng(7)
    values = rng.random((5, 9))
    stack = render(table(values), full_map(3))
    for i in range(5):
        assert stack.pixels[i].sum() == pytest.approx(values[i].sum(), abs=1e-9)


def test_render_is_linear_in_the_sample():
    rng = np.random.default_rng(11)
    values = rng.random((1, 9))
    alpha = 0.3
    a = render(table(values), full_map(3)).pixels
    b = render(table(alpha * values), full_map(3)).pixels
    np.testing.assert_allclose(b, alpha * a, atol=1e-12)


def test_render_aligns_by_name_not_position():
    m = FeatureGridMap(2, np.array([[0, 0], [1, 1]]), ["f2", "f1"])
    stack = render(table([[0.1, 0.9]]), m)
    assert stack.pixels[0][0, 0] == 0.9  # f2
    assert stack.pixels[0][1, 1] == 0.1  # f1


def test_render_matches_automorph_rotation():
    # rotating the map 90 degrees clockwise rotates the rendered image
    rng = np.random.default_rng(13)
    values = rng.random((1, 5))
    m = FeatureGridMap(
        3, np.array([[0, 0], [0, 2], [1, 1], [2, 0], [2, 2]]), names(5)
    )
    group = automorphs(m)
    base = render(table(values), m).pixels[0]
    rot1 = render(table(values), group[1]).pixels[0]
    np.testing.assert_array_equal(rot1, np.rot90(base, k=-1))
    mirrored = render(table(values), group[4]).pixels[0]
    np.testing.assert_array_equal(mirrored, np.fliplr(base))


def test_render_smoothing_hook():
    stack = render(
        table([[0.5, 0.5, 0.5, 0.5]]), full_map(2), smoothing=lambda im: im * 0.5
    )
    np.testing.assert_allclose(stack.pixels[0], np.full((2, 2), 0.25))


def test_render_rejects_unnormalized():
    with pytest.raises(DataError, match="normalized"):
        render(table([[2.0, 0.0, 0.0, 0.0]]), full_map(2))


def test_render_rejects_name_mismatch():
    m = FeatureGridMap(2, np.array([[0, 0]]), ["other"])
    t = FeatureTable(np.array([[0.5]]), ["f1"], ["s1"])
    with pytest.raises(DataError, match="align"):
        render(t, m)


def test_render_rejects_missing_values():
    t = table([[0.5, 0.5, 0.5, 0.5]])
    t.missing_mask[0, 1] = True
    with pytest.raises(DataError, match="missing"):
        render(t, full_map(2))


# -------------------------------------------------------------------- pgm


def test_pgm_quantization_rules(tmp_path):
    stack = ImageStack(np.array([[[1.0, 0.5], [0.0, 0.25]]]), ["s1"])
    (path,) = write_pgm(stack, tmp_path)
    img = read_pgm(path)
    assert img[0, 0] == 255  # 1.0
    assert img[0, 1] == 128  # 0.5 rounds away from zero
    assert img[1, 0] == 0
    assert img[1, 1] == 64  # 0.25*255 = 63.75 -> 64


def test_pgm_round_trip_bytes(tmp_path):
    rng = np.random.default_rng(17)
    stack = ImageStack(rng.random((3, 5, 5)), ["a", "b", "c"])
    paths = write_pgm(stack, tmp_path)
    assert [p.name for p in paths] == ["a.pgm", "b.pgm", "c.pgm"]
    for i, p in enumerate(paths):
        img = read_pgm(p)
        want = np.clip(np.floor(stack.pixels[i] * 255.0 + 0.5), 0, 255)
        np.testing.assert_array_equal(img, want.astype(np.uint8))
        # writing the same image again reproduces the file byte for byte
        again = tmp_path / "again"
        write_pgm(
            ImageStack(stack.pixels[i][None], [stack.sample_ids[i]]), again
        )
        assert (again / p.name).read_bytes() == p.read_bytes()


def test_pgm_suffixes(tmp_path):
    stack = ImageStack(np.zeros((2, 2, 2)), ["x", "y"])
    paths = write_pgm(stack, tmp_path, suffixes=["_r0", "_r1"])
    assert [p.name for p in paths] == ["x_r0.pgm", "y_r1.pgm"]
    with pytest.raises(DataError):
        write_pgm(stack, tmp_path, suffixes=["only_one"])


def test_pgm_header_layout(tmp_path):
    stack = ImageStack(np.zeros((1, 3, 3)), ["s1"])
    (path,) = write_pgm(stack, tmp_path)
    blob = path.read_bytes()
    assert blob.startswith(b"P5\n3 3\n255\n")
    assert len(blob) == len(b"P5\n3 3\n255\n") + 9


def test_read_pgm_rejects_garbage(tmp_path):
    path = tmp_path / "bad.pgm"
    path.write_bytes(b"P2\n2 2\n255\n....")
    with pytest.raises(DataError, match="binary PGM"):
        read_pgm(path)
    path.write_bytes(b"P5\n2 2\n255\n\x00\x00\x00")  # short by one byte
    with pytest.raises(DataError, match="pixel bytes"):
        read_pgm(path)
    path.write_bytes(b"P5\n2 2\n65535\n" + b"\x00" * 4)
    with pytest.raises(DataError, match="maxval"):
        read_pgm(path)


# ----------------------------------------------------------------- tensor


def test_tensor_exact_layout(tmp_path):
    stack = ImageStack(np.array([[[0.0, 1.0], [0.5, 0.25]]]), ["s1"])
    path = tmp_path / "t.bin"
    write_tensor(stack, path)
    blob = path.read_bytes()
    header = b"REFINED-TENSOR v1 1 2 2\n"
    assert blob.startswith(header)
    assert len(blob) == len(header) + 4 * 4
    values = struct.unpack("<4f", blob[len(header) :])
    assert values == (0.0, 1.0, 0.5, 0.25)  # row-major


def test_tensor_round_trip(tmp_path):
    rng = np.random.default_rng(19)
    pixels = rng.random((4, 6, 6))
    stack = ImageStack(pixels, [f"s{i}" for i in range(4)])
    path = tmp_path / "t.bin"
    write_tensor(stack, path)
    back = read_tensor(path)
    assert back.shape == (4, 6, 6)
    assert back.dtype == np.float32
    np.testing.assert_array_equal(back, pixels.astype(np.float32))


def test_tensor_empty_stack(tmp_path):
    stack = ImageStack(np.zeros((0, 3, 3)), [])
    path = tmp_path / "t.bin"
    write_tensor(stack, path)
    back = read_tensor(path)
    assert back.shape == (0, 3, 3)


def test_read_tensor_rejects_bad_files(tmp_path):
    path = tmp_path / "t.bin"
    path.write_bytes(b"REFINED-TENSOR v2 1 2 2\n" + b"\x00" * 16)
    with pytest.raises(DataError, match="header"):
        read_tensor(path)
    path.write_bytes(b"REFINED-TENSOR v1 1 2 2\n" + b"\x00" * 15)
    with pytest.raises(DataError, match="data bytes"):
        read_tensor(path)
    path.write_bytes(b"REFINED-TENSOR v1 1 2 3\n" + b"\x00" * 24)
    with pytest.raises(DataError, match="dimensions"):
        read_tensor(path)


# ------------------------------------------------------------- validation


def test_image_stack_validation():
    with pytest.raises(DataError):
        ImageStack(np.zeros((2, 3, 4)), ["a", "b"])
    with pytest.raises(DataError):
        ImageStack(np.zeros((2, 3, 3)), ["a"])
