import io

import numpy as np
import pytest

from app.core.tensor import (
    as_tensor,
    convolve_valid,
    correlate_batch,
    correlate_input_grad,
    correlate_weight_grad,
    hadamard_power,
    tensor_from_bytes,
    tensor_read,
    tensor_to_bytes,
    tensor_write,
)
from app.exceptions import FormatError, InvalidArgumentError, ShapeMismatchError


def naive_correlate(x, kernels):
    """Direct nested-loop reference for a single 2D sample."""
    c_out, c_in, kh, kw = kernels.shape
    _, h, w = x.shape
    out = np.zeros((c_out, h - kh + 1, w - kw + 1))
    for o in range(c_out):
        for i in range(h - kh + 1):
            for j in range(w - kw + 1):
                out[o, i, j] = np.sum(x[:, i:i + kh, j:j + kw] * kernels[o])
    return out


def test_hadamard_power_values():
    """Elementwise powers of a small vector"""
    t = np.array([1.0, -2.0, 3.0])
    assert np.array_equal(hadamard_power(t, 1), t)
    assert np.array_equal(hadamard_power(t, 3), np.array([1.0, -8.0, 27.0]))


def test_hadamard_power_exponents_add():
    """t^(d1+d2) equals t^d1 * t^d2 exactly on integer entries"""
    t = np.random.default_rng(7).integers(-5, 6, size=(3, 4, 2)).astype(np.float64)
    for d1 in range(1, 4):
        for d2 in range(1, 5):
            assert np.array_equal(hadamard_power(t, d1 + d2), hadamard_power(t, d1) * hadamard_power(t, d2))


def test_hadamard_power_keeps_shape():
    """Rank-5 input keeps its shape"""
    t = np.random.default_rng(0).normal(size=(2, 3, 1, 4, 2))
    assert hadamard_power(t, 2).shape == t.shape


@pytest.mark.parametrize("d", [0, -1, 1.5, True])
def test_hadamard_power_rejects_bad_exponent(d):
    """Exponent must be a positive integer"""
    with pytest.raises(InvalidArgumentError):
        hadamard_power(np.ones(3), d)


def test_as_tensor_rejects_empty_extent():
    """Zero extents are not tensors"""
    with pytest.raises(InvalidArgumentError):
        as_tensor(np.zeros((2, 0)))


def test_convolve_valid_1d_example():
    """[1,2,3,4] with [1,1] gives [3,5,7]"""
    out = convolve_valid(np.array([1.0, 2.0, 3.0, 4.0]), np.array([1.0, 1.0]), 1)
    assert np.array_equal(out, np.array([3.0, 5.0, 7.0]))


@pytest.mark.parametrize("rank", [1, 2, 3])
def test_convolve_valid_is_linear(rank):
    """conv(a x + b y) = a conv(x) + b conv(y)"""
    rng = np.random.default_rng(10 + rank)
    x, y = rng.normal(size=(2, 2) + (6,) * rank)
    kernels = rng.normal(size=(3, 2) + (3,) * rank)
    a, b = 1.7, -0.4
    combined = convolve_valid(a * x + b * y, kernels, rank)
    assert np.allclose(combined, a * convolve_valid(x, kernels, rank) + b * convolve_valid(y, kernels, rank), atol=1e-12)


def test_convolve_valid_identity_kernel_3d():
    """A 1x1x1 unit kernel returns the input"""
    x = np.random.default_rng(1).normal(size=(4, 5, 6))
    out = convolve_valid(x, np.ones((1, 1, 1)), 3)
    assert np.allclose(out, x)


def test_convolve_valid_kernel_equal_to_input():
    """Kernel the size of the input gives a single sample"""
    x = np.arange(9.0).reshape(3, 3)
    out = convolve_valid(x, np.ones((3, 3)), 2)
    assert out.shape == (1, 1)
    assert out[0, 0] == pytest.approx(36.0)


def test_convolve_valid_oversized_kernel():
    """Kernel larger than input is a shape error"""
    with pytest.raises(ShapeMismatchError):
        convolve_valid(np.ones((3, 3)), np.ones((4, 3)), 2)


def test_convolve_valid_channel_mismatch():
    """Kernel channel count must match the input"""
    with pytest.raises(ShapeMismatchError):
        convolve_valid(np.ones((2, 5, 5)), np.ones((1, 3, 2, 2)), 2)


def test_correlate_batch_matches_naive_loops():
    """Tap-wise contraction equals the nested-loop reference"""
    rng = np.random.default_rng(2)
    x = rng.normal(size=(3, 7, 6))
    kernels = rng.normal(size=(4, 3, 3, 2))
    out = correlate_batch(x[np.newaxis], kernels, 2)[0]
    assert np.allclose(out, naive_correlate(x, kernels), atol=1e-12)


def test_correlation_adjoints():
    """<corr(x, k), g> = <x, input_grad(g, k)> = <k, weight_grad(x, g)>"""
    rng = np.random.default_rng(3)
    x = rng.normal(size=(2, 3, 5, 4, 6))
    k = rng.normal(size=(2, 3, 2, 3, 2))
    y = correlate_batch(x, k, 3)
    g = rng.normal(size=y.shape)
    inner = np.sum(y * g)
    assert np.sum(x * correlate_input_grad(g, k, x.shape[2:])) == pytest.approx(inner)
    assert np.sum(k * correlate_weight_grad(x, g, k.shape[2:])) == pytest.approx(inner)


def test_ndt1_layout():
    """Header is magic, rank byte and little-endian extents"""
    payload = tensor_to_bytes(np.zeros((2, 3), dtype=np.float32))
    assert payload[:4] == b"NDT1"
    assert payload[4] == 2
    assert payload[5:13] == (2).to_bytes(4, "little") + (3).to_bytes(4, "little")
    assert len(payload) == 13 + 4 * 6


def test_ndt1_write_read(tmp_path):
    """Tensors come back bit-exact at float32"""
    t = np.random.default_rng(4).normal(size=(9, 1, 5, 5)).astype(np.float32)
    tensor_write(t, tmp_path / "t.ndt")
    back = tensor_read(tmp_path / "t.ndt")
    assert back.dtype == np.float32
    assert np.array_equal(back, t)

    buffer = io.BytesIO()
    tensor_write(t, buffer)
    assert np.array_equal(tensor_read(io.BytesIO(buffer.getvalue())), t)


def test_ndt1_image_sized_round_trip(tmp_path):
    """A (3, 348, 348) tensor keeps its extents and every sample"""
    t = np.random.default_rng(8).random((3, 348, 348)).astype(np.float32)
    tensor_write(t, tmp_path / "image.ndt")
    payload = (tmp_path / "image.ndt").read_bytes()
    assert payload[9:13] == (348).to_bytes(4, "little")
    assert len(payload) == 5 + 4 * 3 + 4 * t.size
    back = tensor_read(payload)
    assert back.shape == (3, 348, 348)
    assert np.array_equal(back, t)


def test_ndt1_rank_one_single_element():
    """Shape (1,) survives the format"""
    back = tensor_read(tensor_to_bytes(np.array([2.5])))
    assert back.shape == (1,) and back[0] == 2.5


def test_ndt1_bad_magic():
    """Wrong magic is a format error"""
    payload = b"NDT2" + tensor_to_bytes(np.ones(2))[4:]
    with pytest.raises(FormatError):
        tensor_from_bytes(payload)


def test_ndt1_truncated_payload():
    """Missing sample bytes are a format error"""
    payload = tensor_to_bytes(np.ones((3, 3)))
    with pytest.raises(FormatError):
        tensor_from_bytes(payload[:-4])


def test_ndt1_rank_limit():
    """Ranks above eight are refused on both sides"""
    with pytest.raises(FormatError):
        tensor_to_bytes(np.ones((1,) * 9))
    with pytest.raises(FormatError):
        tensor_from_bytes(b"NDT1" + bytes([9]) + b"\x01\x00\x00\x00" * 9 + b"\x00" * 4)
