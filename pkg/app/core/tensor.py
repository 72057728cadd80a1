"""Dense N-dimensional tensors: Hadamard powers, valid cross-correlation and the NDT1 file format.

Tensors are plain ``numpy.ndarray`` values, row-major, channels-first for
network data: ``(C, *spatial)`` for one sample and ``(B, C, *spatial)`` for a
batch. Kernel banks are ``(C_out, C_in, *kernel)``.
"""

import io
import itertools
import struct
from pathlib import Path
from typing import BinaryIO, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray

from ..exceptions import FormatError, InvalidArgumentError, ShapeMismatchError

Tensor = NDArray[np.floating]

NDT_MAGIC = b"NDT1"
NDT_MAX_RANK = 8
_HEADER = struct.Struct("<4sB")


def as_tensor(values, dtype=np.float64) -> Tensor:
    """Coerce ``values`` to a tensor, enforcing a non-empty shape of positive extents."""
    t = np.asarray(values, dtype=dtype)
    if t.ndim == 0:
        t = t.reshape(1)
    if any(extent < 1 for extent in t.shape):
        raise InvalidArgumentError(f"tensor extents must be >= 1, got {t.shape}")
    return t


def hadamard_power(t: Tensor, d: int) -> Tensor:
    """Elementwise d-th power of ``t``."""
    if isinstance(d, bool) or int(d) != d or d < 1:
        raise InvalidArgumentError(f"power must be a positive integer, got {d!r}")
    d = int(d)
    if d == 1:
        return np.array(t, copy=True)
    return np.power(t, d)


def _check_rank(rank: int) -> None:
    if rank not in (1, 2, 3):
        raise InvalidArgumentError(f"spatial rank must be 1, 2 or 3, got {rank}")


def _output_extents(spatial: Sequence[int], kernel: Sequence[int]) -> Tuple[int, ...]:
    if len(spatial) != len(kernel):
        raise ShapeMismatchError(f"input spatial rank {len(spatial)} != kernel rank {len(kernel)}")
    out = tuple(s - k + 1 for s, k in zip(spatial, kernel))
    if any(o < 1 for o in out):
        raise ShapeMismatchError(f"kernel {tuple(kernel)} larger than input {tuple(spatial)}")
    return out


def _tap_slices(offset: Sequence[int], out: Sequence[int]) -> Tuple[slice, ...]:
    return (slice(None), slice(None)) + tuple(slice(o, o + n) for o, n in zip(offset, out))


def correlate_batch(x: Tensor, kernels: Tensor, rank: int) -> Tensor:
    """Valid cross-correlation of a batch ``(B, C_in, *S)`` with ``(C_out, C_in, *K)``.

    Accumulates one channel contraction per kernel tap, so memory stays at the
    size of the output rather than an unrolled im2col matrix.
    """
    _check_rank(rank)
    if x.ndim != rank + 2 or kernels.ndim != rank + 2:
        raise ShapeMismatchError(
            f"expected batch of rank {rank + 2} and kernel bank of rank {rank + 2}, "
            f"got {x.shape} and {kernels.shape}"
        )
    if x.shape[1] != kernels.shape[1]:
        raise ShapeMismatchError(f"input has {x.shape[1]} channels, kernels expect {kernels.shape[1]}")
    kernel_extents = kernels.shape[2:]
    out_extents = _output_extents(x.shape[2:], kernel_extents)

    dtype = np.result_type(x.dtype, kernels.dtype)
    out = np.zeros((x.shape[0],) + out_extents + (kernels.shape[0],), dtype=dtype)
    for offset in itertools.product(*(range(k) for k in kernel_extents)):
        window = x[_tap_slices(offset, out_extents)]
        tap = kernels[(slice(None), slice(None)) + offset]
        out += np.tensordot(window, tap, axes=([1], [1]))
    return np.moveaxis(out, -1, 1)


def correlate_weight_grad(x: Tensor, grad_out: Tensor, kernel_extents: Sequence[int]) -> Tensor:
    """Adjoint of ``correlate_batch`` with respect to the kernel bank."""
    kernel_extents = tuple(kernel_extents)
    out_extents = grad_out.shape[2:]
    summed = [0] + list(range(2, grad_out.ndim))
    grad = np.zeros((grad_out.shape[1], x.shape[1]) + kernel_extents,
                    dtype=np.result_type(x.dtype, grad_out.dtype))
    for offset in itertools.product(*(range(k) for k in kernel_extents)):
        window = x[_tap_slices(offset, out_extents)]
        grad[(slice(None), slice(None)) + offset] = np.tensordot(grad_out, window, axes=(summed, summed))
    return grad


def correlate_input_grad(grad_out: Tensor, kernels: Tensor, input_extents: Sequence[int]) -> Tensor:
    """Adjoint of ``correlate_batch`` with respect to its input."""
    kernel_extents = kernels.shape[2:]
    out_extents = grad_out.shape[2:]
    grad = np.zeros((grad_out.shape[0], kernels.shape[1]) + tuple(input_extents),
                    dtype=np.result_type(grad_out.dtype, kernels.dtype))
    for offset in itertools.product(*(range(k) for k in kernel_extents)):
        tap = kernels[(slice(None), slice(None)) + offset]
        contribution = np.tensordot(grad_out, tap, axes=([1], [0]))
        grad[_tap_slices(offset, out_extents)] += np.moveaxis(contribution, -1, 1)
    return grad


def convolve_valid(x: Tensor, kernels: Tensor, rank: int) -> Tensor:
    """Valid (unpadded) cross-correlation of one sample, summed over input channels.

    ``x`` is ``(C_in, *S)`` or, for a single channel, just ``S``; ``kernels`` is
    ``(C_out, C_in, *K)``, ``(C_in, *K)`` for a single output, or ``K``.
    The output drops the axes the caller dropped.
    """
    _check_rank(rank)
    x = np.asarray(x, dtype=np.float64)
    kernels = np.asarray(kernels, dtype=np.float64)
    single_channel = x.ndim == rank
    if single_channel:
        x = x[np.newaxis]
    single_output = kernels.ndim in (rank, rank + 1)
    if kernels.ndim == rank:
        kernels = kernels[np.newaxis]
    if single_output:
        kernels = kernels[np.newaxis]
    if x.ndim != rank + 1:
        raise ShapeMismatchError(f"input of shape {x.shape} does not have spatial rank {rank}")

    out = correlate_batch(x[np.newaxis], kernels, rank)[0]
    if single_output:
        out = out[0]
    return out


def tensor_to_bytes(t: Tensor) -> bytes:
    """Serialize to NDT1: magic, rank byte, little-endian u32 extents, little-endian f32 samples."""
    t = np.asarray(t)
    if t.ndim < 1 or t.ndim > NDT_MAX_RANK:
        raise FormatError(f"NDT1 supports ranks 1..{NDT_MAX_RANK}, got {t.ndim}")
    header = _HEADER.pack(NDT_MAGIC, t.ndim) + np.asarray(t.shape, dtype="<u4").tobytes()
    return header + np.ascontiguousarray(t, dtype="<f4").tobytes()


def tensor_from_bytes(payload: bytes) -> Tensor:
    if len(payload) < _HEADER.size:
        raise FormatError("truncated NDT1 header")
    magic, rank = _HEADER.unpack_from(payload)
    if magic != NDT_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {NDT_MAGIC!r}")
    if rank < 1 or rank > NDT_MAX_RANK:
        raise FormatError(f"rank {rank} outside 1..{NDT_MAX_RANK}")
    extents_end = _HEADER.size + 4 * rank
    if len(payload) < extents_end:
        raise FormatError("truncated NDT1 extents")
    shape = tuple(int(e) for e in np.frombuffer(payload, dtype="<u4", count=rank, offset=_HEADER.size))
    if any(e < 1 for e in shape):
        raise FormatError(f"non-positive extent in {shape}")
    count = int(np.prod(shape))
    if len(payload) != extents_end + 4 * count:
        raise FormatError(f"payload holds {len(payload) - extents_end} bytes, shape {shape} needs {4 * count}")
    data = np.frombuffer(payload, dtype="<f4", count=count, offset=extents_end)
    return data.reshape(shape).astype(np.float32)


def tensor_write(t: Tensor, destination: Union[str, Path, BinaryIO]) -> None:
    payload = tensor_to_bytes(t)
    if isinstance(destination, (str, Path)):
        Path(destination).parent.mkdir(parents=True, exist_ok=True)
        Path(destination).write_bytes(payload)
    else:
        destination.write(payload)


def tensor_read(source: Union[str, Path, BinaryIO, bytes]) -> Tensor:
    if isinstance(source, bytes):
        return tensor_from_bytes(source)
    if isinstance(source, (str, Path)):
        return tensor_from_bytes(Path(source).read_bytes())
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        return tensor_from_bytes(source.read())
    raise FormatError(f"cannot read a tensor from {type(source).__name__}")
