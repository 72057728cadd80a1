from .tensor import (
    Tensor,
    as_tensor,
    convolve_valid,
    correlate_batch,
    correlate_input_grad,
    correlate_weight_grad,
    hadamard_power,
    tensor_read,
    tensor_write,
)

__all__ = [
    "Tensor",
    "as_tensor",
    "convolve_valid",
    "correlate_batch",
    "correlate_input_grad",
    "correlate_weight_grad",
    "hadamard_power",
    "tensor_read",
    "tensor_write",
]
