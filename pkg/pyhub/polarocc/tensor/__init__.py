from .io import (
    ARRAY_MAGIC,
    array_from_json,
    array_to_json,
    dumps_array,
    loads_array,
    read_array,
    read_array_records,
    write_array,
)
from .ops import (
    DEFAULT_PADDING,
    Array,
    DualArray,
    as_array,
    avg_pool,
    avg_pool_backward,
    compose_kernels,
    conv3d,
    conv3d_backward,
    delta_kernel,
    finite_diff_grad,
    fold_padding,
    matmul,
    matmul_backward,
    pad_volume,
    relative_error,
    relu,
    relu_backward,
    sigmoid,
    sigmoid_backward,
    softmax,
    softmax_backward,
)

__all__ = [
    "ARRAY_MAGIC",
    "Array",
    "DEFAULT_PADDING",
    "DualArray",
    "array_from_json",
    "array_to_json",
    "as_array",
    "avg_pool",
    "avg_pool_backward",
    "compose_kernels",
    "conv3d",
    "conv3d_backward",
    "delta_kernel",
    "dumps_array",
    "finite_diff_grad",
    "fold_padding",
    "loads_array",
    "matmul",
    "matmul_backward",
    "pad_volume",
    "read_array",
    "read_array_records",
    "relative_error",
    "relu",
    "relu_backward",
    "sigmoid",
    "sigmoid_backward",
    "softmax",
    "softmax_backward",
    "write_array",
]
