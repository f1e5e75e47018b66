from .adam import AdamState, adam_step, init_adam_state
from .gradcheck import finite_diff_grad, relative_error
from .ops import (
    activation,
    add,
    concat,
    conv2d,
    gather_rows,
    global_avg_pool,
    l1_loss,
    linear,
    matmul,
    matvec,
    mean_all,
    mean_of,
    mul,
    relu,
    reshape,
    scale,
    sigmoid,
    sub,
    sum_all,
    take_slice,
    transpose,
)
from .tensor import Tensor, as_tensor, backward, grad_enabled, no_grad, set_finite_checks

__all__ = [
    "AdamState",
    "Tensor",
    "activation",
    "adam_step",
    "add",
    "as_tensor",
    "backward",
    "concat",
    "conv2d",
    "finite_diff_grad",
    "gather_rows",
    "global_avg_pool",
    "grad_enabled",
    "init_adam_state",
    "l1_loss",
    "linear",
    "matmul",
    "matvec",
    "mean_all",
    "mean_of",
    "mul",
    "no_grad",
    "relative_error",
    "relu",
    "reshape",
    "scale",
    "set_finite_checks",
    "sigmoid",
    "sub",
    "sum_all",
    "take_slice",
    "transpose",
]
