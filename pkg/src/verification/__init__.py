"""Independent oracles and the finite-difference gradient suite."""

from .gradcheck import (
    GradCheckReport,
    TinyItnFixture,
    check_gradient,
    itn_losses,
    relative_error,
    run_gradcheck_suite,
    tiny_itn_fixture,
)
from .oracles import affine_source_map, finite_diff_grad, naive_conv, naive_warp

__all__ = [
    "GradCheckReport",
    "TinyItnFixture",
    "affine_source_map",
    "check_gradient",
    "finite_diff_grad",
    "itn_losses",
    "naive_conv",
    "naive_warp",
    "relative_error",
    "run_gradcheck_suite",
    "tiny_itn_fixture",
]
