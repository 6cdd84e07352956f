"""Spatio-temporal part-graph inference over thin video slices."""

from ._thinslice import (
    ArgumentError,
    Error,
    bilinear_sample,
    gdt_1d,
    gdt_2d,
    generate_slice,
    hinge_loss,
    init_params,
    pck,
    predict,
    selfcheck,
    slot_count,
    warp,
)

__all__ = [
    "ArgumentError",
    "Error",
    "bilinear_sample",
    "gdt_1d",
    "gdt_2d",
    "generate_slice",
    "hinge_loss",
    "init_params",
    "pck",
    "predict",
    "selfcheck",
    "slot_count",
    "warp",
]
