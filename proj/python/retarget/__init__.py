"""Adapts a pre-trained restoration model to an unknown degradation.

The heavy lifting lives in the compiled ``_core`` module; this package
re-exports it under stable names. Arrays are float64 ``(channels, height,
width)`` in ``[0, 1]`` unless a function says otherwise.
"""

from ._core import (
    DataError,
    DiffusionModel,
    NumericError,
    ParamError,
    Restorer,
    Schedule,
    classic_degrade,
    lowpass,
    make_schedule,
    psnr,
    q_sample,
    read_png,
    realistic_degrade,
    respaced_grid,
    run_cli,
    ssim,
    write_png,
)

__all__ = [
    "DataError",
    "DiffusionModel",
    "NumericError",
    "ParamError",
    "Restorer",
    "Schedule",
    "classic_degrade",
    "lowpass",
    "make_schedule",
    "psnr",
    "q_sample",
    "read_png",
    "realistic_degrade",
    "respaced_grid",
    "run_cli",
    "ssim",
    "write_png",
]
