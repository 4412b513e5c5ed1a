"""Gaussian splatting with spherical-gaussian color models."""

from ._core import (
    Camera,
    Scene,
    convert_checkpoint,
    eval_sg,
    eval_sh_basis,
    flops_per_gaussian,
    load_camera,
    load_png,
    load_scene,
    orbit_camera,
    param_count,
    prune,
    psnr,
    render,
    save_camera,
    save_png,
    save_scene,
    shared_param_count,
    ssim,
    synth_scene,
    train,
)

__all__ = [
    "Camera",
    "Scene",
    "convert_checkpoint",
    "eval_sg",
    "eval_sh_basis",
    "flops_per_gaussian",
    "load_camera",
    "load_png",
    "load_scene",
    "orbit_camera",
    "param_count",
    "prune",
    "psnr",
    "render",
    "save_camera",
    "save_png",
    "save_scene",
    "shared_param_count",
    "ssim",
    "synth_scene",
    "train",
]
