"""Metrics, flow-color rendering, dataset evaluation, and the CLI."""

from .evaluate import evaluate_split
from .flow import flow_to_color
from .metrics import MetricReport, motion_mse, psnr, ssim

__all__ = ["MetricReport", "evaluate_split", "flow_to_color", "motion_mse",
           "psnr", "ssim"]
