"""Additive TMCMC and RWM: targets, kernels, optimal scaling, diagnostics, diffusion limits."""
from .kernels import ChainTrace, KernelConfig, RecordPolicy, run_chain, run_ensemble, split_seed
from .scaling import ScalingFamily, Variant, optimal_scale
from .targets import GaussianMeasure, IidProduct, ScaledProduct, ThetaSchedule

__all__ = [
    "ChainTrace", "KernelConfig", "RecordPolicy", "run_chain", "run_ensemble", "split_seed",
    "ScalingFamily", "Variant", "optimal_scale",
    "GaussianMeasure", "IidProduct", "ScaledProduct", "ThetaSchedule",
]
