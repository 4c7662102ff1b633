"""Physically based synthesis of underwater / hazy images from RGB-D data."""

from .fit import DegenerateProblemError, FitProblem, FitResult, fit, forward_mse, gradient
from .imaging import downsample_half, load_depth, load_rgb, save_rgb
from .losses import (
    batch_mean_weight,
    depth_transform,
    l1_mean,
    pair_loss_fixed,
    pair_loss_weighted,
    residual_compose,
    ssim_loss,
    total_technique1,
    total_technique2,
    total_technique3,
    total_variant2,
)
from .metrics import MetricsReport, delta_accuracy, log10_error, rel_error, rms_error, ssim
from .optics import WaterProfile, degrade_classic, jerlov_preset, simulate_classic, transmission
from .rng import RngStream, rng_uniform
from .scatter import (
    ScatterParams,
    compose_scattered,
    gauss_kernel_value,
    scatter_likelihood,
    scattered_radiance_fast,
    scattered_radiance_oracle,
    simulate_scattered,
)
from .turbidity import TurbidityParams, blend_turbidity, make_particle_layer

__version__ = "0.1.0"
