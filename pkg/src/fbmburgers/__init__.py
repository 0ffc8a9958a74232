"""Spectral Galerkin / tamed exponential Euler simulation of the stochastic
Burgers equation driven by cylindrical fractional Brownian motion."""

__version__ = "0.1.0"

from .fgn import (
    FgnGrid,
    HurstParameter,
    fbm_covariance,
    fgn_autocovariance,
    mode_streams,
    sample_fgn,
    sample_fgn_cholesky,
)
from .spectral import (
    CollocationField,
    SpectralField,
    burgers_nonlinearity,
    lp_norm,
    project,
    semigroup_apply,
    sobolev_norm,
)
from .stochconv import (
    ConvolutionState,
    convolution_moment_bound_check,
    convolution_variance_oracle,
    step_convolution,
)
from .scheme import (
    BlowUpError,
    NoiseBundle,
    SchemeConfig,
    SchemeState,
    interpolate,
    run,
    step,
    taming_factor,
)
from .experiments import ErrorTable, StudyConfig, convergence_study, strong_error, trajectory_gallery
