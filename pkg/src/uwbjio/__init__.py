"""Blind adaptive reduced-rank receivers for DS-UWB baseband simulation."""

from ._backend import BACKEND
from .analysis import channel_mse, hessian_min_eigenvalue, phase_offset, sinr
from .baselines import RakeMrc, rake_mrc
from .blind_channel import (
    GenieEstimator,
    LeakageSgEstimator,
    PowerMethodEstimator,
    RyPowerEstimator,
)
from .channel import ChannelRealization, SvParams, generate_sv_channel, normalize_channel
from .coding import CodeConfig, encode, free_distance, viterbi_decode
from .harness import AlgoSpec, ExperimentConfig, run_experiment, run_trial
from .jio_nsg import FullRankNsg, JioNsg, JioNsgConfig
from .jio_rls import FullRankRls, JioRls, JioRlsConfig
from .rank_adapt import RankAdaptConfig, RankAdaptiveJioRls
from .signal_model import (
    DimensionSet,
    NbiConfig,
    SignalModelMatrices,
    SystemConfig,
    assemble_received,
    build_matrices,
    derive_dimensions,
    generate_spreading_codes,
    oracle_received_convolution,
    sign_decision,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AlgoSpec",
    "ChannelRealization",
    "CodeConfig",
    "DimensionSet",
    "ExperimentConfig",
    "FullRankNsg",
    "FullRankRls",
    "GenieEstimator",
    "JioNsg",
    "JioNsgConfig",
    "JioRls",
    "JioRlsConfig",
    "LeakageSgEstimator",
    "NbiConfig",
    "PowerMethodEstimator",
    "RakeMrc",
    "RankAdaptConfig",
    "RankAdaptiveJioRls",
    "RyPowerEstimator",
    "SignalModelMatrices",
    "SvParams",
    "SystemConfig",
    "assemble_received",
    "build_matrices",
    "channel_mse",
    "derive_dimensions",
    "encode",
    "free_distance",
    "generate_spreading_codes",
    "generate_sv_channel",
    "hessian_min_eigenvalue",
    "normalize_channel",
    "oracle_received_convolution",
    "phase_offset",
    "rake_mrc",
    "run_experiment",
    "run_trial",
    "sign_decision",
    "sinr",
    "viterbi_decode",
]
