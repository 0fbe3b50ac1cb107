"""Decentralized beamforming for IRS-aided cell-free networks.

Fractional-programming beamformer updates, a majorisation-minimisation
solver for unit-modulus IRS phases and an incremental consensus-ADMM
protocol over a simulated inter-BS backhaul, together with centralized,
MRT and local-ZF reference schemes and a Monte-Carlo harness.
"""
from .kernels import BACKEND
from .model import ChannelSet, Scenario, ScenarioConfig, generate_scenario
from .fpcore import BeamState, CrossTerms, weighted_sum_rate
from .consensus import ADMMOptions, ConvergenceTrace, build_ring, run_decentralized

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ChannelSet",
    "Scenario",
    "ScenarioConfig",
    "generate_scenario",
    "BeamState",
    "CrossTerms",
    "weighted_sum_rate",
    "ADMMOptions",
    "ConvergenceTrace",
    "build_ring",
    "run_decentralized",
]
