"""Certified numerical phase-error bounds for MDI quantum key distribution.

The package builds the Gram-matrix semidefinite program for a protocol
family, solves it with a self-contained interior-point method, checks the
dual certificate and turns the bound into key rates.
"""
from .channel import DeviceParams, ObservedStats, device_preset, phase_protocol_stats
from .sdp_model import SdpProblem, assemble_sdp
from .solver import SolverOptions, solve, verify_certificate
from .states import Family, ProtocolSpec, build_protocol

__all__ = [
    "DeviceParams",
    "ObservedStats",
    "device_preset",
    "phase_protocol_stats",
    "SdpProblem",
    "assemble_sdp",
    "SolverOptions",
    "solve",
    "verify_certificate",
    "Family",
    "ProtocolSpec",
    "build_protocol",
]
