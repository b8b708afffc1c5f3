"""Pseudospectral nonlinear elastodynamics on a periodic 2-D grid."""

from .core import (
    DEFAULT_CFL,
    STABILITY_CONSTANT,
    BlowUpError,
    CFLError,
    SimGrid,
    SimulationError,
    Solver,
    Stepper,
    step_nonlinear,
)
from .experiment import (
    ExperimentConfig,
    ExperimentError,
    ExperimentReport,
    GeometryError,
    GridConfig,
    PacketSpec,
    ResolutionError,
    plan_experiment,
    resonant_packets,
    run_interaction_experiment,
)
from .measure import MeasurementError, Spectrum, measure_mode_amplitude
from .packets import LinearPacket, PacketError, PacketSource, load_packets, mode_vectors
from .record import RecordMismatchError, WavefieldRecord, extract_bilinear_response, run_simulation

__all__ = [
    "BlowUpError",
    "CFLError",
    "DEFAULT_CFL",
    "ExperimentConfig",
    "ExperimentError",
    "ExperimentReport",
    "GeometryError",
    "GridConfig",
    "LinearPacket",
    "MeasurementError",
    "PacketError",
    "PacketSource",
    "PacketSpec",
    "RecordMismatchError",
    "ResolutionError",
    "STABILITY_CONSTANT",
    "SimGrid",
    "SimulationError",
    "Solver",
    "Spectrum",
    "Stepper",
    "WavefieldRecord",
    "extract_bilinear_response",
    "load_packets",
    "measure_mode_amplitude",
    "mode_vectors",
    "plan_experiment",
    "resonant_packets",
    "run_interaction_experiment",
    "run_simulation",
    "step_nonlinear",
]
