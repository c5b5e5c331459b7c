"""Simulator of a time-multiplexed optoelectronic reservoir with an analog readout."""

from .channel import ChannelDataset, distort, make_dataset, mix_channel
from .errors import InvalidParameterError, ReadoutError, SolverError, WeightOverflowError
from .harness import ExperimentConfig, ExperimentResult, run_experiment, run_sweep
from .metrics import decide_symbols, symbol_error_rate
from .readout import (
    AnalogReadoutConfig,
    capacitance_from_tau,
    compute_eta,
    digital_output,
    ideal_analog_output,
    simulate_physical_readout,
    synthesize_waveform,
    tau_from_capacitance,
    weights_to_voltages,
)
from .reservoir import ReservoirParams, StateTrace, make_mask, run_reservoir
from .training import TrainedReadout, ridge_fit, train_readout

__version__ = "0.1.0"
