"""Readout models for the time-multiplexed reservoir.

Three ways of turning node states into an output are provided:

* ``digital_output``: the plain linear readout computed offline.
* ``ideal_analog_output``: the discrete sum produced by a capacitive
  integrator, where each node is attenuated by its coefficient ``eta_i`` and
  no charge is carried over from the previous window.
* ``simulate_physical_readout``: a sample-level simulation of the weighting
  modulator, balanced photodiode and capacitor, including the charge that
  leaks from one window into the next.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.signal import lfilter

from .errors import InvalidParameterError, WeightOverflowError
from .reservoir import ReservoirParams, StateTrace

DEFAULT_V_PI = 5.9
DEFAULT_SAMPLE_RATE = 2e8
CABLE_IMPEDANCE = 50.0

# Windows processed per block in the sample-level simulation; bounds memory.
_BLOCK_WINDOWS = 256


@dataclass(frozen=True)
class AnalogReadoutConfig:
    """Electrical parameters of the analog readout chain.

    ``quantization_bits``, ``noise_std`` and ``bandwidth_hz`` are optional
    nonidealities; ``None`` switches each one off.
    """

    tau: float
    v_pi: float = DEFAULT_V_PI
    gain: float = 1.0
    sample_rate: float = DEFAULT_SAMPLE_RATE
    quantization_bits: Optional[int] = None
    noise_std: Optional[float] = None
    bandwidth_hz: Optional[float] = None

    def __post_init__(self):
        if not self.v_pi > 0:
            raise InvalidParameterError(f"v_pi must be positive, got {self.v_pi}")
        if not self.tau > 0:
            raise InvalidParameterError(f"tau must be positive, got {self.tau}")
        if not self.gain > 0:
            raise InvalidParameterError(f"gain must be positive, got {self.gain}")
        if not self.sample_rate > 0:
            raise InvalidParameterError("sample_rate must be positive")
        if self.quantization_bits is not None and self.quantization_bits < 1:
            raise InvalidParameterError("quantization_bits must be >= 1")
        if self.noise_std is not None and self.noise_std < 0:
            raise InvalidParameterError("noise_std must be non-negative")
        if self.bandwidth_hz is not None and not self.bandwidth_hz > 0:
            raise InvalidParameterError("bandwidth_hz must be positive")

    @property
    def ideal(self) -> bool:
        return (
            self.quantization_bits is None
            and not self.noise_std
            and self.bandwidth_hz is None
        )


def tau_from_capacitance(capacitance: float, resistance: float = CABLE_IMPEDANCE) -> float:
    """Integrator time constant for a capacitor behind a matched cable: RC/2."""
    return resistance * capacitance / 2.0


def capacitance_from_tau(tau: float, resistance: float = CABLE_IMPEDANCE) -> float:
    """Capacitance that yields the time constant ``tau``: 2*tau/R."""
    return 2.0 * tau / resistance


def compute_eta(theta: float, tau: float, n_nodes: int) -> np.ndarray:
    """Attenuation coefficient of every node at the end of an integration window.

    ``eta_i = exp(-theta*(N-i)/tau) * (1 - exp(-theta/tau)) * tau`` for
    ``i = 1..N``. The result has units of seconds.
    """
    if not theta > 0 or not tau > 0:
        raise InvalidParameterError("theta and tau must be positive")
    if int(n_nodes) < 1:
        raise InvalidParameterError(f"n_nodes must be >= 1, got {n_nodes}")
    remaining = np.arange(int(n_nodes) - 1, -1, -1, dtype=float)
    return np.exp(-theta * remaining / tau) * (-np.expm1(-theta / tau)) * tau


def _check_weights(weights, n_nodes: int, name: str = "weights") -> np.ndarray:
    w = np.asarray(weights, dtype=float).ravel()
    if w.shape != (n_nodes,):
        raise InvalidParameterError(f"{name} has length {w.size}, expected {n_nodes}")
    return w


def digital_output(trace: StateTrace, weights, bias: float) -> np.ndarray:
    """Linear readout ``y(n) = sum_i W_i x_i(n) + W_b``."""
    w = _check_weights(weights, trace.n_nodes)
    return w @ trace.states + bias


def ideal_analog_output(trace: StateTrace, eta, omega, bias: float) -> np.ndarray:
    """Output of a residual-free integrator: ``omega_b + sum_i x_i(n) eta_i omega_i``."""
    e = _check_weights(eta, trace.n_nodes, "eta")
    w = _check_weights(omega, trace.n_nodes, "omega")
    return (e * w) @ trace.states + bias


def weights_to_voltages(omega, config: AnalogReadoutConfig) -> np.ndarray:
    """Modulator drive voltages realizing the weights ``G sin(pi V / V_pi)``.

    With ``config.quantization_bits`` set, the voltages are snapped to a
    uniform grid of ``2**bits`` levels spanning ``[-V_pi/2, V_pi/2]``.

    Raises:
        WeightOverflowError: if any ``|omega_i| > G``.
    """
    w = np.asarray(omega, dtype=float).ravel()
    over = np.flatnonzero(~(np.abs(w) <= config.gain))
    if over.size:
        i = int(over[0])
        raise WeightOverflowError(i, float(w[i]), config.gain)
    volts = config.v_pi / np.pi * np.arcsin(w / config.gain)
    if config.quantization_bits is not None:
        half = config.v_pi / 2.0
        step = config.v_pi / (2 ** config.quantization_bits - 1)
        volts = -half + np.round((volts + half) / step) * step
        volts = np.clip(volts, -half, half)
    return volts


def voltages_to_weights(volts, config: AnalogReadoutConfig) -> np.ndarray:
    """Effective weights produced by drive voltages: ``G sin(pi V / V_pi)``."""
    return config.gain * np.sin(np.asarray(volts, dtype=float) * np.pi / config.v_pi)


def samples_per_node(theta: float, sample_rate: float, exact: bool = True) -> int:
    """Number of samples covering one node duration."""
    ratio = theta * sample_rate
    count = int(round(ratio))
    if count < 1:
        raise InvalidParameterError(
            f"theta * sample_rate = {ratio:.6g} gives less than one sample per node"
        )
    if exact and abs(ratio - count) > 1e-9 * max(ratio, 1.0):
        raise InvalidParameterError(
            f"theta * sample_rate = {ratio:.12g} is not an integer; "
            "node boundaries would not align with samples"
        )
    return count


def synthesize_waveform(
    trace: StateTrace, theta: float, sample_rate: float, exact: bool = True
) -> np.ndarray:
    """Piecewise-constant intensity ``I(t)`` holding each node for ``theta``.

    Nodes are emitted in order ``x_1(0) .. x_N(0), x_1(1) ..``.
    """
    spn = samples_per_node(theta, sample_rate, exact)
    return np.repeat(trace.states.T.ravel(), spn)


def _lowpass_coefficient(bandwidth_hz: float, dt: float) -> float:
    return float(np.exp(-2.0 * np.pi * bandwidth_hz * dt))


def simulate_physical_readout(
    trace: StateTrace,
    eta,
    omega,
    bias: float,
    params: ReservoirParams,
    config: AnalogReadoutConfig,
    seed: int = 0,
) -> np.ndarray:
    """Sample-level simulation of modulator, photodiode and capacitor.

    The photodiode output ``P(t) = I(t) W(t)`` is optionally low-pass filtered
    and corrupted with Gaussian noise, then integrated by the capacitor
    ``dQ/dt = -Q/tau + P(t)``. Each sample uses the exact zero-order-hold update
    ``Q <- Q exp(-dt/tau) + P tau (1 - exp(-dt/tau))``. The charge is never
    reset, so every window carries a residual of the previous one.

    Returns:
        ``Q`` at the end of every window plus ``bias``, length ``trace.length``.
    """
    n = trace.n_nodes
    if params.n_nodes != n:
        raise InvalidParameterError(
            f"trace has {n} nodes but params describe {params.n_nodes}"
        )
    _check_weights(eta, n, "eta")
    w = _check_weights(omega, n, "omega")
    weights = voltages_to_weights(weights_to_voltages(w, config), config)

    spn = samples_per_node(params.theta, config.sample_rate)
    window = spn * n
    dt = 1.0 / config.sample_rate
    decay = np.exp(-dt / config.tau)
    charge_gain = -np.expm1(-dt / config.tau) * config.tau
    weight_wave = np.repeat(weights, spn)

    rng = np.random.default_rng(seed) if config.noise_std else None
    lp = None
    if config.bandwidth_hz is not None:
        lp = _lowpass_coefficient(config.bandwidth_hz, dt)
    lp_state = np.zeros(1)
    q_state = np.zeros(1)

    out = np.empty(trace.length)
    for start in range(0, trace.length, _BLOCK_WINDOWS):
        stop = min(start + _BLOCK_WINDOWS, trace.length)
        intensity = np.repeat(trace.states[:, start:stop].T.ravel(), spn)
        power = intensity * np.tile(weight_wave, stop - start)
        if lp is not None:
            power, lp_state = lfilter([1.0 - lp], [1.0, -lp], power, zi=lp_state)
        if rng is not None:
            power = power + rng.normal(0.0, config.noise_std, size=power.shape)
        charge, q_state = lfilter([charge_gain], [1.0, -decay], power, zi=q_state)
        out[start:stop] = charge[window - 1 :: window]
    return out + bias
