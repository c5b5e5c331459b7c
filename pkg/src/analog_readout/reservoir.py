"""Time-multiplexed delay-line reservoir with a sine nonlinearity.

A single nonlinear element processes ``N`` virtual nodes one after the other.
Each node mixes the masked input with the state that comes back out of a
delay line ``k`` node durations longer than one input period, so node ``i``
is coupled to node ``i - k`` of the previous step (and the first ``k`` nodes
to the tail of the step before that).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError

DEFAULT_THETA = 130e-9
DEFAULT_ALPHA = 0.1
DEFAULT_BETA = 0.8
DEFAULT_WASHOUT = 50


def make_mask(n_nodes: int, seed: int) -> np.ndarray:
    """Draw an input mask with entries i.i.d. uniform on [-1, 1].

    Uses ``numpy.random.default_rng(seed)``, so the mask is reproducible
    across platforms for a given seed.
    """
    if int(n_nodes) < 1:
        raise InvalidParameterError(f"n_nodes must be >= 1, got {n_nodes}")
    rng = np.random.default_rng(seed)
    return rng.uniform(-1.0, 1.0, size=int(n_nodes))


@dataclass(frozen=True)
class ReservoirParams:
    """Parameters of the delay-line reservoir.

    Attributes:
        n_nodes: number of virtual nodes ``N``.
        theta: duration of one node in seconds.
        input_gain: input scaling ``alpha``.
        feedback_gain: feedback scaling ``beta``.
        phase: operating point of the sine nonlinearity, in radians.
        mask: per-node input mask, length ``N``, entries in [-1, 1].
        desync_offset: number of nodes by which the delay line exceeds
            one input period.
    """

    n_nodes: int
    mask: np.ndarray
    theta: float = DEFAULT_THETA
    input_gain: float = DEFAULT_ALPHA
    feedback_gain: float = DEFAULT_BETA
    phase: float = 0.0
    desync_offset: int = 1

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=float)
        object.__setattr__(self, "mask", mask)
        if self.n_nodes < 1:
            raise InvalidParameterError(f"n_nodes must be >= 1, got {self.n_nodes}")
        if mask.shape != (self.n_nodes,):
            raise InvalidParameterError(
                f"mask has shape {mask.shape}, expected ({self.n_nodes},)"
            )
        if not np.all(np.isfinite(mask)) or np.any(np.abs(mask) > 1.0):
            raise InvalidParameterError("mask entries must lie in [-1, 1]")
        if not self.theta > 0:
            raise InvalidParameterError(f"theta must be positive, got {self.theta}")
        if not 0 <= self.desync_offset < self.n_nodes:
            raise InvalidParameterError(
                f"desync_offset must be in [0, {self.n_nodes}), got {self.desync_offset}"
            )
        if abs(self.feedback_gain) >= 1.0:
            warnings.warn(
                f"|feedback_gain| = {abs(self.feedback_gain)} >= 1: fading memory "
                "of the initial state is not guaranteed",
                RuntimeWarning,
                stacklevel=3,
            )

    @property
    def loop_duration(self) -> float:
        """Duration ``theta * N`` of one input period."""
        return self.theta * self.n_nodes

    @property
    def delay_duration(self) -> float:
        """Delay line duration ``(N + k) * theta``."""
        return self.theta * (self.n_nodes + self.desync_offset)


@dataclass(frozen=True)
class StateTrace:
    """Node states ``x_i(n)`` stored as an array of shape ``(n_nodes, length)``."""

    states: np.ndarray
    washout: int = field(default=DEFAULT_WASHOUT)

    @property
    def n_nodes(self) -> int:
        return self.states.shape[0]

    @property
    def length(self) -> int:
        return self.states.shape[1]

    @property
    def design(self) -> np.ndarray:
        """States laid out as a ``(length, n_nodes)`` design matrix."""
        return self.states.T


def evolve(
    alphas: np.ndarray,
    betas: np.ndarray,
    phases: np.ndarray,
    mask: np.ndarray,
    inputs: np.ndarray,
    initial_state: np.ndarray,
    desync_offset: int = 1,
) -> np.ndarray:
    """Run a batch of reservoirs sharing mask, input and initial state.

    Every batch member uses the same arithmetic as a batch of one, so results
    are bit-identical to separate runs.

    Returns:
        Array of shape ``(batch, length, n_nodes)``.
    """
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    phases = np.atleast_1d(np.asarray(phases, dtype=float))
    batch = alphas.shape[0]
    if betas.shape != (batch,) or phases.shape != (batch,):
        raise InvalidParameterError("alphas, betas and phases must have equal length")
    n = mask.shape[0]
    k = int(desync_offset)

    gain_mask = alphas[:, None] * mask[None, :]
    beta = betas[:, None]
    phi = phases[:, None]
    out = np.empty((batch, inputs.shape[0], n))
    prev1 = np.broadcast_to(initial_state, (batch, n)).copy()
    prev2 = prev1.copy()
    feedback = np.empty((batch, n))
    for step, u in enumerate(inputs):
        feedback[:, k:] = prev1[:, : n - k]
        feedback[:, :k] = prev2[:, n - k :]
        x = np.sin(gain_mask * u + beta * feedback + phi)
        out[:, step, :] = x
        prev2, prev1 = prev1, x
    return out


def run_reservoir(
    params: ReservoirParams,
    inputs,
    initial_state=None,
    washout: int = DEFAULT_WASHOUT,
) -> StateTrace:
    """Drive the reservoir with an input sequence.

    Args:
        params: reservoir parameters.
        inputs: input sequence ``u(0..L-1)``.
        initial_state: states used for steps ``-1`` and ``-2``; zeros if omitted.
        washout: number of leading steps that downstream code should ignore.
    """
    u = np.asarray(inputs, dtype=float).ravel()
    if not np.all(np.isfinite(u)):
        raise InvalidParameterError("input sequence contains non-finite values")
    if initial_state is None:
        x0 = np.zeros(params.n_nodes)
    else:
        x0 = np.asarray(initial_state, dtype=float).ravel()
        if x0.shape != (params.n_nodes,):
            raise InvalidParameterError(
                f"initial_state has length {x0.size}, expected {params.n_nodes}"
            )
    states = evolve(
        params.input_gain,
        params.feedback_gain,
        params.phase,
        params.mask,
        u,
        x0,
        params.desync_offset,
    )[0]
    return StateTrace(states=states.T.copy(), washout=washout)
