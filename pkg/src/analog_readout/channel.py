"""Nonlinear wireless channel equalization benchmark."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .errors import InvalidParameterError

SYMBOLS = np.array([-3, -1, 1, 3])

# Tap weights for d(n+2), d(n+1), d(n), ..., d(n-7).
CHANNEL_TAPS = np.array(
    [0.08, -0.12, 1.0, 0.18, -0.1, 0.091, -0.05, 0.04, 0.03, 0.01]
)
# Index of the d(n) tap; taps before it look ahead.
CHANNEL_LEAD = 2
DISTORTION = (1.0, 0.036, -0.011)


@dataclass(frozen=True)
class ChannelDataset:
    """Symbols ``d``, channel output ``q`` and receiver input ``u``.

    ``valid_range`` is the inclusive index interval whose ``q`` values do not
    depend on the zero padding outside the sequence.
    """

    d: np.ndarray
    q: np.ndarray
    u: np.ndarray
    snr_db: float
    seed: int

    @property
    def length(self) -> int:
        return self.d.shape[0]

    @property
    def valid_range(self) -> tuple[int, int]:
        lag = len(CHANNEL_TAPS) - 1 - CHANNEL_LEAD
        return lag, self.length - 1 - CHANNEL_LEAD

    def valid_mask(self) -> np.ndarray:
        lo, hi = self.valid_range
        idx = np.arange(self.length)
        return (idx >= lo) & (idx <= hi)

    def write_csv(self, stream: TextIO) -> None:
        """Write columns ``n, d, q, u``."""
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["n", "d", "q", "u"])
        for n, (d, q, u) in enumerate(zip(self.d, self.q, self.u)):
            writer.writerow([n, int(d), repr(float(q)), repr(float(u))])


def mix_channel(d) -> np.ndarray:
    """Multipath mixing of the symbol stream, zero-padded at both ends."""
    d = np.asarray(d, dtype=float).ravel()
    if d.size == 0:
        return d.copy()
    full = np.convolve(d, CHANNEL_TAPS)
    return full[CHANNEL_LEAD : CHANNEL_LEAD + d.size]


def _noise_std(signal: np.ndarray, snr_db: float) -> float:
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    power = float(np.mean(signal**2)) if signal.size else 0.0
    return math.sqrt(power / 10.0 ** (snr_db / 10.0))


def distort(q, snr_db: float, seed: int) -> np.ndarray:
    """Receiver nonlinearity plus Gaussian noise.

    ``u = q + 0.036 q^2 - 0.011 q^3 + nu``, where the noise variance is the mean
    square of the noiseless distorted signal divided by ``10**(snr_db/10)``.
    ``snr_db = inf`` adds no noise.
    """
    q = np.asarray(q, dtype=float).ravel()
    a1, a2, a3 = DISTORTION
    clean = a1 * q + a2 * q**2 + a3 * q**3
    sigma = _noise_std(clean, float(snr_db))
    if sigma == 0.0:
        return clean
    rng = np.random.default_rng(seed)
    return clean + rng.normal(0.0, sigma, size=clean.shape)


def make_dataset(length: int, snr_db: float, seed: int) -> ChannelDataset:
    """Draw i.i.d. uniform symbols and pass them through the channel."""
    if length < 10:
        raise InvalidParameterError(f"length must be >= 10, got {length}")
    rng = np.random.default_rng(seed)
    d = rng.choice(SYMBOLS, size=int(length))
    noise_seed = int(rng.integers(0, 2**63))
    q = mix_channel(d)
    u = distort(q, snr_db, noise_seed)
    return ChannelDataset(d=d, q=q, u=u, snr_db=float(snr_db), seed=int(seed))
