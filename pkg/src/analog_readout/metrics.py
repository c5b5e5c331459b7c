"""Symbol decisions and symbol error rate."""

from __future__ import annotations

import numpy as np

from .errors import InvalidParameterError

# Decision thresholds between -3|-1, -1|1 and 1|3.
THRESHOLDS = np.array([-2.0, 0.0, 2.0])
_ALPHABET = np.array([-3, -1, 1, 3])


def decide_symbols(y, calibration: tuple[float, float] = (1.0, 0.0)) -> np.ndarray:
    """Round calibrated outputs to the nearest symbol in {-3, -1, 1, 3}.

    ``calibration`` is ``(scale, offset)`` applied as ``y * scale + offset``.
    A value exactly on a threshold goes to the larger symbol.
    """
    scale, offset = calibration
    if not scale > 0:
        raise InvalidParameterError(f"calibration scale must be positive, got {scale}")
    z = np.asarray(y, dtype=float) * scale + offset
    return _ALPHABET[np.searchsorted(THRESHOLDS, z, side="right")]


def symbol_error_rate(pred, truth, scored=None) -> float:
    """Fraction of mismatched symbols.

    Args:
        pred: predicted symbols.
        truth: reference symbols, same length.
        scored: inclusive ``(lo, hi)`` index interval or a boolean mask
            selecting the positions to score; everything if omitted.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise InvalidParameterError(
            f"pred and truth lengths differ: {pred.shape} vs {truth.shape}"
        )
    if scored is None:
        keep = np.ones(pred.shape, dtype=bool)
    elif isinstance(scored, tuple):
        lo, hi = scored
        idx = np.arange(pred.shape[0])
        keep = (idx >= lo) & (idx <= hi)
    else:
        keep = np.asarray(scored, dtype=bool)
        if keep.shape != pred.shape:
            raise InvalidParameterError("scored mask must match the sequence length")
    count = int(keep.sum())
    if count == 0:
        raise InvalidParameterError("scored range is empty")
    return float(np.count_nonzero(pred[keep] != truth[keep]) / count)
