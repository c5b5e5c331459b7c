"""Ridge regression readout training on eta-rescaled states."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import InvalidParameterError, SolverError
from .reservoir import StateTrace

DEFAULT_LAMBDA = 1e-4
WEIGHT_HEADROOM = 0.95


def ridge_fit(design, target, lam: float = DEFAULT_LAMBDA) -> tuple[np.ndarray, float]:
    """Minimize ``||X w + b - y||^2 + lam ||w||^2`` with an unregularized bias.

    The bias is eliminated by centering. Columns are equilibrated to unit norm
    before the normal equations are formed (the penalty is rescaled to match,
    so the minimizer is unchanged), then the system is solved by Cholesky
    factorization. If the factorization fails, a diagonal jitter of
    ``1e-12 * trace / N`` is added once.

    Returns:
        ``(weights, bias)``.
    """
    X = np.asarray(design, dtype=float)
    y = np.asarray(target, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] < 1:
        raise InvalidParameterError(f"design must be a non-empty 2-D array, got {X.shape}")
    if y.shape[0] != X.shape[0]:
        raise InvalidParameterError(
            f"target has length {y.shape[0]}, design has {X.shape[0]} rows"
        )
    if lam < 0 or not np.isfinite(lam):
        raise InvalidParameterError(f"lambda must be a finite non-negative number, got {lam}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise InvalidParameterError("design and target must be finite")

    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    yc = y - y_mean

    norms = np.sqrt(np.einsum("ij,ij->j", Xc, Xc))
    scale = np.where(norms > 0, 1.0 / np.where(norms > 0, norms, 1.0), 1.0)
    Xs = Xc * scale
    gram = Xs.T @ Xs
    gram[np.diag_indices_from(gram)] += lam * scale**2
    rhs = Xs.T @ yc

    try:
        factor = cho_factor(gram, lower=True, check_finite=False)
    except LinAlgError:
        jitter = 1e-12 * np.trace(gram) / gram.shape[0]
        gram[np.diag_indices_from(gram)] += jitter if jitter > 0 else 1e-12
        try:
            factor = cho_factor(gram, lower=True, check_finite=False)
        except LinAlgError as exc:
            raise SolverError("normal equations are singular even after jitter") from exc
    coef = cho_solve(factor, rhs, check_finite=False)
    weights = coef * scale
    bias = float(y_mean - x_mean @ weights)
    if not (np.all(np.isfinite(weights)) and np.isfinite(bias)):
        raise SolverError("ridge solution is not finite")
    return weights, bias


@dataclass(frozen=True)
class TrainedReadout:
    """Readout weights on the hardware scale.

    ``omega`` multiplies the rescaled states ``xi_i = x_i eta_i`` and respects
    ``max |omega_i| <= 0.95 G``. ``omega`` and ``bias`` are the regression
    solution multiplied by ``weight_scale``; dividing a raw readout output by
    ``weight_scale`` recovers the prediction on the target's scale.
    """

    omega: np.ndarray
    bias: float
    eta: np.ndarray
    ridge_lambda: float
    weight_scale: float

    @property
    def calibration(self) -> tuple[float, float]:
        """Affine map ``(scale, offset)`` taking raw outputs to target units."""
        return 1.0 / self.weight_scale, 0.0

    def calibrate(self, raw) -> np.ndarray:
        scale, offset = self.calibration
        return np.asarray(raw, dtype=float) * scale + offset


def train_readout(
    trace: StateTrace,
    eta,
    target,
    lam: float = DEFAULT_LAMBDA,
    washout: int | None = None,
    gain: float = 1.0,
) -> TrainedReadout:
    """Fit readout weights against the eta-rescaled states.

    The regression runs on ``x_i eta_i / eta_N`` so that the penalty acts on
    dimensionless weights; the weights are then expressed against
    ``xi_i = x_i eta_i`` and, when needed, scaled down uniformly so the largest
    has magnitude ``0.95 * gain``.
    """
    eta = np.asarray(eta, dtype=float).ravel()
    y = np.asarray(target, dtype=float).ravel()
    if eta.shape != (trace.n_nodes,):
        raise InvalidParameterError(f"eta has length {eta.size}, expected {trace.n_nodes}")
    if np.any(eta <= 0):
        raise InvalidParameterError("eta must be strictly positive")
    if y.shape != (trace.length,):
        raise InvalidParameterError(
            f"target has length {y.size}, trace has length {trace.length}"
        )
    if washout is None:
        washout = trace.washout
    if not 0 <= washout < trace.length:
        raise InvalidParameterError(f"washout must be in [0, {trace.length}), got {washout}")
    if not gain > 0:
        raise InvalidParameterError(f"gain must be positive, got {gain}")

    eta_ref = eta.max()
    xi = trace.design[washout:] * (eta / eta_ref)
    w_unit, bias = ridge_fit(xi, y[washout:], lam)
    omega = w_unit / eta_ref
    peak = np.max(np.abs(omega))
    scale = min(1.0, WEIGHT_HEADROOM * gain / peak) if peak > 0 else 1.0
    return TrainedReadout(
        omega=omega * scale,
        bias=bias * scale,
        eta=eta,
        ridge_lambda=float(lam),
        weight_scale=float(scale),
    )
