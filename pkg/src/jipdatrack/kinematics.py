"""Constant-velocity motion model and the soft (probabilistically weighted) Kalman update.

State vectors are ordered ``[x, vx, y, vy]``; measurements are positions ``[x, y]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

from .errors import AssociationContractError, ModelInputError, SingularInnovationError

STATE_DIM = 4
MEAS_DIM = 2

# rows pick x and y out of [x, vx, y, vy]
H = np.array([[1.0, 0.0, 0.0, 0.0],
              [0.0, 0.0, 1.0, 0.0]])

MAX_CONDITION = 1e12
PSD_TOL = 1e-9


def symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def clamp_psd(cov: np.ndarray) -> np.ndarray:
    """Symmetrize and floor negative eigenvalues at zero.

    The eigen-decomposition is only taken when a negative eigenvalue is
    actually present, so well-conditioned covariances pass through untouched
    apart from symmetrization.
    """
    cov = symmetrize(cov)
    w, v = np.linalg.eigh(cov)
    if w[0] >= 0.0:
        return cov
    w = np.clip(w, 0.0, None)
    return symmetrize((v * w) @ v.T)


@dataclass(frozen=True)
class GaussianState:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.covariance, dtype=float)
        if mean.shape != (STATE_DIM,) or cov.shape != (STATE_DIM, STATE_DIM):
            raise ModelInputError(
                f"state must be length {STATE_DIM} with {STATE_DIM}x{STATE_DIM} covariance, "
                f"got {mean.shape} and {cov.shape}"
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ModelInputError("state contains non-finite values")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def position(self) -> np.ndarray:
        return self.mean[[0, 2]]

    @property
    def velocity(self) -> np.ndarray:
        return self.mean[[1, 3]]


@dataclass(frozen=True)
class MotionParams:
    dt: float
    sigma_q: float
    sigma_r: float

    def __post_init__(self):
        for name in ("dt", "sigma_q", "sigma_r"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ModelInputError(f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class MeasurementPrediction:
    z_hat: np.ndarray
    S: np.ndarray
    gain: np.ndarray


def transition_matrix(dt: float) -> np.ndarray:
    block = np.array([[1.0, dt], [0.0, 1.0]])
    return linalg.block_diag(block, block)


def process_noise(dt: float, sigma_q: float) -> np.ndarray:
    """Discrete white-noise-acceleration covariance, block diagonal over x and y."""
    block = sigma_q**2 * np.array([[dt**4 / 4.0, dt**3 / 2.0],
                                   [dt**3 / 2.0, dt**2]])
    return linalg.block_diag(block, block)


def measurement_noise(sigma_r: float) -> np.ndarray:
    return sigma_r**2 * np.eye(MEAS_DIM)


def predict_state(s: GaussianState, p: MotionParams) -> GaussianState:
    F = transition_matrix(p.dt)
    mean = F @ s.mean
    cov = F @ s.covariance @ F.T + process_noise(p.dt, p.sigma_q)
    return GaussianState(mean, symmetrize(cov))


def predict_measurement(s: GaussianState, p: MotionParams) -> MeasurementPrediction:
    """Project a state into measurement space.

    Returns the predicted position, the innovation covariance
    ``S = H P H^T + R`` and the gain ``K = P H^T S^-1`` (computed through a
    Cholesky factor of ``S``).

    Raises:
        SingularInnovationError: if ``S`` is ill conditioned or not positive definite.
    """
    z_hat = H @ s.mean
    S = symmetrize(H @ s.covariance @ H.T + measurement_noise(p.sigma_r))
    cond = np.linalg.cond(S)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularInnovationError(f"innovation covariance condition number {cond:.3g}")
    try:
        factor = linalg.cho_factor(S, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularInnovationError("innovation covariance is not positive definite") from exc
    PHt = s.covariance @ H.T
    gain = linalg.cho_solve(factor, PHt.T).T
    return MeasurementPrediction(z_hat=z_hat, S=S, gain=gain)


def jipda_update(
    s: GaussianState,
    pred: MeasurementPrediction,
    measurements: Sequence[np.ndarray],
    betas: Sequence[float],
    beta0: float,
    tol: float = 1e-9,
) -> GaussianState:
    """Correct a predicted state with a probability-weighted set of measurements.

    The mean moves along the combined innovation ``sum_i beta_i * nu_i``. The
    covariance shrinks by ``(1 - beta0) K S K^T`` and grows by the spread of
    the individual innovations around the combined one.
    """
    betas = np.asarray(betas, dtype=float).reshape(-1)
    if len(measurements) != betas.size:
        raise AssociationContractError(
            f"{betas.size} association weights for {len(measurements)} measurements"
        )
    if np.any(betas < 0) or beta0 < 0:
        raise AssociationContractError("association weights must be non-negative")
    if abs(beta0 + betas.sum() - 1.0) > tol:
        raise AssociationContractError(
            f"association weights sum to {beta0 + betas.sum():.12g}, expected 1"
        )
    if betas.size == 0:
        return s

    Z = np.asarray(measurements, dtype=float).reshape(-1, MEAS_DIM)
    innovations = Z - pred.z_hat
    nu = betas @ innovations
    K = pred.gain
    mean = s.mean + K @ nu
    spread = (innovations.T * betas) @ innovations - np.outer(nu, nu)
    cov = s.covariance - (1.0 - beta0) * (K @ pred.S @ K.T) + K @ spread @ K.T
    return GaussianState(mean, clamp_psd(cov))


def is_psd(cov: np.ndarray, tol: float = PSD_TOL) -> bool:
    """Check symmetry (absolute ``tol``) and PSD relative to the largest eigenvalue."""
    if not np.allclose(cov, cov.T, rtol=0.0, atol=tol):
        return False
    w = np.linalg.eigvalsh(cov)
    return bool(w[0] >= -tol * max(abs(w[-1]), 1.0e-300))
