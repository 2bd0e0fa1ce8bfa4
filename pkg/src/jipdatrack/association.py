"""Elliptical validation gating and gated measurement likelihoods."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg, stats

from .errors import DomainError, SingularInnovationError
from .kinematics import MEAS_DIM, MeasurementPrediction


@dataclass(frozen=True)
class ValidationContext:
    """Gate matrix and gated likelihoods for one frame.

    Rows index measurements, columns index tracks.
    """

    gate_threshold: float
    gate_matrix: np.ndarray
    likelihoods: np.ndarray
    predictions: tuple = field(default=(), repr=False)

    @property
    def n_measurements(self) -> int:
        return self.gate_matrix.shape[0]

    @property
    def n_tracks(self) -> int:
        return self.gate_matrix.shape[1]


def gate_threshold_from_pg(P_G: float, dim: int = MEAS_DIM) -> float:
    """Chi-square quantile ``gamma`` such that ``P(d^2 <= gamma) = P_G``."""
    if not (0.0 < P_G < 1.0):
        raise DomainError(f"gating probability must lie in (0, 1), got {P_G!r}")
    if dim < 1:
        raise DomainError(f"dimension must be >= 1, got {dim!r}")
    if dim == 2:
        return -2.0 * math.log1p(-P_G)
    return float(stats.chi2.ppf(P_G, dim))


def _cholesky(S: np.ndarray):
    try:
        return linalg.cho_factor(S, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularInnovationError("innovation covariance is not positive definite") from exc


def _gated_density(z, z_hat, chol, gamma: float, P_G: float) -> float:
    nu = np.asarray(z, dtype=float) - z_hat
    d2 = float(nu @ linalg.cho_solve(chol, nu))
    if d2 > gamma:
        return 0.0
    L = chol[0]
    log_det = 2.0 * float(np.sum(np.log(np.diag(L))))
    k = nu.size
    log_pdf = -0.5 * (d2 + log_det + k * math.log(2.0 * math.pi))
    return math.exp(log_pdf) / P_G


def gated_likelihood(z, pred: MeasurementPrediction, P_G: float, gamma: float) -> float:
    """Gaussian likelihood of ``z`` scaled by ``1/P_G`` inside the gate, exactly 0 outside.

    A measurement with squared Mahalanobis distance equal to ``gamma`` is inside.
    """
    return _gated_density(z, pred.z_hat, _cholesky(pred.S), gamma, P_G)


def build_validation_context(
    tracks: Sequence[MeasurementPrediction],
    measurements: Sequence[np.ndarray],
    P_G: float,
    gamma: float | None = None,
) -> ValidationContext:
    if gamma is None:
        gamma = gate_threshold_from_pg(P_G)
    m, n = len(measurements), len(tracks)
    g = np.zeros((m, n))
    for j, pred in enumerate(tracks):
        try:
            chol = _cholesky(pred.S)
        except SingularInnovationError as exc:
            raise SingularInnovationError("innovation covariance is not positive definite",
                                          track_index=j) from exc
        for i, z in enumerate(measurements):
            g[i, j] = _gated_density(z, pred.z_hat, chol, gamma, P_G)
    return ValidationContext(
        gate_threshold=gamma,
        gate_matrix=g > 0.0,
        likelihoods=g,
        predictions=tuple(tracks),
    )
