"""Mode-matched Kalman filter step and Gaussian log-density."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import NumericalError, SingularInnovationError

LOG_2PI = math.log(2.0 * math.pi)

COND_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class GaussianBelief:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float).reshape(-1))
        object.__setattr__(self, "cov", np.atleast_2d(np.asarray(self.cov, dtype=float)))

    def check(self, tol: float = 1e-10) -> list[str]:
        """Return the list of violated belief invariants (empty if none)."""
        bad = []
        if not np.allclose(self.cov, self.cov.T, rtol=0, atol=tol):
            bad.append("covariance not symmetric")
        elif np.linalg.eigvalsh(self.cov).min() < -tol:
            bad.append("covariance not PSD")
        return bad


@dataclass(frozen=True, eq=False)
class ModeStepOutput:
    """Everything one mode-matched prediction/correction produces."""

    mode: int
    predicted: GaussianBelief
    innovation: np.ndarray
    innovation_cov: np.ndarray
    gain: np.ndarray
    posterior: GaussianBelief
    loglik: float

    @property
    def likelihood(self) -> float:
        return math.exp(self.loglik)


def gaussian_logpdf(residual, cov) -> float:
    """Log of N(residual; 0, cov) via a Cholesky factor."""
    r = np.atleast_1d(np.asarray(residual, dtype=float))
    S = np.atleast_2d(np.asarray(cov, dtype=float))
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        raise NumericalError("covariance is not positive definite") from None
    z = linalg.solve_triangular(L, r, lower=True, check_finite=False)
    logdet = 2.0 * np.log(np.diag(L)).sum()
    return float(-0.5 * (r.size * LOG_2PI + logdet + z @ z))


def _symmetrize(M):
    return 0.5 * (M + M.T)


def kf_step(model, mode: int, prior: GaussianBelief, y, *, step=None,
            joseph: bool = False, cond_floor: float = COND_FLOOR) -> ModeStepOutput:
    """One prediction/correction of the Kalman filter matched to ``mode``.

    The update is ``P = P_pred - K S K^T`` followed by symmetrization; with
    ``joseph=True`` the Joseph form ``(I-KC) P_pred (I-KC)^T + K R K^T`` is
    used instead.  Raises :class:`SingularInnovationError` if the smallest
    eigenvalue of S falls below ``cond_floor`` times the largest.
    """
    A, C = model.A[mode], model.C[mode]
    y = np.atleast_1d(np.asarray(y, dtype=float))

    x_pred = A @ prior.mean
    P_pred = _symmetrize(A @ prior.cov @ A.T + model.process_cov(mode))

    R = model.measurement_cov(mode)
    S = _symmetrize(C @ P_pred @ C.T + R)
    eig = np.linalg.eigvalsh(S)
    if eig[-1] <= 0 or eig[0] < cond_floor * eig[-1]:
        ratio = eig[0] / eig[-1] if eig[-1] > 0 else 0.0
        raise SingularInnovationError(mode, step, ratio)

    chol = np.linalg.cholesky(S)
    # K = P C^T S^-1, solved as S K^T = C P
    K = np.linalg.solve(S, C @ P_pred).T
    resid = y - C @ x_pred
    x_post = x_pred + K @ resid
    if joseph:
        IKC = np.eye(len(x_pred)) - K @ C
        P_post = IKC @ P_pred @ IKC.T + K @ R @ K.T
    else:
        P_post = P_pred - K @ S @ K.T
    P_post = _symmetrize(P_post)

    z = np.linalg.solve(chol, resid)
    logdet = 2.0 * np.log(np.diag(chol)).sum()
    loglik = float(-0.5 * (resid.size * LOG_2PI + logdet + z @ z))

    return ModeStepOutput(
        mode=mode,
        predicted=GaussianBelief(x_pred, P_pred),
        innovation=resid,
        innovation_cov=S,
        gain=K,
        posterior=GaussianBelief(x_post, P_post),
        loglik=loglik,
    )
