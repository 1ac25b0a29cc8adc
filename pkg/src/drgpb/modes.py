"""Nominal posterior mode probabilities (Markov prior times mode likelihood)."""
from __future__ import annotations

import numpy as np

from .errors import DegenerateEvidenceError


def predict_mode_prior(mu_prev, Pi) -> np.ndarray:
    """P(theta_k = j | y_{1:k-1}) = sum_i Pi[i, j] mu_prev[i]."""
    return np.asarray(mu_prev, dtype=float) @ np.asarray(Pi, dtype=float)


def update_mode_posterior(mu_prev, Pi, log_likelihoods) -> np.ndarray:
    """Bayes update of the mode distribution, done in the log domain.

    ``log_likelihoods[j]`` is log N(innovation_j; 0, S_j).  Modes with zero
    prior mass stay at zero.
    """
    loglik = np.asarray(log_likelihoods, dtype=float)
    prior = predict_mode_prior(mu_prev, Pi)
    ok = np.isfinite(loglik)
    if not ok.any():
        raise DegenerateEvidenceError("every mode has zero likelihood")
    # remove any common offset before mixing in the prior so it cancels exactly
    rel = np.where(ok, loglik - loglik[ok].max(), -np.inf)
    with np.errstate(divide="ignore"):
        logpost = rel + np.log(prior)
    finite = np.isfinite(logpost)
    if not finite.any():
        raise DegenerateEvidenceError(
            "no mode has both positive prior mass and finite likelihood")
    out = np.exp(np.where(finite, logpost - logpost[finite].max(), -np.inf))
    return out / out.sum()
