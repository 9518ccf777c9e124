"""Energy-detection sensing formulas and the Monte-Carlo interruption estimate.

Everything works at the probability-formula level; no sample-level detector
simulation. RRH is always the leading array axis so per-sub-carrier
quantities broadcast naturally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian import q_func, q_inv
from .model import SensingParams, UnattainableTargetError

_ALPHA_POLE_GUARD = 1e-9


@dataclass(frozen=True)
class SensingOutcome:
    """Per-sub-carrier detection summary for one channel draw."""

    pd_k: np.ndarray          # detection probability per sub-carrier
    alpha_k: np.ndarray       # cooperative SNR factor per sub-carrier
    min_samples_k: np.ndarray  # integer sample counts (ceil of the raw value)


def alpha(hvwn_snr: float, sensing_gain_sq) -> float | np.ndarray:
    """Cooperative factor sqrt(2*gamma_p*sum_r |h^HU|^2 + 1), >= 1.

    sensing_gain_sq is summed over its first (RRH) axis: (R,) gives a
    scalar, (R, K) gives one value per sub-carrier.
    """
    g = np.asarray(sensing_gain_sq, dtype=float)
    total = g.sum(axis=0)
    out = np.sqrt(2.0 * hvwn_snr * total + 1.0)
    return float(out) if np.ndim(out) == 0 else out


def detection_probability(tau, sampling_freq: float, hvwn_snr: float,
                          sensing_gain_sq, target_pfa) -> float | np.ndarray:
    """Cooperative detection probability for given per-RRH sensing times.

    tau and sensing_gain_sq share the RRH-leading shape ((R,) or (R, K));
    the result is a scalar or per-sub-carrier array. Strictly increasing in
    each tau entry whose sensing gain is positive.
    """
    tau = np.asarray(tau, dtype=float)
    g = np.asarray(sensing_gain_sq, dtype=float)
    if np.any(tau <= 0):
        raise ValueError("sensing times must be positive")
    pfa = np.asarray(target_pfa, dtype=float)
    if np.any(pfa <= 0) or np.any(pfa >= 1):
        raise ValueError("target_pfa must be in (0, 1)")

    a = alpha(hvwn_snr, g)
    qinv_pfa = (q_inv(float(pfa)) if pfa.ndim == 0
                else np.array([q_inv(v) for v in pfa.ravel()]).reshape(pfa.shape))
    accum = (np.sqrt(tau * sampling_freq) * g).sum(axis=0)
    arg = (qinv_pfa - hvwn_snr * accum) / a
    return q_func(arg)


def min_samples(alpha_k: float, target_pfa: float, target_pd: float) -> float:
    """Minimum (real-valued) sample count meeting the target probabilities.

    Diverges as alpha_k -> 1 (no HVWN signal energy at any RRH); that case
    raises UnattainableTargetError. Use min_samples_count for the integer
    ceiling.
    """
    if not (0.0 < target_pfa < 1.0 and 0.0 < target_pd < 1.0):
        raise ValueError("target probabilities must be in (0, 1)")
    if alpha_k < 1.0 + _ALPHA_POLE_GUARD:
        raise UnattainableTargetError(
            f"alpha={alpha_k!r} too close to 1; sensing targets unattainable")
    bracket = q_inv(target_pfa) - q_inv(target_pd) * alpha_k
    return 4.0 / (alpha_k ** 2 - 1.0) ** 2 * bracket ** 2


def min_samples_count(alpha_k: float, target_pfa: float, target_pd: float) -> int:
    return int(math.ceil(min_samples(alpha_k, target_pfa, target_pd)))


def sensing_outcome(tau, params: SensingParams, sensing_gain_sq) -> SensingOutcome:
    """Evaluate detection probability, alpha and sample requirements per k."""
    g = np.atleast_2d(np.asarray(sensing_gain_sq, dtype=float))
    K = g.shape[1]
    pfa = params.pfa_per_subcarrier(K)
    a = alpha(params.hvwn_snr, g)
    pd = detection_probability(tau, params.sampling_freq, params.hvwn_snr, g, pfa)
    counts = np.array([
        min_samples_count(a[k], pfa[k], params.target_pd)
        if a[k] >= 1.0 + _ALPHA_POLE_GUARD else -1
        for k in range(K)
    ])
    return SensingOutcome(pd_k=np.atleast_1d(pd), alpha_k=np.atleast_1d(a),
                          min_samples_k=counts)


def interruption_probability(tau: float, params: SensingParams, num_rrhs: int,
                             num_trials: int, seed: int = 0,
                             gain_sampler=None) -> float:
    """Monte-Carlo probability that targets cannot be met within tau.

    Each trial draws the sensing gains of one sub-carrier across all RRHs
    (|h^HU|^2 ~ Exp(1) by default, matching the unit-variance complex
    Gaussian coefficient) and applies a uniform tau at every RRH; the trial
    is an interruption when the cooperative detection probability falls
    below target_pd. Deterministic given the seed.
    """
    if not (0.0 < tau <= params.frame_len):
        raise ValueError("tau must lie in (0, frame_len]")
    if num_trials < 1:
        raise ValueError("num_trials must be >= 1")
    rng = np.random.default_rng(seed)
    if gain_sampler is None:
        gains = rng.exponential(1.0, size=(num_trials, num_rrhs))
    else:
        gains = np.asarray(gain_sampler(rng, num_trials, num_rrhs), dtype=float)

    pfa = float(np.asarray(params.target_pfa, dtype=float).ravel()[0])
    tau_arr = np.full((num_rrhs, num_trials), tau)
    pd = detection_probability(tau_arr, params.sampling_freq, params.hvwn_snr,
                               gains.T, pfa)
    return float(np.mean(pd < params.target_pd))
