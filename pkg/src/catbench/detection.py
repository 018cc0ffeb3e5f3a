"""Photocounting models: N-fold chopping and single low-efficiency detection.

Both detectors are described by column-stochastic matrices L[k, m] giving the
probability of recording k clicks when m photons arrive; conditioning on a
click count then yields a statistical mixture of heralded pure states whose
spread is quantified by the Shannon entropy of the posterior weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ImpossibleEventError
from .fock import FockVector
from .prepare import vacuum_heralded_state

WEIGHT_TOL = 1e-10


@dataclass(frozen=True)
class ChoppingDetector:
    """Multiport array of `channels` on/off diodes with per-diode efficiency."""

    channels: int
    efficiency: float = 1.0

    def __post_init__(self):
        if self.channels < 1:
            raise ValueError("chopping needs at least one channel")
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in (0, 1]")


@dataclass(frozen=True)
class SingleDetector:
    """One photon-number-resolving detector of low efficiency."""

    efficiency: float

    def __post_init__(self):
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in (0, 1]")


DetectorModel = ChoppingDetector | SingleDetector


def _surjections(m: int, k: int) -> int:
    """Number of ways m labelled photons cover k labelled channels:
    sum_l (-1)^l C(k,l) (k-l)^m, evaluated exactly in integers."""
    total = 0
    for l in range(k + 1):
        total += (-1) ** l * math.comb(k, l) * (k - l) ** m
    return total


def chopping_matrix(channels: int, m_max: int) -> np.ndarray:
    """P[k, m] = C(N,k)/N^m sum_l (-1)^l C(k,l)(k-l)^m for k <= min(m, N).

    The alternating sum is evaluated in exact integer arithmetic (no
    cancellation loss), then converted to float; columns sum to one.
    """
    if channels < 1:
        raise ValueError("channels must be >= 1")
    if m_max < 0:
        raise ValueError("m_max must be >= 0")
    out = np.zeros((m_max + 1, m_max + 1))
    for m in range(m_max + 1):
        denom = channels**m
        for k in range(0, min(m, channels) + 1):
            num = math.comb(channels, k) * _surjections(m, k)
            if num:
                out[k, m] = float(Fraction(num, denom))
    return out


def bernoulli_matrix(eta: float, m_max: int) -> np.ndarray:
    """Binomial loss map M[l, m] = C(m,l) eta^l (1-eta)^{m-l} for l <= m."""
    if not 0.0 < eta <= 1.0:
        raise ValueError("efficiency must lie in (0, 1]")
    out = np.zeros((m_max + 1, m_max + 1))
    for m in range(m_max + 1):
        for l in range(m + 1):
            out[l, m] = math.comb(m, l) * eta**l * (1.0 - eta) ** (m - l)
    return out


def compose_chopping_loss(channels: int, eta: float, m_max: int) -> np.ndarray:
    """Loss in front of the multiport: P_{N,eta} = P_N . M(eta)."""
    return chopping_matrix(channels, m_max) @ bernoulli_matrix(eta, m_max)


def detector_matrix(model: DetectorModel, m_max: int) -> np.ndarray:
    if isinstance(model, ChoppingDetector):
        return compose_chopping_loss(model.channels, model.efficiency, m_max)
    return bernoulli_matrix(model.efficiency, m_max)


def _clean_prior(prior) -> np.ndarray:
    prior = np.asarray(prior, dtype=float)
    if np.any(prior < -WEIGHT_TOL):
        raise ValueError("prior probabilities must be nonnegative")
    total = prior.sum()
    if total > 1.0 + WEIGHT_TOL or total <= 0.0:
        raise ValueError(f"prior sums to {total}, expected (0, 1]")
    return np.clip(prior, 0.0, None) / total


def click_prior(matrix: np.ndarray, prior) -> np.ndarray:
    """Unconditional probability of each click count: sum_m L[k,m] P(m)."""
    return matrix @ _clean_prior(prior)


def posterior_weights(matrix: np.ndarray, prior, k: int) -> np.ndarray:
    """Bayes posterior P(m|k) = L[k,m] P(m) / sum_m' L[k,m'] P(m')."""
    prior = _clean_prior(prior)
    if not 0 <= k < matrix.shape[0]:
        raise ValueError(f"click count {k} outside the matrix range")
    w = matrix[k] * prior
    z = w.sum()
    if z < 1e-300:
        raise ImpossibleEventError(f"impossible event: click count {k} has zero prior")
    return w / z


def shannon_entropy(weights) -> float:
    """-sum w ln w in nats, with 0 ln 0 = 0."""
    w = np.asarray(weights, dtype=float)
    w = w[w > 0.0]
    return float(-np.sum(w * np.log(w)))


@dataclass(frozen=True)
class ConditionalMixture:
    """Posterior mixture of heralded states after recording k clicks.

    Components are the vacuum-ancilla heralded states |Psi_m> of the shared
    transmitted squeeze parameter; weights[m] = 0 for m < k since detection
    losses only remove photons.
    """

    k: int
    weights: np.ndarray
    kappa_p: complex

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"mixture weights sum to {w.sum()}, expected 1")
        if np.any(w < -WEIGHT_TOL):
            raise ValueError("mixture weights must be nonnegative")
        if np.any(w[: self.k] > WEIGHT_TOL):
            raise ValueError("losses only remove photons: weights[m] = 0 for m < k")
        object.__setattr__(self, "weights", np.clip(w, 0.0, None))

    def component_states(self, dim: int, weight_floor: float = 1e-12) -> dict[int, FockVector]:
        return {
            m: vacuum_heralded_state(m, self.kappa_p, dim)
            for m, w in enumerate(self.weights)
            if w > weight_floor
        }

    def entropy(self) -> float:
        return shannon_entropy(self.weights)


def conditional_mixture(model: DetectorModel, prior, k: int, kappa_p: complex) -> ConditionalMixture:
    prior = _clean_prior(prior)
    matrix = detector_matrix(model, len(prior) - 1)
    return ConditionalMixture(k, posterior_weights(matrix, prior, k), kappa_p)


def entropy_vs_channels(prior, k: int, eta: float, channels_list) -> np.ndarray:
    """Chopping-mixture entropy for each channel count at fixed clicks."""
    prior = _clean_prior(prior)
    m_max = len(prior) - 1
    out = np.empty(len(channels_list))
    for i, n_ch in enumerate(channels_list):
        matrix = compose_chopping_loss(int(n_ch), eta, m_max)
        out[i] = shannon_entropy(posterior_weights(matrix, prior, k))
    return out


def purity_limit_report(
    prior,
    k: int,
    single_etas=(0.9, 0.99, 0.999),
    chopping_channels=(100, 1000, 10000),
    chopping_eta: float = 1.0 - 1e-6,
) -> dict:
    """Numerical check of the pure-state limits: the single-detector entropy
    vanishes as eta -> 1, and the chopping entropy vanishes as eta -> 1 with
    a growing channel count.  Returns the sequences and monotonicity flags."""
    prior = _clean_prior(prior)
    m_max = len(prior) - 1
    s_single = [
        shannon_entropy(posterior_weights(bernoulli_matrix(eta, m_max), prior, k))
        for eta in single_etas
    ]
    s_chop = [
        shannon_entropy(
            posterior_weights(compose_chopping_loss(int(n), chopping_eta, m_max), prior, k)
        )
        for n in chopping_channels
    ]
    return {
        "single": {"etas": list(single_etas), "entropies": s_single},
        "chopping": {
            "channels": [int(n) for n in chopping_channels],
            "eta": chopping_eta,
            "entropies": s_chop,
        },
        "single_monotone_to_zero": all(
            a > b for a, b in zip(s_single, s_single[1:])
        )
        and s_single[-1] < 0.05,
        "chopping_monotone_to_zero": all(a > b for a, b in zip(s_chop, s_chop[1:]))
        and s_chop[-1] < 0.05,
    }
