"""Recovery of pure-state quadrature densities from conditional mixtures.

The single-detector scheme is inverted with the alternating inverse-Bernoulli
series; the chopping scheme is inverted in two stages, first undoing the
multiport statistics with the triangular-matrix recursion and then undoing
the diode loss with the same Bernoulli series.  Both act pointwise on
per-click-count quadrature densities (exact curves or histograms).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .detection import compose_chopping_loss


@dataclass(frozen=True)
class MixtureSeries:
    """Per-click-count data on a shared grid: click priors P(k) and the
    corresponding quadrature densities (exact or histogram-estimated)."""

    xs: np.ndarray
    click_priors: np.ndarray
    densities: np.ndarray  # shape (k_count, len(xs))

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        priors = np.asarray(self.click_priors, dtype=float)
        dens = np.asarray(self.densities, dtype=float)
        if dens.ndim != 2 or dens.shape != (priors.size, xs.size):
            raise ValueError("densities must have shape (len(click_priors), len(xs))")
        if np.any(priors < 0.0):
            raise ValueError("click priors must be nonnegative")
        if not (np.all(np.isfinite(priors)) and np.all(np.isfinite(dens))):
            raise ValueError("series entries must be finite")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "click_priors", priors)
        object.__setattr__(self, "densities", dens)

    @property
    def k_count(self) -> int:
        return self.click_priors.size


def default_k_max(click_priors, coverage: float = 1.0 - 1e-8, cap: int = 30) -> int:
    """Smallest k whose cumulative click prior exceeds `coverage`, capped."""
    priors = np.asarray(click_priors, dtype=float)
    cum = np.cumsum(priors) / priors.sum()
    hits = np.nonzero(cum >= coverage)[0]
    k = int(hits[0]) if hits.size else priors.size - 1
    return min(k, cap)


def _bernoulli_coefficient(k: int, m: int, eta: float) -> float:
    """C(k,m) (1 - 1/eta)^{k-m}; the k = m term is 1 also at eta = 1."""
    if k == m:
        return 1.0
    return math.comb(k, m) * (1.0 - 1.0 / eta) ** (k - m)


def invert_bernoulli_series(
    series: MixtureSeries,
    m: int,
    eta: float,
    photon_prior_m: float,
    k_max: int | None = None,
    tail_tol: float | None = None,
) -> np.ndarray:
    """Undo binomial detection loss pointwise:

    p(x|m) = 1/(P(m) eta^m) sum_{k=m}^{k_max} C(k,m) (1-1/eta)^{k-m}
             P_eta(k) p_eta(x|k).

    The series alternates and its terms grow like |1-1/eta|^k, so low
    efficiencies demand fast-decaying click priors; a warning is emitted for
    eta <= 0.5.  The neglected tail is estimated from the available priors
    and raises when `tail_tol` is given and exceeded.
    """
    if eta <= 0.0 or eta > 1.0:
        raise ValueError("efficiency must lie in (0, 1]")
    if m < 0:
        raise ValueError("target count m must be >= 0")
    if photon_prior_m <= 0.0:
        raise ValueError("the target's photon prior must be positive")
    if eta <= 0.5:
        warnings.warn(
            f"inverse Bernoulli at eta={eta} <= 0.5: series terms grow by "
            f"|1-1/eta| = {abs(1 - 1 / eta):.3g} per click count",
            RuntimeWarning,
        )
    if k_max is None:
        k_max = default_k_max(series.click_priors)
    if k_max >= series.k_count:
        raise ValueError(
            f"k_max={k_max} exceeds the available click data (k < {series.k_count})"
        )

    out = np.zeros(series.xs.size)
    for k in range(m, k_max + 1):
        c = _bernoulli_coefficient(k, m, eta)
        if series.click_priors[k] > 0.0:
            out += c * series.click_priors[k] * series.densities[k]
    scale = photon_prior_m * eta**m
    out /= scale

    tail = 0.0
    for k in range(k_max + 1, series.k_count):
        tail += abs(_bernoulli_coefficient(k, m, eta)) * series.click_priors[k]
    tail /= scale
    if tail_tol is not None and tail > tail_tol:
        raise NumericalError(
            f"k_max={k_max} insufficient: estimated tail {tail:.3e} > {tail_tol:.1e}"
        )
    if tail_tol is None and tail > 1e-6:
        warnings.warn(
            f"inverse Bernoulli truncated with estimated tail {tail:.3e}",
            RuntimeWarning,
        )
    return out


def chopping_inverse(channels: int, eta: float, size: int) -> np.ndarray:
    """Inverse of the upper-triangular chopping-with-loss matrix on the
    leading size x size block, by the diagonal recursion

    inv[n, n] = 1/P[n, n],
    inv[n, n+k] = -1/P[n+k, n+k] sum_{j<k} inv[n, n+j] P[n+j, n+k].

    Chopping cannot register more clicks than channels, so size must not
    exceed the channel count.
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    if size > channels + 1:
        raise NumericalError(
            f"singular block: {channels} channels register at most {channels} "
            f"clicks, so only click counts 0..{channels} are invertible"
        )
    p = compose_chopping_loss(channels, eta, size - 1)[:size, :size]
    inv = np.zeros_like(p)
    for n in range(size):
        inv[n, n] = 1.0 / p[n, n]
        for k in range(1, size - n):
            acc = 0.0
            for j in range(k):
                acc += inv[n, n + j] * p[n + j, n + k]
            inv[n, n + k] = -acc / p[n + k, n + k]
    return inv


def invert_chopping_series(
    series: MixtureSeries,
    m: int,
    channels: int,
    eta: float,
    photon_prior_m: float,
    k_max: int | None = None,
) -> np.ndarray:
    """Two-stage inversion of the chopping scheme:

    the inner bracket applies the perfect-multiport inverse to undo the
    coincidence statistics, the outer sum is the inverse Bernoulli in the
    diode efficiency.  Exact only in the infinite-channel limit; for finite
    channel counts a bias of at most the m-th chopping defect
    1 - N!/((N-m)! N^m) remains.
    """
    if m < 0:
        raise ValueError("target count m must be >= 0")
    if photon_prior_m <= 0.0:
        raise ValueError("the target's photon prior must be positive")
    if k_max is None:
        k_max = min(default_k_max(series.click_priors), channels)
    if k_max >= series.k_count:
        raise ValueError(
            f"k_max={k_max} exceeds the available click data (k < {series.k_count})"
        )
    size = k_max + 1
    inv_perfect = chopping_inverse(channels, 1.0, size)

    weighted = series.click_priors[:size, None] * series.densities[:size]
    brackets = inv_perfect @ weighted  # bracket[j] = sum_k inv[j,k] P(k) p_k

    out = np.zeros(series.xs.size)
    for j in range(m, size):
        out += _bernoulli_coefficient(j, m, eta) * brackets[j]
    out /= photon_prior_m * eta**m
    return out


def chopping_defect(channels: int, m: int) -> float:
    """1 - N!/((N-m)! N^m): probability that m photons do not spread over m
    distinct channels; bounds the finite-channel reconstruction bias."""
    if m > channels:
        return 1.0
    acc = 1.0
    for i in range(m):
        acc *= (channels - i) / channels
    return 1.0 - acc


def clip_physical(xs, density) -> np.ndarray:
    """Clip negative excursions and renormalize to unit mass: the 'physical'
    view of a raw reconstruction (raw values keep diagnostic sign noise)."""
    xs = np.asarray(xs, dtype=float)
    d = np.clip(np.asarray(density, dtype=float), 0.0, None)
    mass = np.trapezoid(d, xs)
    if mass <= 0.0:
        raise NumericalError("clipped density has no mass")
    return d / mass
