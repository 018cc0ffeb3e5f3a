"""Truncated single-mode Fock-space arithmetic and special-function helpers.

States are complex amplitude vectors indexed by photon number 0..dim-1.
Factorial-type quantities are evaluated as log-magnitude plus sign so that
photon numbers of a few hundred stay inside double precision.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import TruncationError

NORM_TOL = 1e-12


def log_factorial(k: int) -> float:
    """ln(k!) for k >= 0."""
    if k < 0:
        raise ValueError(f"factorial of negative argument {k}")
    return math.lgamma(k + 1)


def binomial(n: int, k: int) -> float:
    """Binomial coefficient as a float; 0 for k < 0 or k > n."""
    if k < 0 or k > n:
        return 0.0
    return float(math.comb(n, k))


def log_binomial(n: int, k: int) -> float:
    """ln C(n,k); requires 0 <= k <= n."""
    if k < 0 or k > n:
        raise ValueError(f"binomial index out of range: C({n},{k})")
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k)


def _general_binomial(a: float, r: int) -> float:
    """Generalized binomial C(a, r) = a(a-1)...(a-r+1)/r! for integer r >= 0."""
    if r < 0:
        return 0.0
    out = 1.0
    for i in range(r):
        out *= (a - i) / (i + 1)
    return out


def hermite(k: int, z):
    """Physicists' Hermite polynomial H_k(z), complex and array capable.

    H_0 = 1, H_1 = 2z, H_{k+1} = 2 z H_k - 2 k H_{k-1}.
    """
    if k < 0:
        raise ValueError("Hermite order must be >= 0")
    zz = np.asarray(z, dtype=complex)
    h_prev = np.ones_like(zz)
    if k == 0:
        return h_prev if zz.ndim else complex(h_prev)
    h = 2.0 * zz
    for j in range(1, k):
        h, h_prev = 2.0 * zz * h - 2.0 * j * h_prev, h
    return h if zz.ndim else complex(h)


def hermite_abs2_log(k: int, z) -> np.ndarray:
    """log|H_k(z)|^2 via a rescaled recurrence (safe for large k and |z|)."""
    if k < 0:
        raise ValueError("Hermite order must be >= 0")
    zz = np.atleast_1d(np.asarray(z, dtype=complex))
    h_prev = np.ones_like(zz)
    log_scale = np.zeros(zz.shape, dtype=float)
    if k == 0:
        return 2.0 * (log_scale + _log_abs(h_prev))
    h = 2.0 * zz
    for j in range(1, k):
        h, h_prev = 2.0 * zz * h - 2.0 * j * h_prev, h
        mag = np.abs(h)
        mag[mag == 0.0] = 1.0
        h = h / mag
        h_prev = h_prev / mag
        log_scale += np.log(mag)
    return 2.0 * (log_scale + _log_abs(h))


def _log_abs(arr):
    with np.errstate(divide="ignore"):
        return np.log(np.abs(arr))


def legendre(k: int, z):
    """Legendre polynomial P_k(z); accepts complex argument."""
    if k < 0:
        raise ValueError("Legendre order must be >= 0")
    zz = np.asarray(z, dtype=complex)
    p_prev = np.ones_like(zz)
    if k == 0:
        return p_prev if zz.ndim else complex(p_prev)
    p = zz.copy()
    for j in range(1, k):
        p, p_prev = ((2 * j + 1) * zz * p - j * p_prev) / (j + 1), p
    return p if zz.ndim else complex(p)


def jacobi_poly(l: int, alpha: float, beta: float, z: float) -> float:
    """Jacobi polynomial P_l^{(alpha,beta)}(z).

    Evaluated through the explicit finite sum with generalized binomials,
    which stays well defined when beta is a negative integer (the operator
    construction feeds beta = p - m with p < m).  Orders used here are small,
    so no recurrence is needed for stability.
    """
    if l < 0:
        raise ValueError("Jacobi order must be >= 0")
    out = 0.0
    for s in range(l + 1):
        out += (
            _general_binomial(l + alpha, l - s)
            * _general_binomial(l + beta, s)
            * (z - 1.0) ** s
            * (z + 1.0) ** (l - s)
        )
    return out / 2.0**l


def signed_log_sum(log_mags, signs) -> tuple[float, float]:
    """Combine signed log-domain terms: returns (log|sum|, sign).

    Stable against the wide dynamic range of factorial series; empty or fully
    cancelled input yields (-inf, 0).
    """
    log_mags = np.asarray(log_mags, dtype=float)
    signs = np.asarray(signs, dtype=float)
    keep = np.isfinite(log_mags)
    if not keep.any():
        return -math.inf, 0.0
    log_mags = log_mags[keep]
    signs = signs[keep]
    m = float(log_mags.max())
    total = float(np.sum(signs * np.exp(log_mags - m)))
    if total == 0.0:
        return -math.inf, 0.0
    return m + math.log(abs(total)), math.copysign(1.0, total)


@dataclass(frozen=True)
class SqueezeParams:
    """Squeeze magnitude and phase; kappa = -e^{i phase} tanh(mag)."""

    xi_mag: float
    xi_phase: float = 0.0

    def __post_init__(self):
        if self.xi_mag < 0:
            raise ValueError("squeeze magnitude must be >= 0")

    @property
    def kappa(self) -> complex:
        return -cmath.exp(1j * self.xi_phase) * math.tanh(self.xi_mag)

    @classmethod
    def from_kappa(cls, kappa: complex) -> "SqueezeParams":
        kappa = complex(kappa)
        if abs(kappa) >= 1.0:
            raise ValueError(f"|kappa| must be < 1, got {abs(kappa)}")
        if kappa == 0:
            return cls(0.0, 0.0)
        return cls(math.atanh(abs(kappa)), cmath.phase(-kappa))


@dataclass(frozen=True)
class FockVector:
    """Complex amplitudes over photon numbers 0..dim-1."""

    amps: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.amps, dtype=complex)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("FockVector needs a 1-d amplitude array of size >= 1")
        if not np.all(np.isfinite(arr.view(float))):
            raise ValueError("FockVector amplitudes must be finite")
        object.__setattr__(self, "amps", arr)

    @property
    def dim(self) -> int:
        return self.amps.size

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm_sq() - 1.0) <= tol

    def normalized(self) -> "FockVector":
        n = math.sqrt(self.norm_sq())
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return FockVector(self.amps / n)

    def inner(self, other: "FockVector") -> complex:
        d = min(self.dim, other.dim)
        return complex(np.vdot(self.amps[:d], other.amps[:d]))


def basis_state(p: int, dim: int) -> FockVector:
    """|p> in a dim-dimensional truncation."""
    if not 0 <= p < dim:
        raise ValueError(f"basis index {p} outside [0, {dim})")
    amps = np.zeros(dim, dtype=complex)
    amps[p] = 1.0
    return FockVector(amps)


def _squeezed_log_weights(abs_kappa: float, count: int) -> np.ndarray:
    """log|c_{2p}|^2 of the squeezed vacuum for p = 0..count-1 (unnormalized
    by the (1-|k|^2)^{1/2} prefactor)."""
    p = np.arange(count)
    if abs_kappa == 0.0:
        out = np.full(count, -np.inf)
        out[0] = 0.0
        return out
    lg = np.array([log_factorial(2 * int(i)) - 2.0 * log_factorial(int(i)) for i in p])
    return lg - 2.0 * p * math.log(2.0) + 2.0 * p * math.log(abs_kappa)


def squeezed_vacuum(sq, dim: int, tail_tol: float = 1e-12) -> FockVector:
    """Squeezed vacuum in the photon-number basis.

    amps[2p] = (1-|k|^2)^{1/4} sqrt((2p)!)/(2^p p!) kappa^p, odd entries zero.
    Raises TruncationError when the neglected tail mass exceeds tail_tol; the
    error carries the dimension that would suffice.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if isinstance(sq, SqueezeParams):
        kappa = sq.kappa
    else:
        kappa = complex(sq)
    if abs(kappa) >= 1.0:
        raise ValueError(f"|kappa| must be < 1, got {abs(kappa)}")

    n_even = (dim + 1) // 2
    prefactor = 0.25 * math.log1p(-abs(kappa) ** 2)
    log_w = _squeezed_log_weights(abs(kappa), n_even) + 2.0 * prefactor
    mass = float(np.sum(np.exp(log_w)))
    tail = max(0.0, 1.0 - mass)
    if tail > tail_tol:
        req = _required_even_dim(abs(kappa), prefactor, tail_tol)
        raise TruncationError(
            f"truncation too small: dim={dim} leaves tail mass {tail:.3e} "
            f"> {tail_tol:.1e}; need dim >= {req}",
            required_dim=req,
        )

    amps = np.zeros(dim, dtype=complex)
    if abs(kappa) == 0.0:
        amps[0] = 1.0
        return FockVector(amps)
    phase = kappa / abs(kappa)
    p = np.arange(n_even)
    amps[0 : 2 * n_even : 2] = np.exp(0.5 * log_w) * phase**p
    return FockVector(amps)


def _required_even_dim(abs_kappa: float, log_prefactor: float, tail_tol: float) -> int:
    cum = 0.0
    p = 0
    while True:
        lw = (
            log_factorial(2 * p)
            - 2.0 * log_factorial(p)
            - 2.0 * p * math.log(2.0)
            + (2.0 * p * math.log(abs_kappa) if abs_kappa > 0 else (0.0 if p == 0 else -math.inf))
            + 2.0 * log_prefactor
        )
        cum += math.exp(lw)
        if 1.0 - cum <= tail_tol:
            return 2 * p + 2
        p += 1
        if p > 100000:
            raise TruncationError("no finite truncation reaches the requested tolerance")


def apply_annihilation(v: FockVector) -> FockVector:
    """Ladder action a|p> = sqrt(p)|p-1>; result is not renormalized."""
    p = np.arange(1, v.dim)
    out = np.zeros(v.dim, dtype=complex)
    out[:-1] = np.sqrt(p) * v.amps[1:]
    return FockVector(out)


def apply_creation(v: FockVector, top_tol: float = 1e-12) -> FockVector:
    """Ladder action a†|p> = sqrt(p+1)|p+1>; result is not renormalized.

    Refuses to act when the top-of-truncation amplitude carries significant
    relative weight, since that weight would be pushed out of range.
    """
    total = v.norm_sq()
    top = abs(v.amps[-1]) ** 2
    if total > 0 and top / total > top_tol:
        raise TruncationError(
            f"creation would overflow truncation: |amps[dim-1]|^2/|v|^2 = "
            f"{top / total:.3e} > {top_tol:.1e}",
            required_dim=v.dim + 1,
        )
    p = np.arange(1, v.dim)
    out = np.zeros(v.dim, dtype=complex)
    out[1:] = np.sqrt(p) * v.amps[:-1]
    return FockVector(out)


def mean_photon_number(v: FockVector) -> float:
    """<n> = sum_p p |amps[p]|^2; requires a normalized vector."""
    if not v.is_normalized():
        raise ValueError(f"vector not normalized: |v|^2 = {v.norm_sq():.15f}")
    p = np.arange(v.dim)
    return float(np.sum(p * np.abs(v.amps) ** 2))
