"""Quadrature distributions, detection smearing, Husimi and Wigner functions.

Quadrature convention: <x|p> = H_p(x) e^{-x^2/2} / (pi^{1/4} 2^{p/2} sqrt(p!)),
i.e. vacuum variance 1/2, and the rotated eigenstate is <x,phi| = <x| e^{-i phi n}.
This is the unique scaling under which the closed-form distribution of the
heralded states reduces at m = 0 to the transmitted squeezed-vacuum Gaussian
with width Delta/(2 (1-|kappa'|^2)); every other routine in this module keeps
the same convention (alpha = (x + i y)/sqrt(2) in phase space).
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .fock import (
    FockVector,
    hermite,
    hermite_abs2_log,
    log_factorial,
)
from .prepare import (
    PreparationConfig,
    normalization_constant_log,
    vacuum_norm_log,
)


@dataclass(frozen=True)
class SmearingKernel:
    """Gaussian homodyne-noise kernel of variance sigma = (1 - eta)/(2 eta).

    sigma is the noise *variance*: it is the variance added to rescaled
    quadratures by a detector of efficiency eta when the vacuum variance is
    1/2, and only this reading reproduces the observed loss of interference
    below eta ~ 0.94 for the three-count heralded state.
    """

    eta: float

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError("homodyne efficiency must lie in (0, 1]")

    @property
    def sigma(self) -> float:
        """Noise variance (1 - eta)/(2 eta); zero iff eta = 1."""
        return (1.0 - self.eta) / (2.0 * self.eta)

    @property
    def width(self) -> float:
        """Standard deviation of the kernel."""
        return math.sqrt(self.sigma)


@dataclass(frozen=True)
class QuadratureDistribution:
    """Density of the rotated quadrature at phase phi on a real grid."""

    phi: float
    xs: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        d = np.asarray(self.density, dtype=float)
        if xs.shape != d.shape or xs.ndim != 1:
            raise ValueError("grid and density must be matching 1-d arrays")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(d))):
            raise ValueError("grid and density must be finite")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "density", d)

    def mass(self) -> float:
        return float(np.trapezoid(self.density, self.xs))


def default_grid(x_max: float = 8.0, points: int = 801) -> np.ndarray:
    if points < 11 or x_max <= 0:
        raise ValueError("need x_max > 0 and at least 11 grid points")
    return np.linspace(-x_max, x_max, points)


def auto_grid(density_fn, x_max: float = 8.0, points: int = 801,
              boundary_tol: float = 1e-10, max_doublings: int = 4) -> np.ndarray:
    """Extend the default grid until the boundary density falls below tolerance."""
    for _ in range(max_doublings + 1):
        xs = default_grid(x_max, points)
        d = density_fn(xs)
        if max(d[0], d[-1]) < boundary_tol:
            return xs
        x_max *= 2.0
        points = 2 * points - 1
    raise NumericalError("density does not decay within the probed grid range")


def _delta_and_k(kappa_p: complex, phi: float) -> tuple[float, complex]:
    a = abs(kappa_p)
    delta = 1.0 + a * a + 2.0 * a * math.cos(2.0 * phi - cmath.phase(kappa_p))
    if delta <= 0.0:
        raise NumericalError("quadrature variance factor came out non-positive")
    k = cmath.sqrt((-np.conj(kappa_p) * cmath.exp(2j * phi) - a * a) / delta)
    return delta, k


def quadrature_density(m: int, kappa_p: complex, phi: float, xs) -> QuadratureDistribution:
    """Exact quadrature density of the heralded state (vacuum ancilla):

    p(x,phi|m) = |k'|^m / (2^m N_m sqrt(pi Delta^{m+1}))
                 exp(-(1-|k'|^2) x^2 / Delta) |H_m(K x)|^2,
    Delta = 1 + |k'|^2 + 2|k'| cos(2 phi - arg k'),
    K = sqrt((-conj(k') e^{2 i phi} - |k'|^2) / Delta).

    Evaluated in the log domain so large m stays finite.
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    xs = np.asarray(xs, dtype=float)
    a = abs(kappa_p)
    if a >= 1.0:
        raise ValueError("|kappa'| must be < 1")
    if a == 0.0:
        if m > 0:
            raise ValueError("m > 0 is impossible for kappa' = 0")
        return QuadratureDistribution(phi, xs, np.exp(-xs * xs) / math.sqrt(math.pi))
    delta, k = _delta_and_k(kappa_p, phi)
    log_pref = (
        m * math.log(a)
        - m * math.log(2.0)
        - vacuum_norm_log(m, a)
        - 0.5 * (math.log(math.pi) + (m + 1) * math.log(delta))
    )
    log_density = (
        log_pref
        - (1.0 - a * a) * xs * xs / delta
        + hermite_abs2_log(m, k * xs)
    )
    return QuadratureDistribution(phi, xs, np.exp(log_density))


def quadrature_density_fock(amps, phi: float, xs) -> np.ndarray:
    """Oracle density |<x,phi|psi>|^2 from Fock amplitudes via normalized
    Hermite functions; works for any state in the truncation."""
    if isinstance(amps, FockVector):
        amps = amps.amps
    amps = np.asarray(amps, dtype=complex)
    xs = np.asarray(xs, dtype=float)
    psi = np.zeros(xs.shape, dtype=complex)
    h_prev = np.pi**-0.25 * np.exp(-0.5 * xs * xs)
    h = None
    rot = cmath.exp(-1j * phi)
    rot_p = 1.0 + 0.0j
    psi += amps[0] * rot_p * h_prev
    for p in range(1, amps.size):
        if p == 1:
            h_new = xs * math.sqrt(2.0) * h_prev
        else:
            h_new = xs * math.sqrt(2.0 / p) * h - math.sqrt((p - 1) / p) * h_prev
            h_prev = h
        h = h_new
        rot_p *= rot
        if amps[p] != 0:
            psi += amps[p] * rot_p * h
    return np.abs(psi) ** 2


def quadrature_density_mixture(weights, kappa_p: complex, phi: float, xs,
                               weight_tol: float = 1e-10) -> QuadratureDistribution:
    """Convex combination sum_m P(m|k) p(x,phi|m) over the heralded family."""
    weights = np.asarray(weights, dtype=float)
    if abs(weights.sum() - 1.0) > weight_tol:
        raise ValueError(f"mixture weights sum to {weights.sum()}, expected 1")
    if np.any(weights < -weight_tol):
        raise ValueError("mixture weights must be nonnegative")
    xs = np.asarray(xs, dtype=float)
    density = np.zeros(xs.shape)
    for m, w in enumerate(weights):
        if w <= 1e-15:
            continue
        density += w * quadrature_density(m, kappa_p, phi, xs).density
    return QuadratureDistribution(phi, xs, density)


def smear_density(dist: QuadratureDistribution, kern: SmearingKernel) -> QuadratureDistribution:
    """Convolve a gridded density with the Gaussian homodyne-noise kernel.

    This is the normative smearing path; requires uniform grid spacing
    below a quarter of the kernel width so the kernel is resolved.
    """
    if kern.sigma == 0.0:
        return QuadratureDistribution(dist.phi, dist.xs, dist.density.copy())
    width = kern.width
    dx = float(dist.xs[1] - dist.xs[0])
    if not np.allclose(np.diff(dist.xs), dx, rtol=1e-9, atol=1e-12):
        raise ValueError("smearing requires a uniform grid")
    if dx >= width / 4.0:
        raise NumericalError(
            f"grid too coarse for smearing: spacing {dx:.4g} >= width/4 = {width / 4:.4g}"
        )
    half = int(math.ceil(8.0 * width / dx))
    u = np.arange(-half, half + 1) * dx
    w = np.exp(-0.5 * (u / width) ** 2)
    w /= w.sum()
    return QuadratureDistribution(
        dist.phi, dist.xs, np.convolve(dist.density, w, mode="same")
    )


def _hermite_coefficients(m: int) -> np.ndarray:
    """Monomial coefficients of H_m, index = power."""
    c = np.zeros(m + 1)
    c[0] = 1.0
    if m == 0:
        return c
    prev = c.copy()
    cur = np.zeros(m + 1)
    cur[1] = 2.0
    for j in range(1, m):
        nxt = np.zeros(m + 1)
        nxt[1:] = 2.0 * cur[:-1]
        nxt -= 2.0 * j * prev
        prev, cur = cur, nxt
    return cur


def smeared_density_analytic(m: int, kappa_p: complex, phi: float,
                             kern: SmearingKernel, xs) -> QuadratureDistribution:
    """Closed-form Gaussian smearing of the exact density (cross-check path).

    The y-integration of the convolution is carried out analytically by
    expanding |H_m(K y)|^2 into monomials and using Gaussian moments; kept
    behind this separate entry point as a check on `smear_density`.
    """
    xs = np.asarray(xs, dtype=float)
    var = kern.sigma
    base = quadrature_density(m, kappa_p, phi, xs)
    if var == 0.0:
        return base
    a_mag = abs(kappa_p)
    delta, k = _delta_and_k(kappa_p, phi)
    a = (1.0 - a_mag * a_mag) / delta
    log_pref = (
        m * math.log(a_mag)
        - m * math.log(2.0)
        - vacuum_norm_log(m, a_mag)
        - 0.5 * (math.log(math.pi) + (m + 1) * math.log(delta))
    )
    hc = _hermite_coefficients(m).astype(complex)
    ck = hc * (k ** np.arange(m + 1))
    b = np.convolve(ck, np.conj(ck)).real  # |H_m(K y)|^2 = sum_d b[d] y^d

    beta = 1.0 / (2.0 * var)
    s = a + beta
    y0 = beta * xs / s
    gauss = np.exp(-a * beta * xs * xs / s) / math.sqrt(2.0 * math.pi * var)
    out = np.zeros(xs.shape)
    for d in range(b.size):
        if b[d] == 0.0:
            continue
        moment = np.zeros(xs.shape)
        for r in range(0, d + 1, 2):
            moment += (
                math.comb(d, r)
                * float(np.prod(np.arange(1, r, 2))) / (2.0 * s) ** (r // 2)
                * y0 ** (d - r)
            )
        out += b[d] * moment
    out *= gauss * math.sqrt(math.pi / s) * math.exp(log_pref)
    return QuadratureDistribution(phi, xs, out)


def husimi(amps, x, y) -> np.ndarray:
    """Husimi Q(x, y) = |<alpha|psi>|^2 / (2 pi), alpha = (x + i y)/sqrt(2),
    summed directly over the Fock amplitudes."""
    if isinstance(amps, FockVector):
        amps = amps.amps
    amps = np.asarray(amps, dtype=complex)
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    alpha_c = (x - 1j * y) / math.sqrt(2.0)
    term = np.ones_like(alpha_c)
    psi = amps[0] * term
    for p in range(1, amps.size):
        term = term * alpha_c / math.sqrt(p)
        if amps[p] != 0:
            psi = psi + amps[p] * term
    q = np.abs(psi) ** 2 * np.exp(-(x * x + y * y) / 2.0) / (2.0 * math.pi)
    return q


def husimi_closed_form(cfg: PreparationConfig, x, y) -> np.ndarray:
    """Closed-form Husimi function of the heralded state:

    Q = r^{4 nu} t^{4 m} / (2 pi N_{n,m}) |alpha|^{2 nu} e^{-|alpha|^2}
        exp(Re kappa' conj(alpha)^2)
        |sum_{k=delta}^{m} C(n, nu+k)/k! ((r^2/t^2) w)^k H_k(w)|^2,
    w = sqrt(-kappa'/2) conj(alpha).

    Must agree with the Fock-amplitude evaluation; the k-sum collapses to a
    single term for n = 0.
    """
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    alpha = (x + 1j * y) / math.sqrt(2.0)
    nu, m, n = cfg.nu, cfg.m, cfg.n
    kp = cfg.kappa_p
    t2 = cfg.bs.t_mag**2
    r2 = cfg.bs.r_mag**2
    log_norm = normalization_constant_log(cfg)
    pref = math.exp(
        2.0 * nu * math.log(r2) + 2.0 * m * math.log(t2) - log_norm
    ) / (2.0 * math.pi)

    w = cmath.sqrt(-kp / 2.0) * np.conj(alpha)
    ssum = np.zeros_like(alpha)
    for k in range(cfg.delta, m + 1):
        c = math.comb(n, nu + k) / math.factorial(k)
        if c == 0:
            continue
        ssum = ssum + c * ((r2 / t2) * w) ** k * hermite(k, w)
    abs_a = np.abs(alpha)
    envelope = np.exp(-abs_a**2 + (kp * np.conj(alpha) ** 2).real)

    with np.errstate(divide="ignore", invalid="ignore"):
        q = pref * abs_a ** (2 * nu) * envelope * np.abs(ssum) ** 2

    small = abs_a < 1e-12
    if np.any(small):
        if cfg.mu > 0:
            q = np.where(small, 0.0, q)
        else:
            d = cfg.delta
            if d % 2 == 1:
                limit = 0.0
            else:
                h0 = float(np.real(hermite(d, 0.0)))
                limit = (
                    pref
                    * (abs(kp) / 2.0) ** d
                    * ((r2 / t2) ** d * h0 / math.factorial(d)) ** 2
                )
            q = np.where(small, limit, q)
    return np.real(q)


def wigner(amps, x, y, truncation_warn: float = 1e-8, amp_tol: float = 1e-8) -> np.ndarray:
    """Wigner function via the Fock-basis Laguerre expansion, normalized so
    that the vacuum gives e^{-(x^2+y^2)} / pi and the integral over the plane
    is 1.  Warns when amplitudes near the top of the truncation would
    contribute more than `truncation_warn` of the norm.  Amplitude pairs
    whose product falls below amp_tol^2 are dropped (error << amp_tol)."""
    if isinstance(amps, FockVector):
        amps = amps.amps
    amps = np.asarray(amps, dtype=complex)
    top = float(np.sum(np.abs(amps[-5:]) ** 2)) if amps.size > 5 else 0.0
    if top > truncation_warn * max(float(np.sum(np.abs(amps) ** 2)), 1e-300):
        warnings.warn(
            "Wigner evaluation near truncation edge: top amplitudes carry "
            f"{top:.2e} of the norm",
            RuntimeWarning,
        )
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    r2 = x * x + y * y
    z = 2.0 * r2
    zbar = math.sqrt(2.0) * (x - 1j * y)
    zbar_mag = np.abs(zbar)
    unit = np.where(zbar_mag > 0, zbar / np.where(zbar_mag > 0, zbar_mag, 1.0), 1.0)
    with np.errstate(divide="ignore"):
        log_mag = np.where(zbar_mag > 0, np.log(zbar_mag), -np.inf)

    mags = np.abs(amps)
    mask = mags > amp_tol
    p_eff = int(np.max(np.nonzero(mask))) if mask.any() else 0
    total = np.zeros_like(x, dtype=complex)
    unit_pow = np.ones_like(unit)
    for a in range(0, p_eff + 1):
        pairs = mags[a : p_eff + 1] * mags[: p_eff + 1 - a] > amp_tol * amp_tol
        if pairs.any():
            q_top = int(np.max(np.nonzero(pairs)))
            # seed the recurrence with e^{-r^2} zbar^a / sqrt(a!), which keeps
            # every term bounded by the Wigner matrix-element bound
            if a == 0:
                seed = np.exp(-r2).astype(complex)
            else:
                seed = unit_pow * np.exp(a * log_mag - 0.5 * log_factorial(a) - r2)
            l_prev = seed  # ~ L_0^a, normalized
            l_cur = (1.0 + a - z) / math.sqrt(a + 1.0) * seed
            acc = np.zeros_like(x, dtype=complex)
            for q in range(0, q_top + 1):
                if pairs[q]:
                    coef = amps[q + a] * np.conj(amps[q]) * (-1.0) ** q
                    acc = acc + coef * (l_prev if q == 0 else l_cur)
                if q >= 1:
                    l_prev, l_cur = l_cur, (
                        (2 * q + a + 1 - z) / math.sqrt((q + 1) * (q + a + 1)) * l_cur
                        - math.sqrt(q * (q + a) / ((q + 1) * (q + a + 1))) * l_prev
                    )
            if a == 0:
                total = total + acc
            else:
                total = total + 2.0 * acc.real
        if a < p_eff:
            unit_pow = unit_pow * unit
    return np.real(total) / math.pi


def fringe_contrast(xs, density) -> float:
    """(max - min)/(max + min) over the three interior extrema closest to
    x = 0; returns 0 when fewer than three extrema exist (no fringes).

    Extrema carrying less than 1% of the peak only count when they sit
    between two significant ones: that keeps the genuine zero-minima of
    interference fringes while ignoring stray wiggles in the empty tails of
    sampled histograms.
    """
    xs = np.asarray(xs, dtype=float)
    density = np.asarray(density, dtype=float)
    slopes = np.sign(np.diff(density))
    extrema = []
    last_sign = 0.0
    for i, s in enumerate(slopes):
        if s == 0.0:
            continue
        if last_sign != 0.0 and s != last_sign:
            extrema.append(i)
        last_sign = s
    floor = 0.01 * float(density.max())
    significant = [e for e in extrema if density[e] > floor]
    if significant:
        lo_i, hi_i = min(significant), max(significant)
        extrema = [e for e in extrema if density[e] > floor or lo_i < e < hi_i]
    else:
        extrema = []
    if len(extrema) < 3:
        return 0.0
    central = sorted(extrema, key=lambda i: abs(xs[i]))[:3]
    vals = density[central]
    hi, lo = float(vals.max()), float(vals.min())
    if hi + lo <= 0.0:
        return 1.0
    return (hi - lo) / (hi + lo)
