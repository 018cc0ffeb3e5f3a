"""Conditional state preparation on a lossless beam splitter.

A squeezed vacuum enters port 1, an n-photon Fock state enters port 2, and
photocounting of m photons in output port 2 heralds a cat-like state in
output port 1.  The module provides

* a brute-force two-mode oracle (explicit SU(2) matrix elements),
* the closed-form photon-number expansion of the heralded state,
* an equivalent operator construction (ladder operators acting on a
  diagonal Jacobi-polynomial weighting of the transmitted squeezed vacuum),
* normalization constants and heralding probabilities, including the
  Legendre-polynomial closed forms of the vacuum-port special case n = 0.

Conventions: T = t e^{i phi_T}, R = r e^{i phi_R} with t^2 + r^2 = 1; the
unitary maps creation operators as a1+ -> T a1+ - R* a2+ and
a2+ -> R a1+ + T* a2+.  The transmitted squeeze parameter is kappa' = T^2 kappa.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import ImpossibleEventError, NumericalError, TruncationError
from .fock import (
    FockVector,
    SqueezeParams,
    apply_annihilation,
    apply_creation,
    jacobi_poly,
    legendre,
    log_binomial,
    log_factorial,
    signed_log_sum,
    squeezed_vacuum,
)

DEFAULT_DIM = 128
_TAIL_TOL = 1e-12
_SERIES_REL = 1e-16
_SERIES_RUN = 20


@dataclass(frozen=True)
class BeamSplitterParams:
    """Beam splitter amplitudes |T| = cos(theta), |R| = sin(theta) and phases."""

    t_mag: float
    r_mag: float
    phi_t: float = 0.0
    phi_r: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.t_mag < 1.0 and 0.0 < self.r_mag < 1.0):
            raise ValueError("|T| and |R| must lie strictly inside (0, 1)")
        if abs(self.t_mag**2 + self.r_mag**2 - 1.0) > 1e-12:
            raise ValueError("|T|^2 + |R|^2 must equal 1")

    @classmethod
    def from_transmittance(cls, t_sq: float, phi_t: float = 0.0, phi_r: float = 0.0):
        """Construct from the intensity transmittance |T|^2."""
        if not 0.0 < t_sq < 1.0:
            raise ValueError("transmittance must lie strictly inside (0, 1)")
        return cls(math.sqrt(t_sq), math.sqrt(1.0 - t_sq), phi_t, phi_r)

    @property
    def T(self) -> complex:
        return self.t_mag * cmath.exp(1j * self.phi_t)

    @property
    def R(self) -> complex:
        return self.r_mag * cmath.exp(1j * self.phi_r)

    @property
    def theta(self) -> float:
        return math.atan2(self.r_mag, self.t_mag)


@dataclass(frozen=True)
class PreparationConfig:
    """All physical parameters of one heralded preparation."""

    bs: BeamSplitterParams
    sq: SqueezeParams
    n: int
    m: int
    dim: int = DEFAULT_DIM

    def __post_init__(self):
        if self.n < 0 or self.m < 0:
            raise ValueError("photon counts must be >= 0")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if abs(self.kappa_p) >= 1.0:
            raise ValueError("|kappa'| must be < 1")

    @property
    def nu(self) -> int:
        return self.n - self.m

    @property
    def mu(self) -> int:
        return max(0, self.nu)

    @property
    def delta(self) -> int:
        return self.mu - self.nu

    @property
    def kappa(self) -> complex:
        return self.sq.kappa

    @property
    def kappa_p(self) -> complex:
        """Transmitted squeeze parameter kappa' = T^2 kappa."""
        return self.bs.T**2 * self.sq.kappa

    @property
    def is_cat_like(self) -> bool:
        """n = m = 0 leaves a plain transmitted squeezed vacuum."""
        return self.n + self.m > 0


@dataclass(frozen=True)
class TwoModeArray:
    """Pure-state amplitudes over photon-number pairs (p1, p2)."""

    amps: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.amps, dtype=complex)
        if arr.ndim != 2:
            raise ValueError("TwoModeArray needs a 2-d amplitude grid")
        if not np.all(np.isfinite(arr.view(float))):
            raise ValueError("TwoModeArray amplitudes must be finite")
        total = float(np.sum(np.abs(arr) ** 2))
        if total > 1.0 + 1e-12:
            raise ValueError(f"two-mode norm {total} exceeds 1 (unitarity violated)")
        object.__setattr__(self, "amps", arr)

    @property
    def dim(self) -> int:
        return self.amps.shape[0]


def beam_splitter_output(in1: FockVector, n: int, bs: BeamSplitterParams) -> TwoModeArray:
    """Apply the two-mode unitary to in1 (x) |n> by explicit matrix elements.

    The amplitude on |k, l> is a finite binomial sum over the ways the p + n
    input photons redistribute; total photon number is conserved, so the
    output grid has side in1.dim + n.
    """
    if n < 0:
        raise ValueError("Fock input n must be >= 0")
    if not in1.is_normalized(1e-10):
        raise ValueError("input state must be normalized")
    top = abs(in1.amps[-1]) ** 2
    if top > 1e-10:
        raise TruncationError(
            f"input carries weight {top:.3e} at the top of its truncation",
            required_dim=in1.dim + 8,
        )

    dim_out = in1.dim + n
    lgf = np.array([log_factorial(i) for i in range(dim_out + 1)])
    lt = math.log(bs.t_mag)
    lr = math.log(bs.r_mag)
    out = np.zeros((dim_out, dim_out), dtype=complex)

    for p in range(in1.dim):
        c_p = in1.amps[p]
        if c_p == 0:
            continue
        i = np.arange(p + 1)
        log_c_pi = lgf[p] - lgf[i] - lgf[p - i]
        for j in range(n + 1):
            k = i + j
            l = p + n - k
            log_mag = (
                log_c_pi
                + (lgf[n] - lgf[j] - lgf[n - j])
                + 0.5 * (lgf[k] + lgf[l] - lgf[p] - lgf[n])
                + (i + n - j) * lt
                + (p - i + j) * lr
            )
            phase_angle = (i - (n - j)) * bs.phi_t + (j - (p - i)) * bs.phi_r
            sign = np.where((p - i) % 2 == 0, 1.0, -1.0)
            out[k, l] += c_p * sign * np.exp(log_mag + 1j * phase_angle)
    return TwoModeArray(out)


def conditional_state(out: TwoModeArray, m: int) -> tuple[FockVector, float]:
    """Project output port 2 onto |m>; returns the normalized remainder and
    the probability of the event."""
    if not 0 <= m < out.amps.shape[1]:
        raise ValueError(f"detected count {m} outside the array range")
    slice_m = out.amps[:, m]
    prob = float(np.sum(np.abs(slice_m) ** 2))
    if prob < 1e-300:
        raise ImpossibleEventError(
            f"impossible outcome: probability of detecting m={m} is {prob:.3e}"
        )
    return FockVector(slice_m / math.sqrt(prob)), prob


def fix_global_phase(v: FockVector) -> FockVector:
    """Rotate the global phase so the first significant amplitude is real > 0."""
    mags = np.abs(v.amps)
    peak = mags.max()
    if peak == 0.0:
        raise ValueError("zero vector has no phase convention")
    idx = int(np.argmax(mags > 1e-12 * peak))
    ref = v.amps[idx]
    return FockVector(v.amps * (abs(ref) / ref))


def _parity_start(nu: int, mu: int) -> int:
    """Smallest populated photon number: p >= mu with p - nu even."""
    return mu if (mu - nu) % 2 == 0 else mu + 1


def _heralded_log_coeffs(cfg: PreparationConfig, p_values: np.ndarray):
    """Unnormalized log-magnitudes and signs of the closed-form coefficients.

    c_p ~ sum_{k=mu}^{n} (-r^2)^k / (k-nu)! C(n,k) * (p!)^{-1/2}
          (p-nu+k)! / ((p-nu)/2)! * (kappa'/2)^{(p-nu)/2}
    restricted to p >= mu with p - nu even.
    """
    nu, mu, n = cfg.nu, cfg.mu, cfg.n
    akp = abs(cfg.kappa_p)
    lr2 = 2.0 * math.log(cfg.bs.r_mag)
    log_mags = np.full(p_values.size, -np.inf)
    signs = np.zeros(p_values.size)
    for idx, p in enumerate(p_values):
        q = (p - nu) // 2
        if akp == 0.0 and q > 0:
            continue
        k_logs = []
        k_signs = []
        for k in range(mu, n + 1):
            k_logs.append(
                k * lr2
                - log_factorial(k - nu)
                + log_binomial(n, k)
                + log_factorial(2 * q + k)
            )
            k_signs.append(1.0 if k % 2 == 0 else -1.0)
        lk, sk = signed_log_sum(k_logs, k_signs)
        if sk == 0.0:
            continue
        common = -0.5 * log_factorial(p) - log_factorial(q)
        if q > 0:
            common += q * (math.log(akp) - math.log(2.0))
        log_mags[idx] = lk + common
        signs[idx] = sk
    return log_mags, signs


def heralded_state(cfg: PreparationConfig, tail_tol: float = _TAIL_TOL) -> FockVector:
    """Normalized heralded state from the closed-form photon-number expansion.

    Amplitudes vanish for p < mu and for p - nu odd; phases follow the powers
    of the complex kappa'.  Raises TruncationError when cfg.dim leaves more
    than tail_tol of the state outside the truncation.
    """
    nu, mu = cfg.nu, cfg.mu
    start = _parity_start(nu, mu)
    p_ext = cfg.dim + 512
    p_values = np.arange(start, p_ext, 2)
    log_mags, signs = _heralded_log_coeffs(cfg, p_values)
    log_w = 2.0 * log_mags
    finite = np.isfinite(log_w)
    if not finite.any():
        raise ImpossibleEventError(
            f"conditioning on m={cfg.m} has zero probability for this input"
        )
    peak = log_w[finite].max()
    w = np.exp(log_w - peak)
    total = float(w.sum())
    head = float(w[p_values < cfg.dim].sum())
    tail = (total - head) / total
    if tail > tail_tol:
        cum = np.cumsum(w) / total
        enough = np.nonzero(1.0 - cum <= tail_tol)[0]
        if enough.size == 0:
            raise TruncationError("state tail does not decay inside the probed range")
        req = int(p_values[enough[0]]) + 1
        raise TruncationError(
            f"truncation too small: dim={cfg.dim} leaves tail {tail:.3e} "
            f"> {tail_tol:.1e}; need dim >= {req}",
            required_dim=req,
        )

    amps = np.zeros(cfg.dim, dtype=complex)
    inside = p_values < cfg.dim
    kp = cfg.kappa_p
    phase = kp / abs(kp) if abs(kp) > 0 else 1.0
    q = (p_values[inside] - nu) // 2
    amps[p_values[inside]] = (
        signs[inside] * np.exp(log_mags[inside] - 0.5 * peak) * phase**q
    )
    return FockVector(amps).normalized()


def heralded_state_operator_form(
    cfg: PreparationConfig, tail_tol: float = _TAIL_TOL
) -> FockVector:
    """Equivalent construction: a diagonal Jacobi-polynomial weighting of the
    transmitted squeezed vacuum followed by |nu| ladder applications.

    On the basis state |p> the polynomial's second parameter evaluates to
    p - m; photon subtraction (n < m) applies a^{|nu|}, photon addition
    (n > m) applies (a+)^{nu}.
    """
    # annihilation shifts support downward, so give the workspace |nu| extra
    # levels to fill the requested truncation exactly
    dim_work = cfg.dim + (abs(cfg.nu) if cfg.nu < 0 else 0)
    sv = squeezed_vacuum(cfg.kappa_p, dim_work, tail_tol)
    order = min(cfg.n, cfg.m)
    alpha = abs(cfg.nu)
    z = 2.0 * cfg.bs.t_mag**2 - 1.0
    weights = np.array(
        [jacobi_poly(order, alpha, p - cfg.m, z) for p in range(dim_work)]
    )
    v = FockVector(sv.amps * weights)
    for _ in range(abs(cfg.nu)):
        v = apply_annihilation(v) if cfg.nu < 0 else apply_creation(v)
    if v.norm_sq() == 0.0:
        raise ImpossibleEventError(
            f"conditioning on m={cfg.m} has zero probability for this input"
        )
    return FockVector(v.amps[: cfg.dim]).normalized()


def _norm_series_log(k: int, j: int, nu: int, akp: float, p_cap: int) -> float:
    """log of sum_{p=eps}^inf (2p+k)!(2p+j)! / ((p!)^2 (2p+nu)! 4^p) |kappa'|^{2p}."""
    eps = max(0, math.floor((1 - nu) / 2))
    if akp == 0.0:
        if eps > 0:
            return -math.inf
        return log_factorial(k) + log_factorial(j) - log_factorial(nu)
    logs = []
    best = -math.inf
    quiet = 0
    p = eps
    while True:
        term = (
            log_factorial(2 * p + k)
            + log_factorial(2 * p + j)
            - 2.0 * log_factorial(p)
            - log_factorial(2 * p + nu)
            - p * math.log(4.0)
            + 2.0 * p * math.log(akp)
        )
        logs.append(term)
        best = max(best, term)
        quiet = quiet + 1 if term - best < math.log(_SERIES_REL) else 0
        if quiet >= _SERIES_RUN:
            break
        p += 1
        if p - eps > p_cap:
            raise NumericalError(
                f"normalization series did not converge within {p_cap} terms"
            )
    log_sum, sign = signed_log_sum(logs, np.ones(len(logs)))
    assert sign > 0
    return log_sum


def normalization_constant_log(cfg: PreparationConfig) -> float:
    """log of the closed-form normalization of the heralded state expansion."""
    nu, mu, n = cfg.nu, cfg.mu, cfg.n
    akp = abs(cfg.kappa_p)
    lr2 = 2.0 * math.log(cfg.bs.r_mag)
    p_cap = max(4 * cfg.dim, 4000)
    logs = []
    signs = []
    for k in range(mu, n + 1):
        for j in range(mu, n + 1):
            base = (
                (k + j) * lr2
                - log_factorial(k - nu)
                - log_factorial(j - nu)
                + log_binomial(n, k)
                + log_binomial(n, j)
            )
            series = _norm_series_log(k, j, nu, akp, p_cap)
            logs.append(base + series)
            signs.append(1.0 if (k + j) % 2 == 0 else -1.0)
    log_n, sign = signed_log_sum(logs, signs)
    if sign <= 0.0:
        raise NumericalError("normalization constant came out non-positive")
    return log_n


def normalization_constant(cfg: PreparationConfig) -> float:
    return math.exp(normalization_constant_log(cfg))


def preparation_probability(cfg: PreparationConfig) -> float:
    """Probability of heralding m counts given the n-photon ancilla:

    P(n,m) = (m!/n!) sqrt(1-|kappa|^2) N_{n,m} / (r^{2 nu} t^{2 m}).
    """
    log_p = (
        log_factorial(cfg.m)
        - log_factorial(cfg.n)
        + 0.5 * math.log1p(-abs(cfg.kappa) ** 2)
        + normalization_constant_log(cfg)
        - 2.0 * cfg.nu * math.log(cfg.bs.r_mag)
        - 2.0 * cfg.m * math.log(cfg.bs.t_mag)
    )
    return math.exp(log_p)


# ---------------------------------------------------------------------------
# Vacuum-ancilla special case (n = 0): independent formula paths used by the
# detection and reconstruction stages.
# ---------------------------------------------------------------------------


def vacuum_heralded_state(
    m: int, kappa_p: complex, dim: int = DEFAULT_DIM, tail_tol: float = _TAIL_TOL
) -> FockVector:
    """Heralded state for vacuum ancilla via the Hermite-number expansion:
    c_p ~ H_{m+p}(0)/sqrt(p!) (-kappa'/2)^{(p+m)/2}, i.e. only photon numbers
    with the parity of m are populated."""
    if m < 0:
        raise ValueError("m must be >= 0")
    akp = abs(kappa_p)
    if akp >= 1.0:
        raise ValueError("|kappa'| must be < 1")
    if akp == 0.0:
        if m > 0:
            raise ImpossibleEventError("vacuum input cannot herald m > 0 counts")
        amps = np.zeros(dim, dtype=complex)
        amps[0] = 1.0
        return FockVector(amps)

    p_values = np.arange(m % 2, dim + 512, 2)
    s = (p_values + m) // 2
    log_mags = np.array(
        [
            log_factorial(2 * si) - log_factorial(si) - 0.5 * log_factorial(pi)
            for pi, si in zip(p_values, s)
        ]
    ) + s * (math.log(akp) - math.log(2.0))
    log_w = 2.0 * log_mags
    peak = log_w.max()
    w = np.exp(log_w - peak)
    total = float(w.sum())
    tail = float(w[p_values >= dim].sum()) / total
    if tail > tail_tol:
        cum = np.cumsum(w) / total
        enough = np.nonzero(1.0 - cum <= tail_tol)[0]
        req = int(p_values[enough[0]]) + 1 if enough.size else None
        raise TruncationError(
            f"truncation too small: dim={dim} leaves tail {tail:.3e}; "
            f"need dim >= {req}",
            required_dim=req,
        )
    amps = np.zeros(dim, dtype=complex)
    inside = p_values < dim
    phase = kappa_p / akp
    amps[p_values[inside]] = np.exp(log_mags[inside] - 0.5 * peak) * phase ** s[inside]
    return FockVector(amps).normalized()


def vacuum_norm_log(m: int, abs_kappa_p: float) -> float:
    """log N_m by direct summation of the squared expansion coefficients."""
    if m < 0:
        raise ValueError("m must be >= 0")
    akp = abs_kappa_p
    if not 0.0 <= akp < 1.0:
        raise ValueError("|kappa'| must lie in [0, 1)")
    if akp == 0.0:
        if m == 0:
            return 0.0
        return -math.inf
    logs = []
    best = -math.inf
    quiet = 0
    s = (m + 1) // 2
    while True:
        p = 2 * s - m
        term = (
            2.0 * (log_factorial(2 * s) - log_factorial(s))
            - log_factorial(p)
            + 2.0 * s * (math.log(akp) - math.log(2.0))
        )
        logs.append(term)
        best = max(best, term)
        quiet = quiet + 1 if term - best < math.log(_SERIES_REL) else 0
        if quiet >= _SERIES_RUN:
            break
        s += 1
        if s > 200000:
            raise NumericalError("norm series did not converge")
    log_sum, _ = signed_log_sum(logs, np.ones(len(logs)))
    return log_sum


def vacuum_norm_legendre(m: int, abs_kappa_p: float) -> float:
    """Closed form of N_m: (i^m m!/a) (a^2/(1-a^2))^{(m+1)/2} P_m(-i a/sqrt(1-a^2))
    with a = |kappa'|; the Legendre polynomial of imaginary argument combines
    with i^m to a real positive value."""
    a = abs_kappa_p
    if not 0.0 <= a < 1.0:
        raise ValueError("|kappa'| must lie in [0, 1)")
    if a == 0.0:
        return 1.0 if m == 0 else 0.0
    x = a / math.sqrt(1.0 - a * a)
    val = (1j**m) * legendre(m, -1j * x)
    if abs(val.imag) > 1e-8 * max(1.0, abs(val.real)):
        raise NumericalError("Legendre closed form lost realness")
    scale = math.exp(
        log_factorial(m) + m * math.log(a) - 0.5 * (m + 1) * math.log1p(-a * a)
    )
    return scale * val.real


def vacuum_count_probability(m: int, bs: BeamSplitterParams, kappa: complex) -> float:
    """Prior probability of detecting m photons with vacuum ancilla:

    P(m) = i^m r^{2m} |kappa'|^m sqrt(1-|kappa|^2)
           / (t^{2m} (1-|kappa'|^2)^{(m+1)/2}) * P_m(-i a/sqrt(1-a^2)).
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    ak = abs(kappa)
    if ak >= 1.0:
        raise ValueError("|kappa| must be < 1")
    a = bs.t_mag**2 * ak
    if a == 0.0:
        return 1.0 if m == 0 else 0.0
    x = a / math.sqrt(1.0 - a * a)
    val = (1j**m) * legendre(m, -1j * x)
    if abs(val.imag) > 1e-8 * max(1.0, abs(val.real)):
        raise NumericalError("Legendre closed form lost realness")
    log_scale = (
        2.0 * m * math.log(bs.r_mag)
        - 2.0 * m * math.log(bs.t_mag)
        + m * math.log(a)
        + 0.5 * math.log1p(-ak * ak)
        - 0.5 * (m + 1) * math.log1p(-a * a)
    )
    return math.exp(log_scale) * val.real


def photon_count_prior(
    bs: BeamSplitterParams,
    kappa: complex,
    coverage: float = 1.0 - 1e-10,
    m_max: int | None = None,
) -> np.ndarray:
    """Prior P(m) for the vacuum-ancilla source, truncated once the cumulative
    mass exceeds `coverage` and renormalized."""
    probs = []
    cum = 0.0
    m = 0
    limit = m_max if m_max is not None else 10000
    while True:
        p = vacuum_count_probability(m, bs, kappa)
        probs.append(p)
        cum += p
        if m_max is not None and m >= m_max:
            break
        if m_max is None and cum >= coverage:
            break
        m += 1
        if m > limit:
            raise NumericalError("photon prior did not reach the coverage target")
    arr = np.array(probs)
    return arr / arr.sum()
