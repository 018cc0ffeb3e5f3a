"""Monte Carlo homodyne records and full virtual experiments.

Sampling is inverse-CDF on precomputed cumulative grids, partitioned into
fixed-size chunks whose RNG streams derive from the run seed by a
splitmix-style mix of the chunk index, so serial and parallel runs produce
byte-identical data.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .detection import (
    ConditionalMixture,
    DetectorModel,
    click_prior,
    detector_matrix,
    posterior_weights,
    shannon_entropy,
)
from .phase_space import (
    QuadratureDistribution,
    SmearingKernel,
    quadrature_density,
    quadrature_density_mixture,
    smear_density,
)
from .prepare import BeamSplitterParams, photon_count_prior
from .reconstruction import (
    MixtureSeries,
    clip_physical,
    default_k_max,
    invert_bernoulli_series,
    invert_chopping_series,
)

CHUNK_SIZE = 65536
_CDF_POINTS = 4001


def _splitmix64(x: int) -> int:
    """One splitmix64 scrambling step (Steele et al.)."""
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def chunk_seed(seed: int, chunk_index: int) -> int:
    """Derived stream seed for one chunk: seed xor splitmix(index)."""
    return (seed & 0xFFFFFFFFFFFFFFFF) ^ _splitmix64(chunk_index + 1)


@dataclass(frozen=True)
class HistogramSpec:
    """Binning for sampled quadrature records."""

    x_min: float = -8.0
    x_max: float = 8.0
    bins: int = 101

    def __post_init__(self):
        if self.bins < 10:
            raise ValueError("need at least 10 bins")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.bins + 1)

    @property
    def centers(self) -> np.ndarray:
        e = self.edges
        return 0.5 * (e[:-1] + e[1:])

    @property
    def width(self) -> float:
        return (self.x_max - self.x_min) / self.bins


@dataclass(frozen=True)
class SampleBatch:
    """One reproducible batch of quadrature samples."""

    phi: float
    values: np.ndarray
    seed: int
    source: str


class _InverseCdf:
    """Exact inverse of the trapezoid CDF of a gridded density.

    Within each cell the CDF is quadratic (the density is interpolated
    linearly), so the inversion solves that quadratic; the sampled
    distribution is then exactly the piecewise-linear density rather than
    the piecewise-constant one a linear CDF interpolation would give.
    """

    def __init__(self, xs: np.ndarray, density: np.ndarray):
        density = np.clip(np.asarray(density, dtype=float), 0.0, None)
        h = np.diff(xs)
        cdf = np.concatenate(([0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * h)))
        if cdf[-1] <= 0.0:
            raise NumericalError("cannot sample from a density with no mass")
        norm = cdf[-1]
        cdf = np.maximum.accumulate(cdf / norm)
        if np.any(np.diff(cdf) < 0.0):
            raise NumericalError("internal error: non-monotone CDF grid")
        self._cdf = cdf
        self._xs = np.asarray(xs, dtype=float)
        self._h = h
        self._d = density / norm  # normalized density at the nodes

    def __call__(self, u: np.ndarray) -> np.ndarray:
        cells = np.clip(
            np.searchsorted(self._cdf, u, side="right") - 1, 0, self._h.size - 1
        )
        d0 = self._d[cells]
        h = self._h[cells]
        s = (self._d[cells + 1] - d0) / h
        rem = np.clip(u - self._cdf[cells], 0.0, None)
        disc = np.sqrt(np.clip(d0 * d0 + 2.0 * s * rem, 0.0, None))
        # rationalized quadratic root; reduces to rem/d0 in the linear limit
        t = 2.0 * rem / np.maximum(disc + d0, 1e-300)
        return self._xs[cells] + np.clip(t, 0.0, h)


def _component_samplers(mix: ConditionalMixture, phi: float,
                        x_max: float = 12.0, points: int = _CDF_POINTS,
                        weight_floor: float = 1e-9):
    """Inverse CDFs of the mixture components carrying visible weight.

    Components below weight_floor are dropped and the weights renormalized;
    the induced sampling bias is below the floor itself.
    """
    keep = [m for m, w in enumerate(mix.weights) if w > weight_floor]
    weights = np.array([mix.weights[m] for m in keep])
    weights /= weights.sum()
    xs = np.linspace(-x_max, x_max, points)
    samplers = []
    for m in keep:
        dens = quadrature_density(m, mix.kappa_p, phi, xs).density
        samplers.append(_InverseCdf(xs, dens))
    return weights, samplers


def sample_quadrature(
    mix: ConditionalMixture,
    phi: float,
    count: int,
    seed: int,
    chunk_size: int = CHUNK_SIZE,
    workers: int = 1,
    x_max: float = 12.0,
) -> SampleBatch:
    """Draw homodyne samples of the conditional mixture at phase phi.

    Two-stage: pick the component by its posterior weight, then invert the
    component CDF.  Fixed seed implies byte-identical output at any worker
    count because every chunk owns a derived RNG stream.
    """
    if count < 0:
        raise ValueError("sample count must be >= 0")
    weights, samplers = _component_samplers(mix, phi, x_max=x_max)
    cum = np.cumsum(weights)

    def draw(chunk_index: int, size: int) -> np.ndarray:
        rng = np.random.default_rng(chunk_seed(seed, chunk_index))
        u_comp = rng.random(size)
        u_x = rng.random(size)
        comp = np.searchsorted(cum, u_comp, side="right")
        comp = np.minimum(comp, len(samplers) - 1)
        out = np.empty(size)
        for c in range(len(samplers)):
            mask = comp == c
            if mask.any():
                out[mask] = samplers[c](u_x[mask])
        return out

    chunks = [
        (i, min(chunk_size, count - i * chunk_size))
        for i in range((count + chunk_size - 1) // chunk_size)
    ]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: draw(*c), chunks))
    else:
        parts = [draw(*c) for c in chunks]
    values = np.concatenate(parts) if parts else np.empty(0)
    return SampleBatch(
        phi=phi,
        values=values,
        seed=seed,
        source=f"mixture(k={mix.k}, kappa_p={mix.kappa_p:.6g})",
    )


def sampled_mixture_series(
    matrix: np.ndarray,
    prior: np.ndarray,
    kappa_p: complex,
    phi: float,
    samples_per_k: int,
    seed: int,
    hist: HistogramSpec,
    k_min: int,
    k_max: int,
    workers: int = 1,
) -> MixtureSeries:
    """Histogram estimate of each conditioned mixture's quadrature density.

    Every click count in [k_min, k_max] is homodyne-sampled `samples_per_k`
    times from its posterior mixture; the click priors entering the series
    are the exact ones, mirroring an experiment where click statistics
    accumulate over all preparation events while homodyne records exist per
    post-selected state.

    All click counts share one uniform stream (common random numbers), so
    the noise of neighbouring histograms is strongly correlated and largely
    cancels in the alternating inversion series; each histogram on its own
    remains an unbiased estimate of its mixture density.
    """
    priors_k = click_prior(matrix, prior)
    dens = np.zeros((k_max + 1, hist.bins))
    for k in range(k_min, k_max + 1):
        weights = posterior_weights(matrix, prior, k)
        mix = ConditionalMixture(k, weights, kappa_p)
        batch = sample_quadrature(mix, phi, samples_per_k, seed, workers=workers)
        counts, _ = np.histogram(batch.values, bins=hist.edges)
        dens[k] = counts / (samples_per_k * hist.width)
    return MixtureSeries(hist.centers, priors_k[: k_max + 1], dens)


@dataclass
class ExperimentRecord:
    """Everything one virtual experiment produced, JSON-serializable."""

    phi: float
    clicks: int
    seed: int
    samples: int
    detector: str
    photon_prior: np.ndarray
    click_priors: np.ndarray
    weights: np.ndarray
    entropy: float
    xs: np.ndarray
    mixture_density: np.ndarray
    pure_density: np.ndarray
    smeared_mixture: dict = field(default_factory=dict)
    smeared_pure: dict = field(default_factory=dict)
    histogram_counts: np.ndarray | None = None
    histogram_edges: np.ndarray | None = None
    reconstruction_xs: np.ndarray | None = None
    reconstruction_raw: np.ndarray | None = None
    reconstruction_physical: np.ndarray | None = None
    reconstruction_k_max: int | None = None

    def to_dict(self) -> dict:
        def arr(a):
            return None if a is None else np.asarray(a).tolist()

        return {
            "phi": self.phi,
            "clicks": self.clicks,
            "seed": self.seed,
            "samples": self.samples,
            "detector": self.detector,
            "photon_prior": arr(self.photon_prior),
            "click_priors": arr(self.click_priors),
            "weights": arr(self.weights),
            "entropy": self.entropy,
            "xs": arr(self.xs),
            "mixture_density": arr(self.mixture_density),
            "pure_density": arr(self.pure_density),
            "smeared_mixture": {str(k): arr(v) for k, v in self.smeared_mixture.items()},
            "smeared_pure": {str(k): arr(v) for k, v in self.smeared_pure.items()},
            "histogram_counts": arr(self.histogram_counts),
            "histogram_edges": arr(self.histogram_edges),
            "reconstruction_xs": arr(self.reconstruction_xs),
            "reconstruction_raw": arr(self.reconstruction_raw),
            "reconstruction_physical": arr(self.reconstruction_physical),
            "reconstruction_k_max": self.reconstruction_k_max,
        }


def run_experiment(
    bs: BeamSplitterParams,
    kappa: complex,
    model: DetectorModel,
    k: int,
    phi: float,
    samples: int,
    seed: int,
    hist: HistogramSpec,
    xs: np.ndarray,
    homodyne_etas=(),
    reconstruct: bool = False,
    k_max: int | None = None,
    workers: int = 1,
) -> ExperimentRecord:
    """Prepare -> detect -> sample -> (optionally) reconstruct.

    The histogram is drawn from the k-conditioned mixture; the
    reconstruction targets the pure state with m = k and consumes an
    independent joint record of (click count, homodyne value) pairs of the
    same size.  samples = 0 produces the exact curves only.
    """
    kappa_p = bs.T**2 * kappa
    prior = photon_count_prior(bs, kappa)
    matrix = detector_matrix(model, len(prior) - 1)
    priors_k = click_prior(matrix, prior)
    weights = posterior_weights(matrix, prior, k)
    mix = ConditionalMixture(k, weights, kappa_p)

    mixture_density = quadrature_density_mixture(weights, kappa_p, phi, xs).density
    pure_density = quadrature_density(k, kappa_p, phi, xs).density
    smeared_mixture = {}
    smeared_pure = {}
    for eta in homodyne_etas:
        kern = SmearingKernel(eta)
        smeared_mixture[eta] = smear_density(
            QuadratureDistribution(phi, xs, mixture_density), kern
        ).density
        smeared_pure[eta] = smear_density(
            QuadratureDistribution(phi, xs, pure_density), kern
        ).density

    record = ExperimentRecord(
        phi=phi,
        clicks=k,
        seed=seed,
        samples=samples,
        detector=repr(model),
        photon_prior=prior,
        click_priors=priors_k,
        weights=weights,
        entropy=shannon_entropy(weights),
        xs=np.asarray(xs, dtype=float),
        mixture_density=mixture_density,
        pure_density=pure_density,
        smeared_mixture=smeared_mixture,
        smeared_pure=smeared_pure,
    )
    if samples <= 0:
        return record

    batch = sample_quadrature(mix, phi, samples, seed, workers=workers)
    counts, _ = np.histogram(batch.values, bins=hist.edges)
    record.histogram_counts = counts
    record.histogram_edges = hist.edges

    if reconstruct:
        from .detection import SingleDetector  # local alias

        eff_k_max = k_max
        if eff_k_max is None:
            eff_k_max = default_k_max(priors_k)
        if not isinstance(model, SingleDetector):
            eff_k_max = min(eff_k_max, model.channels)
        series = sampled_mixture_series(
            matrix, prior, kappa_p, phi, samples, seed, hist,
            k_min=k, k_max=eff_k_max, workers=workers,
        )
        if isinstance(model, SingleDetector):
            raw = invert_bernoulli_series(
                series, k, model.efficiency, prior[k], k_max=eff_k_max
            )
        else:
            raw = invert_chopping_series(
                series, k, model.channels, model.efficiency, prior[k], k_max=eff_k_max
            )
        record.reconstruction_xs = series.xs
        record.reconstruction_raw = raw
        record.reconstruction_physical = clip_physical(series.xs, raw)
        record.reconstruction_k_max = eff_k_max
    return record
