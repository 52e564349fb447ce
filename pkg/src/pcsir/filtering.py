"""Sequential importance resampling: weight updates, effective sample size,
resampling, and the frame-by-frame tracking driver.

The proposal is the bootstrap choice (the dynamics model itself), so the
weight update reduces to multiplying each particle's weight by its
likelihood. Weights stay in the linear domain; normalisation rescales by
the maximum weight before summing, which keeps severely underflowed but
nonzero weight vectors usable.
"""

from dataclasses import dataclass

import numpy as np

from .imaging import ImageFrame
from .state import (DynamicsParams, InitSpec, ParticleSet, StateVector,
                    init_particle_set, propagate_array)


class DegenerateWeightsError(RuntimeError):
    """All particle weights vanished; the posterior approximation is gone."""

    def __init__(self, message, frame_index=None):
        super().__init__(message)
        self.frame_index = frame_index


@dataclass(frozen=True)
class ResampleConfig:
    """When and how to resample.

    Resampling triggers when the effective sample size drops below
    ``threshold_fraction * N``. ``multinomial`` draws indices i.i.d. with
    probability equal to the weights; ``systematic`` uses stratified
    low-variance draws with the same marginal expectation.
    """

    threshold_fraction: float = 0.5
    scheme: str = "multinomial"

    def __post_init__(self):
        if not 0.0 < self.threshold_fraction <= 1.0:
            raise ValueError("threshold_fraction must be in (0, 1]")
        if self.scheme not in ("multinomial", "systematic"):
            raise ValueError(f"unknown resampling scheme {self.scheme!r}")


def _evaluate_likelihood(lik, states, frame):
    """Dispatch to a batch evaluator when available, else map per particle."""
    batch = getattr(lik, "batch", None)
    if batch is not None:
        values = np.asarray(batch(states, frame), dtype=np.float64)
    else:
        values = np.array([lik(StateVector.from_array(s), frame) for s in states])
    if values.shape != (states.shape[0],):
        raise ValueError("likelihood must return one value per particle")
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise ValueError("likelihood values must be finite and >= 0")
    return values


def sis_step(pset: ParticleSet, frame: ImageFrame, lik, dyn: DynamicsParams,
             rng) -> ParticleSet:
    """Propagate every particle, then scale its weight by its likelihood.

    Raises DegenerateWeightsError if every updated weight is exactly zero.
    """
    states = propagate_array(pset.states, dyn, rng)
    weights = pset.weights * _evaluate_likelihood(lik, states, frame)
    if not np.any(weights > 0):
        raise DegenerateWeightsError("all importance weights vanished")
    return ParticleSet(states, weights, pset.timestep + 1)


def normalize(pset: ParticleSet) -> ParticleSet:
    """Rescale weights to sum to one, preserving their proportions.

    Divides by the maximum weight first so that uniformly tiny weight
    vectors (down to subnormals) normalise cleanly.
    """
    w_max = pset.weights.max()
    if not np.isfinite(w_max) or w_max <= 0:
        raise DegenerateWeightsError("weight sum is zero, cannot normalize")
    scaled = pset.weights / w_max
    return ParticleSet(pset.states, scaled / scaled.sum(), pset.timestep)


def effective_sample_size(pset: ParticleSet) -> float:
    """1 / sum(w^2) for normalized weights; ranges from 1 to N."""
    return 1.0 / float(np.sum(pset.weights ** 2))


def _resample_indices(weights, n, scheme, rng):
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    if scheme == "multinomial":
        points = rng.random(n)
    else:  # systematic
        points = (rng.random() + np.arange(n)) / n
    return np.searchsorted(cdf, points, side="right")


def resample(pset: ParticleSet, cfg: ResampleConfig, rng) -> ParticleSet:
    """Draw N particle copies with selection probability equal to the
    normalized weights, then reset all weights to 1/N."""
    idx = _resample_indices(pset.weights, pset.n, cfg.scheme, rng)
    states = pset.states[idx]
    weights = np.full(pset.n, 1.0 / pset.n)
    return ParticleSet(states, weights, pset.timestep)


def posterior_mean(pset: ParticleSet) -> np.ndarray:
    """Weighted mean state under normalized weights."""
    return pset.weights @ pset.states


@dataclass(frozen=True)
class FilterConfig:
    """Everything a tracking run needs besides the frames and the RNG."""

    n_particles: int
    init: InitSpec
    dynamics: DynamicsParams = DynamicsParams()
    resampling: ResampleConfig = ResampleConfig()
    likelihood: object = None

    def __post_init__(self):
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")
        if self.likelihood is None:
            raise ValueError("a likelihood evaluator is required")


@dataclass
class TrackResult:
    """Per-frame posterior-mean estimates plus run diagnostics."""

    estimates: np.ndarray          # (K, 5) weighted means, pre-resampling
    ess: np.ndarray                # (K,) effective sample size per frame
    resampled: np.ndarray          # (K,) bool, resampled after this frame
    likelihood_evals: int          # total likelihood evaluations

    @property
    def positions(self):
        return self.estimates[:, :2]


def _track(frames, cfg: FilterConfig, rng, step_fn):
    """Shared driver: step -> normalize -> estimate -> conditional resample.

    The reported estimate uses the pre-resampling normalized weights.
    """
    if len(frames) < 1:
        raise ValueError("need at least one frame")
    evals_before = getattr(cfg.likelihood, "evals", 0)
    pset = init_particle_set(cfg.n_particles, cfg.init, rng)
    threshold = cfg.resampling.threshold_fraction * cfg.n_particles
    estimates = np.empty((len(frames), pset.states.shape[1]))
    ess_log = np.empty(len(frames))
    resampled = np.zeros(len(frames), dtype=bool)
    for k, frame in enumerate(frames):
        try:
            pset = step_fn(pset, frame, rng)
            pset = normalize(pset)
        except DegenerateWeightsError as err:
            raise DegenerateWeightsError(str(err), frame_index=k) from None
        estimates[k] = posterior_mean(pset)
        ess_log[k] = effective_sample_size(pset)
        if ess_log[k] < threshold:
            pset = resample(pset, cfg.resampling, rng)
            resampled[k] = True
    evals = getattr(cfg.likelihood, "evals", 0) - evals_before
    return TrackResult(estimates, ess_log, resampled, evals)


def sir_track(frames, cfg: FilterConfig, rng) -> TrackResult:
    """Classical SIR: one likelihood evaluation per particle per frame."""

    def step(pset, frame, rng):
        return sis_step(pset, frame, cfg.likelihood, cfg.dynamics, rng)

    return _track(frames, cfg, rng, step)
