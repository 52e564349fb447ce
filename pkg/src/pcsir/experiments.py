"""Benchmark experiment drivers: tracking-accuracy/runtime sweeps, the
single-frame pseudo-tracking convergence study, and the approximation-bound
study.

Desk-scale defaults keep runtimes CI-friendly (20 repetitions for tracking,
100 for pseudo-tracking, particle counts capped); ``full_scale`` switches
to the larger reference sweeps. All randomness derives from one experiment
seed via stable per-(variant, N, repetition) hashes, so results are
independent of execution order and identical across runs.
"""

import hashlib
import time
from dataclasses import dataclass, replace

import numpy as np

from .binning import (BinGrid, DummyPlacement, PcFilterConfig, _dummy_states,
                      _partition, pcsir_track)
from .bounds import (DomainPartition, builtin_fields, midpoint_error,
                     rect_bound, square_bound)
from .filtering import (DegenerateWeightsError, FilterConfig, ResampleConfig,
                        normalize, sir_track)
from .imaging import LikelihoodParams, PsfParams, SpotLikelihood
from .state import (DynamicsParams, InitSpec, ParticleSet, StateVector,
                    init_particle_set)
from .synthesis import (GroundTruth, SceneConfig, generate_truth,
                        render_sequence, snr_calibrate)


class ConfigError(ValueError):
    """Invalid experiment configuration; maps to CLI exit code 2."""


VARIANT_LABELS = ("SIR", "pcSIR-1x1-CoM", "pcSIR-1x1-CoC",
                  "pcSIR-2x2-CoM", "pcSIR-2x2-CoC")
PSEUDO_PRIORS = ("uniform3x3", "uniform5x5", "gauss0.5", "gauss0.8")
EXPERIMENTS = ("large_object", "small_object", "pseudo_tracking", "bounds_study")


@dataclass(frozen=True)
class VariantSpec:
    """A parsed filter variant: SIR or a binned variant with its grid."""

    label: str
    cells_per_pixel: int | None = None      # None = classical SIR
    placement: DummyPlacement | None = None

    @property
    def is_pc(self):
        return self.cells_per_pixel is not None


def parse_variant(label) -> VariantSpec:
    token = label.strip().lower()
    if token == "sir":
        return VariantSpec("SIR")
    parts = token.split("-")
    if parts[0] != "pcsir" or len(parts) not in (2, 3):
        raise ConfigError(f"unknown filter variant {label!r}")
    cells = {"1x1": 1, "2x2": 2}.get(parts[1])
    if cells is None:
        raise ConfigError(f"unknown cell subdivision in variant {label!r}")
    placement_token = parts[2] if len(parts) == 3 else "com"
    try:
        placement = DummyPlacement(placement_token)
    except ValueError:
        raise ConfigError(f"unknown dummy placement in variant {label!r}") from None
    suffix = "CoM" if placement is DummyPlacement.CENTER_OF_MASS else "CoC"
    return VariantSpec(f"pcSIR-{parts[1]}-{suffix}", cells, placement)


def parse_prior(label, center: StateVector) -> InitSpec:
    token = label.strip().lower().replace("(", "").replace(")", "")
    if token == "point":
        return InitSpec(center, "point")
    if token.startswith("uniform"):
        size = token.removeprefix("uniform")
        if "x" in size:
            size = size.split("x")[0]
        try:
            return InitSpec(center, "uniform", width=float(size))
        except ValueError:
            raise ConfigError(f"unknown prior {label!r}") from None
    if token.startswith("gauss"):
        try:
            return InitSpec(center, "gauss", sigma=float(token.removeprefix("gauss")))
        except ValueError:
            raise ConfigError(f"unknown prior {label!r}") from None
    raise ConfigError(f"unknown prior {label!r}")


def derive_rng(seed, *tags):
    """Deterministic, order-independent sub-stream for a tagged task."""
    entropy = [seed & 0xFFFFFFFF]
    for tag in tags:
        digest = hashlib.sha256(repr(tag).encode()).digest()
        entropy.append(int.from_bytes(digest[:4], "little"))
    return np.random.default_rng(np.random.SeedSequence(entropy))


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one benchmark run.

    ``scene.dynamics`` drives the ground-truth motion; ``filter_dynamics``
    is the (deliberately inflated) process noise the filters propagate
    with, which keeps the bootstrap proposal alive when the target turns.
    """

    experiment: str
    n_particles: tuple
    repetitions: int
    variants: tuple
    scene: SceneConfig
    sigma_xi: float
    window_halfwidth: int
    filter_dynamics: DynamicsParams = DynamicsParams()
    prior: str = "point"
    seed: int = 0
    full_scale: bool = False
    weighted_com: bool = False

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if len(self.n_particles) == 0:
            raise ConfigError("n_particles must be nonempty")
        if any(n < 1 for n in self.n_particles):
            raise ConfigError("particle counts must be >= 1")
        if any(b <= a for a, b in zip(self.n_particles, self.n_particles[1:])):
            raise ConfigError("n_particles must be strictly increasing")
        if len(self.variants) == 0:
            raise ConfigError("variants must be nonempty")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.sigma_xi <= 0:
            raise ConfigError("sigma_xi must be > 0")
        for label in self.variants:
            parse_variant(label)
        if self.experiment == "pseudo_tracking" and self.prior not in PSEUDO_PRIORS:
            raise ConfigError(
                f"pseudo-tracking prior must be one of {PSEUDO_PRIORS}, "
                f"got {self.prior!r}")
        return self

    def parsed_variants(self):
        return [parse_variant(v) for v in self.variants]


def _doubling(start, stop):
    values = []
    n = start
    while n <= stop:
        values.append(n)
        n *= 2
    return tuple(values)


def preset(experiment, full_scale=False, seed=0) -> ExperimentConfig:
    """Default configuration for a named experiment."""
    truth_dynamics = DynamicsParams(0.1, 0.1, 0.0)
    filter_dynamics = DynamicsParams(0.5, 0.5, 0.0)
    if experiment == "large_object":
        return ExperimentConfig(
            experiment=experiment,
            n_particles=_doubling(100, 12800),
            repetitions=50 if full_scale else 20,
            variants=("SIR", "pcSIR-1x1-CoM", "pcSIR-2x2-CoM"),
            scene=SceneConfig(psf=PsfParams(13.0, i_bg=10.0), snr=2.0,
                              speed_min=2.0, speed_max=7.0, margin=32,
                              dynamics=truth_dynamics, seed=seed),
            sigma_xi=10.0,
            window_halfwidth=32,
            filter_dynamics=filter_dynamics,
            seed=seed,
            full_scale=full_scale,
        )
    if experiment == "small_object":
        return ExperimentConfig(
            experiment=experiment,
            n_particles=_doubling(8000, 1024000 if full_scale else 128000),
            repetitions=50 if full_scale else 20,
            variants=("SIR", "pcSIR-1x1-CoM", "pcSIR-2x2-CoM"),
            scene=SceneConfig(psf=PsfParams(1.16, i_bg=10.0), snr=4.0,
                              speed_min=2.0, speed_max=4.0, margin=8,
                              dynamics=truth_dynamics, seed=seed),
            sigma_xi=10.0,
            window_halfwidth=4,
            filter_dynamics=filter_dynamics,
            seed=seed,
            full_scale=full_scale,
        )
    if experiment == "pseudo_tracking":
        # Spot amplitude balances the likelihood sharpness: bright enough
        # that the cell approximation differentiates CoM from CoC, dim
        # enough that Monte-Carlo error still dominates over the sweep.
        return ExperimentConfig(
            experiment=experiment,
            n_particles=_doubling(1000, 128000 if full_scale else 16000),
            repetitions=1000 if full_scale else 100,
            variants=("SIR", "pcSIR-1x1-CoM", "pcSIR-1x1-CoC"),
            scene=SceneConfig(psf=PsfParams(1.16, i_bg=10.0), snr=2.5,
                              frames=1, width=33, height=33, noise=False,
                              speed_min=0.0, speed_max=0.0, margin=8, seed=seed),
            sigma_xi=20.0,
            window_halfwidth=4,
            prior="gauss0.5",
            seed=seed,
            full_scale=full_scale,
        )
    raise ConfigError(f"no preset for experiment {experiment!r}")


@dataclass
class RunRecord:
    """One (variant, N, repetition) outcome.

    For tracking experiments ``rmse`` is the per-run RMSE over frames; for
    pseudo-tracking it is the single-shot position error of that repetition.
    """

    experiment: str
    variant: str
    n_particles: int
    repetition: int
    rmse: float
    wall_time_s: float
    lik_evals: int
    failed: bool = False
    trajectory: np.ndarray | None = None


def _position_rmse(estimated_xy, truth_xy):
    delta = estimated_xy - truth_xy
    return float(np.sqrt(np.mean(np.sum(delta ** 2, axis=1))))


def _filter_config(variant: VariantSpec, n, init, scene, dynamics, lik,
                   weighted_com):
    resampling = ResampleConfig()
    if not variant.is_pc:
        return FilterConfig(n, init, dynamics, resampling, lik), sir_track
    grid = BinGrid.pixel_aligned(scene.width, scene.height, variant.cells_per_pixel)
    cfg = PcFilterConfig(n, init, dynamics, resampling, lik,
                         grid=grid, placement=variant.placement,
                         weighted_com=weighted_com)
    return cfg, pcsir_track


def run_tracking_experiment(cfg: ExperimentConfig, progress=None) -> list:
    """Accuracy/runtime sweep on synthetic sequences.

    Every variant and particle count within a repetition runs on the same
    rendered sequence, so accuracy comparisons are paired. Wall time covers
    the filtering call only (propagation, likelihoods, resampling), not
    sequence generation or I/O. Weight-degeneracy failures are recorded per
    repetition and do not abort the sweep.
    """
    cfg.validate()
    variants = cfg.parsed_variants()
    records = []
    for rep in range(cfg.repetitions):
        scene_rng = derive_rng(cfg.seed, "scene", cfg.experiment, rep)
        truth = generate_truth(cfg.scene, scene_rng)
        frames = render_sequence(truth, cfg.scene, scene_rng)
        center = StateVector.from_array(truth.init_state)
        init = parse_prior(cfg.prior, center)
        for variant in variants:
            for n in cfg.n_particles:
                lik = SpotLikelihood(cfg.scene.psf,
                                     LikelihoodParams(cfg.sigma_xi, cfg.window_halfwidth))
                filter_cfg, track = _filter_config(variant, n, init, cfg.scene,
                                                   cfg.filter_dynamics, lik,
                                                   cfg.weighted_com)
                rng = derive_rng(cfg.seed, "filter", variant.label, n, rep)
                start = time.perf_counter()
                try:
                    result = track(frames, filter_cfg, rng)
                except DegenerateWeightsError:
                    records.append(RunRecord(cfg.experiment, variant.label, n, rep,
                                             float("nan"), time.perf_counter() - start,
                                             lik.evals, failed=True))
                    continue
                elapsed = time.perf_counter() - start
                rmse = _position_rmse(result.positions, truth.positions)
                records.append(RunRecord(cfg.experiment, variant.label, n, rep,
                                         rmse, elapsed, result.likelihood_evals,
                                         trajectory=result.positions))
                if progress is not None:
                    progress(records[-1])
    return records


def _pseudo_weight_once(pset: ParticleSet, frame, lik, variant: VariantSpec,
                        scene: SceneConfig, weighted_com):
    """One likelihood weighting of a fresh particle cloud, no dynamics."""
    if not variant.is_pc:
        weights = lik.batch(pset.states, frame)
        return ParticleSet(pset.states, pset.weights * weights, 1)
    grid = BinGrid.pixel_aligned(scene.width, scene.height, variant.cells_per_pixel)
    _, order, unique, starts, counts = _partition(pset.states, grid)
    weights_in = pset.weights[order] if weighted_com else None
    dummies = _dummy_states(pset.states, grid, order, unique, starts, counts,
                            variant.placement, weights_in)
    cell_lik = lik.batch(dummies, frame)
    multiplier = np.empty(pset.n)
    multiplier[order] = np.repeat(cell_lik, counts)
    return ParticleSet(pset.states, pset.weights * multiplier, 1)


def run_pseudo_tracking(cfg: ExperimentConfig, progress=None) -> list:
    """Single-frame convergence study isolating the likelihood step.

    Each repetition renders a noise-free spot at a sub-pixel position near
    the frame centre, draws a fresh particle cloud from the prior centred
    on the spot, and weights the same cloud once through every variant. The
    recorded error is the distance between the weighted-mean position and
    the true position; averaging over repetitions measures the pure
    particle-approximation error of each weighting scheme.
    """
    cfg.validate()
    scene = cfg.scene
    variants = cfg.parsed_variants()
    i0, _ = snr_calibrate(scene.snr, scene.psf)
    cx, cy = (scene.width - 1) / 2.0, (scene.height - 1) / 2.0
    truth_scene = replace(scene, frames=1, noise=False)
    records = []
    for n in cfg.n_particles:
        for rep in range(cfg.repetitions):
            rng = derive_rng(cfg.seed, "pseudo", cfg.prior, n, rep)
            offset = rng.uniform(-0.5, 0.5, size=2)
            truth_state = StateVector(cx + offset[0], cy + offset[1], 0.0, 0.0, i0)
            frame = render_sequence(GroundTruth(truth_state.as_array()[None, :]),
                                    truth_scene, rng)[0]
            init = parse_prior(cfg.prior, truth_state)
            base = init_particle_set(n, init, rng)
            for variant in variants:
                lik = SpotLikelihood(scene.psf,
                                     LikelihoodParams(cfg.sigma_xi, cfg.window_halfwidth))
                start = time.perf_counter()
                try:
                    weighted = normalize(_pseudo_weight_once(
                        base, frame, lik, variant, scene, cfg.weighted_com))
                except DegenerateWeightsError:
                    records.append(RunRecord(cfg.experiment, variant.label, n, rep,
                                             float("nan"),
                                             time.perf_counter() - start,
                                             lik.evals, failed=True))
                    continue
                estimate = weighted.weights @ weighted.states[:, :2]
                elapsed = time.perf_counter() - start
                error = float(np.hypot(estimate[0] - truth_state.x,
                                       estimate[1] - truth_state.y))
                records.append(RunRecord(cfg.experiment, variant.label, n, rep,
                                         error, elapsed, lik.evals))
                if progress is not None:
                    progress(records[-1])
    return records


BOUND_CELL_SIZES = (1.0, 0.5, 0.25, 0.125)
BOUND_DOMAINS = {
    "quadratic": (0.0, 4.0, 0.0, 4.0),
    "gaussian": (-4.0, 4.0, -4.0, 4.0),
    "sinsin": (0.0, 4.0, 0.0, 4.0),
}


def run_bounds_study(cell_sizes=BOUND_CELL_SIZES, fields=None) -> dict:
    """True mid-point approximation error versus both bounds.

    Returns {field name: [(cell size, true error, rect bound, square bound)]}
    for uniform square partitions of the field's standard domain.
    """
    fields = fields if fields is not None else builtin_fields()
    results = {}
    for name, field in fields.items():
        domain = BOUND_DOMAINS[name]
        rows = []
        for l in cell_sizes:
            n_cols = int(round((domain[1] - domain[0]) / l))
            n_rows = int(round((domain[3] - domain[2]) / l))
            part = DomainPartition.uniform(domain, n_cols, n_rows)
            rows.append((l, midpoint_error(field, part),
                         rect_bound(field, part), square_bound(field, l, domain)))
        results[name] = rows
    return results
