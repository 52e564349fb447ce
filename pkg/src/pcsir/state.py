"""State vectors, particle containers, and the nearly-constant-velocity
dynamics used to propagate them.

A state has five components: position (x, y) in pixels, velocity (vx, vy)
in pixels per frame, and the spot's peak intensity. Filters operate on
array-backed particle sets (an (N, 5) state matrix plus an (N,) weight
vector); the scalar ``StateVector``/``Particle`` types are the API surface
for single states.
"""

from dataclasses import dataclass, field

import numpy as np

# Column indices of the (N, 5) state matrix.
X, Y, VX, VY, I0 = range(5)
STATE_DIM = 5


@dataclass(frozen=True)
class StateVector:
    """Single object state: position, velocity, peak intensity."""

    x: float
    y: float
    vx: float
    vy: float
    intensity: float

    def __post_init__(self):
        if self.intensity < 0:
            raise ValueError("intensity must be >= 0")

    def as_array(self):
        return np.array([self.x, self.y, self.vx, self.vy, self.intensity])

    @classmethod
    def from_array(cls, row):
        return cls(float(row[X]), float(row[Y]), float(row[VX]),
                   float(row[VY]), float(row[I0]))


@dataclass(frozen=True)
class Particle:
    """A weighted state sample."""

    state: StateVector
    weight: float

    def __post_init__(self):
        if not np.isfinite(self.weight) or self.weight < 0:
            raise ValueError("weight must be finite and >= 0")


@dataclass
class ParticleSet:
    """N weighted state samples at one timestep, stored as arrays.

    ``states`` is (N, 5) float64, ``weights`` is (N,) float64. N is fixed
    for the lifetime of a filter run.
    """

    states: np.ndarray
    weights: np.ndarray
    timestep: int = 0

    def __post_init__(self):
        self.states = np.ascontiguousarray(self.states, dtype=np.float64)
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        if self.states.ndim != 2 or self.states.shape[1] != STATE_DIM:
            raise ValueError("states must have shape (N, 5)")
        if self.weights.shape != (self.states.shape[0],):
            raise ValueError("weights must have shape (N,)")
        if self.states.shape[0] < 1:
            raise ValueError("a particle set needs at least one particle")

    def __len__(self):
        return self.states.shape[0]

    @property
    def n(self):
        return self.states.shape[0]

    def particle(self, i) -> Particle:
        return Particle(StateVector.from_array(self.states[i]), float(self.weights[i]))

    def copy(self):
        return ParticleSet(self.states.copy(), self.weights.copy(), self.timestep)


@dataclass(frozen=True)
class DynamicsParams:
    """Process-noise magnitudes of the nearly-constant-velocity model.

    Intensity is held constant by default (sigma_int = 0); set it nonzero to
    let the filter diffuse the intensity estimate as well.
    """

    sigma_pos: float = 0.5
    sigma_vel: float = 0.5
    sigma_int: float = 0.0
    dt: float = 1.0

    def __post_init__(self):
        if min(self.sigma_pos, self.sigma_vel, self.sigma_int) < 0:
            raise ValueError("noise magnitudes must be >= 0")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")

    def noise_scale(self):
        return np.array([self.sigma_pos, self.sigma_pos, self.sigma_vel,
                         self.sigma_vel, self.sigma_int])


def propagate_array(states, params: DynamicsParams, rng) -> np.ndarray:
    """Vectorized nearly-constant-velocity step for an (N, 5) state matrix.

    Always consumes N*5 normal draws from ``rng`` so that the stream
    position is independent of which sigmas are zero.
    """
    states = np.asarray(states, dtype=np.float64)
    out = states.copy()
    out[:, X] += states[:, VX] * params.dt
    out[:, Y] += states[:, VY] * params.dt
    out += rng.normal(size=states.shape) * params.noise_scale()
    np.maximum(out[:, I0], 0.0, out=out[:, I0])
    return out


def propagate(state: StateVector, params: DynamicsParams, rng) -> StateVector:
    """One nearly-constant-velocity step of a single state.

    Positions drift by velocity*dt, then every component receives zero-mean
    Gaussian noise with its configured magnitude; intensity is clamped at 0.
    """
    row = propagate_array(state.as_array()[None, :], params, rng)[0]
    return StateVector.from_array(row)


@dataclass(frozen=True)
class InitSpec:
    """How to draw the initial particle cloud around a centre state.

    mode "point" copies the centre exactly; "uniform" spreads positions over
    a centred square box of side ``width`` pixels; "gauss" draws positions
    from an isotropic Gaussian with std ``sigma``. Velocity and intensity are
    copied from the centre in all modes.
    """

    center: StateVector
    mode: str = "point"
    width: float = 0.0
    sigma: float = 0.0

    def __post_init__(self):
        if self.mode not in ("point", "uniform", "gauss"):
            raise ValueError(f"unknown init mode {self.mode!r}")
        if self.mode == "uniform" and self.width <= 0:
            raise ValueError("uniform init needs width > 0")
        if self.mode == "gauss" and self.sigma <= 0:
            raise ValueError("gauss init needs sigma > 0")


def init_particle_set(n, init: InitSpec, rng) -> ParticleSet:
    """Draw N particles per the init spec, all with weight 1/N."""
    if n < 1:
        raise ValueError("n must be >= 1")
    states = np.tile(init.center.as_array(), (n, 1))
    if init.mode == "uniform":
        half = init.width / 2.0
        states[:, (X, Y)] += rng.uniform(-half, half, size=(n, 2))
    elif init.mode == "gauss":
        states[:, (X, Y)] += rng.normal(0.0, init.sigma, size=(n, 2))
    weights = np.full(n, 1.0 / n)
    return ParticleSet(states, weights, timestep=0)
