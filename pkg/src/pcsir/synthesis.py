"""Synthetic scene generation: ground-truth trajectories, noisy image
sequences with controlled SNR, and an archival PGM + sidecar format.

One spot per scene. The ideal frame is the Gaussian appearance model on a
constant background; measurement noise is Poisson per pixel (each pixel is
a Poisson draw with the ideal intensity as its mean), with intensities
calibrated beforehand so the requested SNR holds at the spot peak. An
optional additive Gaussian read-noise term is available but defaults to
off.
"""

import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .imaging import ImageFrame, PsfParams, default_halfwidth
from .state import I0, STATE_DIM, VX, VY, X, Y, DynamicsParams, propagate_array

DEFAULT_BACKGROUND = 10.0


def snr_calibrate(snr, psf: PsfParams):
    """Spot intensity (and the fixed background) matching a target SNR.

    Under pure Poisson noise the peak-pixel SNR is
    ``(peak - background) / sqrt(peak)`` with ``peak = i0 + i_bg``; solving
    for i0 at fixed background gives the positive quadratic root.
    """
    if snr <= 0:
        raise ValueError("snr must be > 0")
    i_bg = psf.i_bg
    i0 = 0.5 * (snr ** 2 + math.sqrt(snr ** 4 + 4.0 * snr ** 2 * i_bg))
    return i0, i_bg


@dataclass(frozen=True)
class SceneConfig:
    """One synthetic movie: geometry, optics, difficulty, and motion."""

    psf: PsfParams
    snr: float
    frames: int = 50
    width: int = 512
    height: int = 512
    speed_min: float = 2.0
    speed_max: float = 7.0
    dynamics: DynamicsParams = DynamicsParams()
    margin: int | None = None          # interior margin; None = 3 sigma window
    read_noise_std: float = 0.0
    noise: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.frames < 1:
            raise ValueError("frames must be >= 1")
        if self.snr <= 0:
            raise ValueError("snr must be > 0")
        if self.speed_min > self.speed_max:
            raise ValueError("speed_min must be <= speed_max")

    def interior_margin(self):
        if self.margin is not None:
            return self.margin
        return default_halfwidth(self.psf.sigma_psf)


@dataclass
class GroundTruth:
    """True object states: one per rendered frame, plus the state the
    filter initializes from (one dynamics step before the first frame)."""

    states: np.ndarray                 # (frames, 5), states at k = 1..K
    init_state: np.ndarray = None      # (5,), state at k = 0

    def __post_init__(self):
        self.states = np.atleast_2d(np.asarray(self.states, dtype=np.float64))
        if self.init_state is None:
            self.init_state = self.states[0].copy()
        self.init_state = np.asarray(self.init_state, dtype=np.float64)

    @property
    def positions(self):
        return self.states[:, :2]


class TrajectoryRejectionError(RuntimeError):
    """No in-bounds trajectory found within the attempt budget."""


def generate_truth(cfg: SceneConfig, rng, max_attempts=1000) -> GroundTruth:
    """Draw a ground-truth trajectory that stays inside the frame interior.

    Initial position uniform in the interior (margin on all sides), speed
    uniform in [speed_min, speed_max], heading uniform in [0, 2pi); states
    then evolve under the nearly-constant-velocity model. The initial state
    is where trackers start (time 0); the first rendered frame shows the
    object one dynamics step later. Trajectories that leave the interior
    are rejected and redrawn.
    """
    m = cfg.interior_margin()
    x_hi, y_hi = cfg.width - 1 - m, cfg.height - 1 - m
    if x_hi <= m or y_hi <= m:
        raise TrajectoryRejectionError("frame too small for the interior margin")
    i0, _ = snr_calibrate(cfg.snr, cfg.psf)
    for _ in range(max_attempts):
        x0 = rng.uniform(m, x_hi)
        y0 = rng.uniform(m, y_hi)
        speed = rng.uniform(cfg.speed_min, cfg.speed_max)
        heading = rng.uniform(0.0, 2.0 * math.pi)
        states = np.empty((cfg.frames + 1, STATE_DIM))
        states[0] = (x0, y0, speed * math.cos(heading), speed * math.sin(heading), i0)
        for k in range(1, cfg.frames + 1):
            states[k] = propagate_array(states[k - 1][None, :], cfg.dynamics, rng)[0]
        xs, ys = states[:, X], states[:, Y]
        if xs.min() >= m and xs.max() <= x_hi and ys.min() >= m and ys.max() <= y_hi:
            return GroundTruth(states[1:], init_state=states[0])
    raise TrajectoryRejectionError(
        f"no in-bounds trajectory found in {max_attempts} attempts")


def render_clean_frame(state, cfg: SceneConfig) -> np.ndarray:
    """Ideal (noise-free) frame for one truth state, exact at every pixel."""
    sigma = cfg.psf.sigma_psf
    gx = np.exp(-((np.arange(cfg.width) - state[X]) ** 2) / (2.0 * sigma ** 2))
    gy = np.exp(-((np.arange(cfg.height) - state[Y]) ** 2) / (2.0 * sigma ** 2))
    return state[I0] * np.outer(gy, gx) + cfg.psf.i_bg


def render_sequence(truth: GroundTruth, cfg: SceneConfig, rng) -> list[ImageFrame]:
    """Noisy frames for a truth trajectory.

    Each pixel is Poisson with the ideal intensity as mean; with
    ``cfg.noise`` off the ideal frames are returned unchanged. Negative
    values from optional read noise clamp to zero.
    """
    frames = []
    for state in truth.states:
        ideal = render_clean_frame(state, cfg)
        if cfg.noise:
            pixels = rng.poisson(ideal).astype(np.float64)
            if cfg.read_noise_std > 0:
                pixels += rng.normal(0.0, cfg.read_noise_std, size=pixels.shape)
                np.maximum(pixels, 0.0, out=pixels)
        else:
            pixels = ideal
        frames.append(ImageFrame(pixels))
    return frames


def measure_snr(frames, peak_xy, i_bg) -> float:
    """Empirical SNR estimate: (mean peak - mean background) / std at peak.

    ``peak_xy`` must be the integer pixel at the spot's centre; the
    background is measured far from the spot (the frame corner region).
    """
    px, py = peak_xy
    peak = np.array([f.pixels[py, px] for f in frames])
    bg = np.concatenate([f.pixels[:8, :8].ravel() for f in frames])
    sd = peak.std(ddof=1)
    if sd == 0:
        return math.inf
    return (peak.mean() - bg.mean()) / sd


# --- archival format: 16-bit binary PGM frames + text sidecars ------------

def write_pgm16(path, values):
    """Write a uint16 array as binary PGM (P5, maxval 65535, big-endian)."""
    values = np.asarray(values, dtype=np.uint16)
    header = f"P5\n{values.shape[1]} {values.shape[0]}\n65535\n".encode("ascii")
    Path(path).write_bytes(header + values.astype(">u2").tobytes())


def read_pgm16(path) -> np.ndarray:
    data = Path(path).read_bytes()
    m = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", data)
    if not m:
        raise ValueError(f"{path}: not a binary PGM")
    width, height, maxval = (int(g) for g in m.groups())
    if maxval != 65535:
        raise ValueError(f"{path}: expected 16-bit PGM, got maxval {maxval}")
    raw = data[m.end():]
    values = np.frombuffer(raw, dtype=">u2", count=width * height)
    return values.reshape(height, width).astype(np.uint16)


def save_sequence(directory, frames, truth: GroundTruth, cfg: SceneConfig,
                  intensity_scale=None):
    """Archive a sequence: one 16-bit PGM per frame plus truth.csv and
    scene.txt sidecars. Values quantize as round(pixels / scale * 65535).

    truth.csv row 0 is the initialization state (no image); row k >= 1
    pairs with frame_000k.pgm. Pass the loaded ``intensity_scale`` back in
    when re-archiving a loaded sequence to keep the round trip bit-exact.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if intensity_scale is None:
        intensity_scale = max(float(f.pixels.max()) for f in frames)
        if intensity_scale <= 0:
            intensity_scale = 1.0
    for k, frame in enumerate(frames, start=1):
        q = np.round(frame.pixels / intensity_scale * 65535.0)
        if q.min() < 0 or q.max() > 65535:
            raise ValueError("frame intensities exceed the quantization scale")
        write_pgm16(directory / f"frame_{k:04d}.pgm", q.astype(np.uint16))
    lines = ["frame,x,y,vx,vy,i0"]
    for k, s in enumerate(np.vstack([truth.init_state, truth.states])):
        lines.append(",".join([str(k)] + [repr(float(v)) for v in s]))
    (directory / "truth.csv").write_text("\n".join(lines) + "\n")
    meta = {
        "width": cfg.width, "height": cfg.height, "frames": cfg.frames,
        "sigma_psf": cfg.psf.sigma_psf, "i_bg": cfg.psf.i_bg, "snr": cfg.snr,
        "speed_min": cfg.speed_min, "speed_max": cfg.speed_max,
        "seed": cfg.seed, "intensity_scale": repr(intensity_scale),
    }
    (directory / "scene.txt").write_text(
        "".join(f"{k}={v}\n" for k, v in meta.items()))


def load_sequence(directory):
    """Load an archived sequence; returns (frames, truth, metadata dict).

    Frames come back as floats de-quantized with the stored scale;
    ``metadata['intensity_scale']`` allows a bit-exact re-archive.
    """
    directory = Path(directory)
    meta = {}
    for line in (directory / "scene.txt").read_text().splitlines():
        if line.strip():
            key, _, value = line.partition("=")
            meta[key.strip()] = value.strip()
    scale = float(meta["intensity_scale"])
    frames = []
    for path in sorted(directory.glob("frame_*.pgm")):
        q = read_pgm16(path)
        frames.append(ImageFrame(q.astype(np.float64) * (scale / 65535.0)))
    rows = (directory / "truth.csv").read_text().splitlines()
    states = np.array([[float(v) for v in row.split(",")[1:]]
                       for row in rows[1:] if row.strip()])
    meta["intensity_scale"] = scale
    return frames, GroundTruth(states[1:], init_state=states[0]), meta
