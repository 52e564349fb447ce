import numpy as np
import pytest

from pcsir.imaging import ImageFrame, LikelihoodParams, PsfParams, SpotLikelihood
from pcsir.state import DynamicsParams, StateVector
from pcsir.synthesis import render_clean_frame, SceneConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20240)


@pytest.fixture
def small_psf():
    return PsfParams(sigma_psf=1.16, i_bg=10.0)


@pytest.fixture
def small_scene(small_psf):
    return SceneConfig(psf=small_psf, snr=4.0, frames=20, width=64, height=64,
                       speed_min=2.0, speed_max=4.0, margin=8,
                       dynamics=DynamicsParams(0.1, 0.1, 0.0))


def spot_frame(state: StateVector, psf: PsfParams, width=64, height=64):
    """Noise-free frame with one spot, for likelihood tests."""
    scene = SceneConfig(psf=psf, snr=4.0, frames=1, width=width, height=height)
    return ImageFrame(render_clean_frame(state.as_array(), scene))


def spot_likelihood(psf, sigma_xi=10.0, halfwidth=4):
    return SpotLikelihood(psf, LikelihoodParams(sigma_xi, halfwidth))
