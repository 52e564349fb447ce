"""Particle-filter spot tracking: classical SIR and its piecewise-constant
variant (pcSIR), a synthetic fluorescence-microscopy scene generator,
mid-point approximation error bounds, and a benchmark CLI.

Hot likelihood kernels run through a compiled extension when available and
fall back to numpy otherwise; see :mod:`pcsir.kernels`.
"""

from .binning import (BinGrid, BinOccupancy, DummyPlacement, PcFilterConfig,
                      assign_bins, make_dummy, pc_sis_step, pcsir_track)
from .bounds import (DomainPartition, SmoothField, builtin_fields,
                     gaussian_spot_field, midpoint_error, quadratic_field,
                     rect_bound, sinsin_field, square_bound)
from .filtering import (DegenerateWeightsError, FilterConfig, ResampleConfig,
                        TrackResult, effective_sample_size, normalize,
                        resample, sir_track, sis_step)
from .imaging import (ImageFrame, LikelihoodParams, PsfParams, SpotLikelihood,
                      default_halfwidth, likelihood, render_object)
from .kernels import active_backend, available_backends, set_backend
from .state import (DynamicsParams, InitSpec, Particle, ParticleSet,
                    StateVector, init_particle_set, propagate)
from .synthesis import (GroundTruth, SceneConfig, generate_truth,
                        load_sequence, render_sequence, save_sequence,
                        snr_calibrate)

__version__ = "0.1.0"
