"""Spatial binning, dummy placement, and the piecewise-constant SIS step."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import spot_frame, spot_likelihood
from pcsir.binning import (BinGrid, DummyPlacement, PcFilterConfig,
                           assign_bins, make_dummy, pc_sis_step, pcsir_track)
from pcsir.filtering import FilterConfig, sir_track, sis_step
from pcsir.imaging import ImageFrame
from pcsir.state import (DynamicsParams, InitSpec, ParticleSet, StateVector,
                         init_particle_set)

NOISE_FREE = DynamicsParams(0.0, 0.0, 0.0)


def _pset_at(positions, weights=None):
    positions = np.asarray(positions, dtype=float)
    n = positions.shape[0]
    states = np.zeros((n, 5))
    states[:, :2] = positions
    states[:, 4] = 1.0
    if weights is None:
        weights = np.full(n, 1.0 / n)
    return ParticleSet(states, np.asarray(weights, dtype=float))


def unit_grid(n=10, origin=0.0):
    return BinGrid(origin_x=origin, origin_y=origin, cell_width=1.0,
                   cell_height=1.0, n_cols=n, n_rows=n)


# --- assignment --------------------------------------------------------------

def test_assign_simple_cell():
    occ = assign_bins(_pset_at([(1.5, 2.5)]), unit_grid())
    assert list(occ.members) == [(1, 2)]


def test_boundary_is_lower_inclusive():
    occ = assign_bins(_pset_at([(1.0, 0.5)]), unit_grid())
    assert list(occ.members) == [(1, 0)]


def test_out_of_grid_clamps_to_boundary_cells():
    occ = assign_bins(_pset_at([(-3.0, 4.2), (99.0, 4.2)]), unit_grid())
    assert set(occ.members) == {(0, 4), (9, 4)}


def test_assignment_is_a_partition(rng):
    pset = _pset_at(rng.uniform(0, 10, size=(10 ** 4, 2)))
    occ = assign_bins(pset, unit_grid())
    all_indices = np.concatenate([occ.members[key] for key in occ.members])
    assert len(all_indices) == len(pset)
    assert np.array_equal(np.sort(all_indices), np.arange(len(pset)))


def test_member_lists_ordered_by_particle_index(rng):
    pset = _pset_at(rng.uniform(0, 3, size=(500, 2)))
    occ = assign_bins(pset, unit_grid(3))
    for indices in occ.members.values():
        assert np.all(np.diff(indices) > 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 200), st.integers(0, 2 ** 31))
def test_partition_property(n, seed):
    rng = np.random.default_rng(seed)
    pset = _pset_at(rng.uniform(-5, 15, size=(n, 2)))  # some out of grid
    occ = assign_bins(pset, unit_grid())
    joined = np.concatenate([occ.members[k] for k in occ.members])
    assert np.array_equal(np.sort(joined), np.arange(n))


def test_pixel_aligned_grid_matches_pixels():
    grid = BinGrid.pixel_aligned(512, 512, 1)
    # Pixel (10, 20) covers [9.5, 10.5) x [19.5, 20.5).
    assert grid.cell_indices(10.0, 20.0) == (10, 20)
    assert grid.cell_indices(10.49, 20.49) == (10, 20)
    assert grid.cell_indices(10.5, 20.5) == (11, 21)
    assert grid.cell_center(10, 20) == (10.0, 20.0)


def test_pixel_aligned_grid_two_by_two():
    grid = BinGrid.pixel_aligned(512, 512, 2)
    assert grid.cell_width == 0.5
    assert grid.n_cols == 1024
    # Pixel (0, 0) splits into four cells around its centre.
    assert grid.cell_indices(-0.3, -0.3) == (0, 0)
    assert grid.cell_indices(0.3, -0.3) == (1, 0)


# --- dummies ------------------------------------------------------------------

def test_com_dummy_is_mean():
    members = [StateVector(0.2, 0.2, 1.0, -1.0, 10.0),
               StateVector(0.8, 0.8, 1.0, -1.0, 10.0)]
    dummy = make_dummy(members, (0, 1, 0, 1), DummyPlacement.CENTER_OF_MASS)
    assert dummy == StateVector(0.5, 0.5, 1.0, -1.0, 10.0)


def test_com_dummy_single_member_is_identity():
    member = StateVector(3.7, -1.2, 0.5, 0.25, 7.5)
    dummy = make_dummy([member], (3, 4, -2, -1), DummyPlacement.CENTER_OF_MASS)
    assert dummy == member


def test_cell_center_dummy_uses_geometry():
    members = [StateVector(1.9, 3.1, 2.0, 0.0, 5.0)]
    dummy = make_dummy(members, (1.0, 2.0, 3.0, 4.0), DummyPlacement.CELL_CENTER)
    assert dummy == StateVector(1.5, 3.5, 2.0, 0.0, 5.0)


def test_weighted_com_dummy():
    members = [StateVector(0.0, 0.0, 0.0, 0.0, 0.0),
               StateVector(1.0, 0.0, 0.0, 0.0, 0.0)]
    dummy = make_dummy(members, (0, 1, 0, 1), DummyPlacement.CENTER_OF_MASS,
                       weights=[1.0, 3.0])
    assert dummy.x == 0.75


def test_make_dummy_rejects_empty():
    with pytest.raises(ValueError):
        make_dummy([], (0, 1, 0, 1), DummyPlacement.CENTER_OF_MASS)


# --- pc step -------------------------------------------------------------------

def test_single_cell_broadcast(small_psf, rng):
    truth = StateVector(20.0, 20.0, 0.0, 0.0, 22.0)
    frame = spot_frame(truth, small_psf, width=40, height=40)
    pset = _pset_at(truth.as_array()[None, :2] + rng.uniform(-0.2, 0.2, (50, 2)),
                    weights=rng.uniform(0.5, 1.5, 50))
    pset.states[:, 4] = truth.intensity
    grid = BinGrid(0.0, 0.0, 40.0, 40.0, 1, 1)  # one huge cell
    lik = spot_likelihood(small_psf)
    out, occupied = pc_sis_step(pset, frame, lik, NOISE_FREE, grid,
                                DummyPlacement.CENTER_OF_MASS, rng)
    assert occupied == 1
    assert lik.evals == 1
    ratios = out.weights / pset.weights
    assert np.allclose(ratios, ratios[0], rtol=1e-14)


def test_weight_ratios_identical_within_cells(small_psf, rng):
    truth = StateVector(20.0, 20.0, 0.0, 0.0, 22.0)
    frame = spot_frame(truth, small_psf, width=40, height=40)
    pset = _pset_at(rng.uniform(15, 25, size=(200, 2)),
                    weights=rng.uniform(0.1, 2.0, 200))
    pset.states[:, 4] = truth.intensity
    grid = BinGrid.pixel_aligned(40, 40, 1)
    lik = spot_likelihood(small_psf)
    out, occupied = pc_sis_step(pset, frame, lik, NOISE_FREE, grid,
                                DummyPlacement.CENTER_OF_MASS, rng)
    assert lik.evals == occupied
    occ = assign_bins(out, grid)
    assert len(occ.members) == occupied
    ratios = out.weights / pset.weights
    for indices in occ.members.values():
        assert np.allclose(ratios[indices], ratios[indices][0], rtol=1e-14)


def test_eval_count_is_occupied_cells(small_psf, rng):
    # 12800 particles spread over the 65x65-px likelihood support with
    # 1x1-px cells: at most 4225 evaluations versus 12800 for SIR.
    truth = StateVector(256.0, 256.0, 0.0, 0.0, 8.6)
    frame = spot_frame(truth, small_psf, width=512, height=512)
    pos = rng.uniform(256 - 32.5, 256 + 32.5, size=(12800, 2))
    pset = _pset_at(pos)
    pset.states[:, 4] = truth.intensity
    grid = BinGrid.pixel_aligned(512, 512, 1)
    lik = spot_likelihood(small_psf, halfwidth=32)
    out, occupied = pc_sis_step(pset, frame, lik, NOISE_FREE, grid,
                                DummyPlacement.CENTER_OF_MASS, rng)
    assert occupied == lik.evals
    assert occupied <= 66 * 66
    assert occupied < 12800


def test_singleton_cells_reduce_to_sir(small_psf, rng):
    # One particle per cell + centre-of-mass placement reproduces the
    # classical per-particle weighting bit for bit.
    truth = StateVector(20.0, 20.0, 0.0, 0.0, 22.0)
    frame = spot_frame(truth, small_psf, width=40, height=40)
    pos = rng.uniform(18, 22, size=(64, 2))
    weights = rng.uniform(0.2, 1.8, 64)
    dyn = DynamicsParams(0.5, 0.5, 0.0)

    pset_a = _pset_at(pos, weights)
    pset_a.states[:, 4] = truth.intensity
    sir_out = sis_step(pset_a, frame, spot_likelihood(small_psf), dyn,
                       np.random.default_rng(99))

    pset_b = _pset_at(pos, weights)
    pset_b.states[:, 4] = truth.intensity
    tiny = BinGrid(origin_x=-0.5, origin_y=-0.5, cell_width=1e-6,
                   cell_height=1e-6, n_cols=40 * 10 ** 6, n_rows=40 * 10 ** 6)
    pc_out, occupied = pc_sis_step(pset_b, frame, spot_likelihood(small_psf),
                                   dyn, tiny, DummyPlacement.CENTER_OF_MASS,
                                   np.random.default_rng(99))
    assert occupied == 64
    assert np.array_equal(sir_out.weights, pc_out.weights)
    assert np.array_equal(sir_out.states, pc_out.states)


def test_pcsir_track_equals_sir_track_with_tiny_cells(small_psf, small_scene):
    from pcsir.synthesis import generate_truth, render_sequence

    truth = generate_truth(small_scene, np.random.default_rng(3))
    frames = render_sequence(truth, small_scene, np.random.default_rng(4))
    init = InitSpec(StateVector.from_array(truth.init_state), "point")
    dyn = DynamicsParams(0.5, 0.5, 0.0)

    cfg = FilterConfig(300, init, dyn, likelihood=spot_likelihood(small_psf))
    sir_result = sir_track(frames, cfg, np.random.default_rng(11))

    tiny = BinGrid(origin_x=-0.5, origin_y=-0.5, cell_width=1e-5,
                   cell_height=1e-5, n_cols=64 * 10 ** 5, n_rows=64 * 10 ** 5)
    pc_cfg = PcFilterConfig(300, init, dyn, likelihood=spot_likelihood(small_psf),
                            grid=tiny, placement=DummyPlacement.CENTER_OF_MASS)
    pc_result = pcsir_track(frames, pc_cfg, np.random.default_rng(11))
    assert np.array_equal(sir_result.estimates, pc_result.estimates)
    assert np.array_equal(sir_result.ess, pc_result.ess)
    assert np.array_equal(sir_result.resampled, pc_result.resampled)


def test_pc_eval_count_never_exceeds_sir(small_psf, small_scene):
    from pcsir.synthesis import generate_truth, render_sequence

    truth = generate_truth(small_scene, np.random.default_rng(8))
    frames = render_sequence(truth, small_scene, np.random.default_rng(9))
    init = InitSpec(StateVector.from_array(truth.init_state), "point")
    dyn = DynamicsParams(0.5, 0.5, 0.0)
    n = 500

    cfg = FilterConfig(n, init, dyn, likelihood=spot_likelihood(small_psf))
    sir_result = sir_track(frames, cfg, np.random.default_rng(1))

    pc_cfg = PcFilterConfig(n, init, dyn, likelihood=spot_likelihood(small_psf),
                            grid=BinGrid.pixel_aligned(64, 64, 1),
                            placement=DummyPlacement.CENTER_OF_MASS)
    pc_result = pcsir_track(frames, pc_cfg, np.random.default_rng(1))
    assert pc_result.likelihood_evals <= sir_result.likelihood_evals
    assert pc_result.likelihood_evals < n * len(frames)


def test_grid_validation():
    with pytest.raises(ValueError):
        BinGrid(0, 0, 0.0, 1.0, 4, 4)
    with pytest.raises(ValueError):
        BinGrid(0, 0, 1.0, 1.0, 0, 4)
