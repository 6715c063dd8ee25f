import math

import numpy as np
import pytest

from eyepeek.channel import (PRESETS, ChannelProfile, ChannelTable, Tier, apply, degrade_frame,
                             frames_needed, profile, subsample_factor)
from eyepeek.config import reference_scene
from eyepeek.metrics import reflection_similarity
from eyepeek.simulate import ideal_reflection, synthesize_frames


@pytest.mark.parametrize("bw, res, fps, q", [
    (2000, 720, 30, 0.9), (1500, 720, 30, 0.9), (1499, 360, 30, 0.7), (1000, 360, 30, 0.7),
    (800, 360, 15, 0.5), (500, 360, 15, 0.5), (400, 180, 10, 0.3), (1, 180, 10, 0.3),
])
def test_default_tiers(bw, res, fps, q):
    p = profile(bw)
    assert (p.output_resolution_height, p.output_fps, p.quality) == (res, fps, q)


def test_profile_never_raises_fps_above_source():
    assert profile(2000, source_fps=15).output_fps == 15


@pytest.mark.parametrize("bw", [0, -5])
def test_bandwidth_must_be_positive(bw):
    with pytest.raises(ValueError):
        profile(bw)


def test_table_validation():
    with pytest.raises(ValueError):
        ChannelTable(tiers=(Tier(0, 180, 10, 0.3), Tier(1000, 720, 30, 0.9)))
    with pytest.raises(ValueError):
        ChannelTable(tiers=(Tier(100, 180, 10, 0.3),))
    with pytest.raises(ValueError):
        ChannelProfile(100, 480, 30, 0.5)


def test_presets_are_valid_tables():
    for table in PRESETS.values():
        assert profile(50, table).output_resolution_height == 180


def _stack(seed=0, h=14.0, n=8):
    sc = reference_scene(h, seed)
    return sc, synthesize_frames(sc, n)


def test_transparent_channel():
    _, stack = _stack()
    out = apply(stack, ChannelProfile(5000, 720, 30, 1.0))
    assert len(out) == len(stack)
    assert np.max(np.abs(out.frames - stack.frames)) <= 1 / 255 + 1e-12


def test_transparent_channel_is_idempotent():
    _, stack = _stack()
    prof = ChannelProfile(5000, 720, 30, 1.0)
    once = apply(stack, prof)
    assert np.array_equal(apply(once, prof).frames, once.frames)


def test_downscale_round_trip_loses_structure():
    prof = ChannelProfile(5000, 360, 30, 1.0)
    for seed in range(10):
        sc, stack = _stack(seed, 20.0, 2)
        out = apply(stack, prof)
        for k in range(len(stack)):
            tmpl = ideal_reflection(sc, tuple(stack.offsets[k]), 1)
            assert reflection_similarity(out.frames[k], tmpl) < reflection_similarity(stack.frames[k], tmpl)


@pytest.mark.parametrize("n", [1, 7, 8, 15, 16])
def test_fps_halving_uses_ceil(n):
    _, stack = _stack(n=n)
    out = apply(stack, ChannelProfile(800, 720, 15, 1.0))
    assert len(out) == math.ceil(n / 2)
    assert out.frame_rate == 15
    assert np.array_equal(out.offsets, stack.offsets[::2])


def test_subsampling_arithmetic():
    assert subsample_factor(30, 10) == 3
    assert subsample_factor(30, 60) == 1
    assert frames_needed(8, 30, 15) == 15
    assert frames_needed(8, 30, 30) == 8


def test_quantisation_grows_with_lower_quality():
    rng = np.random.default_rng(0)
    f = np.round(rng.random((32, 48)) * 255) / 255
    err = [np.abs(degrade_frame(f, 1.0, q) - f).mean() for q in (1.0, 0.9, 0.5, 0.1)]
    assert err[0] == 0
    assert all(b >= a for a, b in zip(err, err[1:]))


def test_apply_is_deterministic_and_annotated():
    _, stack = _stack()
    prof = profile(800)
    a, b = apply(stack, prof), apply(stack, prof)
    assert np.array_equal(a.frames, b.frames)
    assert a.meta["channel"]["output_resolution_height"] == 360
