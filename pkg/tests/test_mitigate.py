import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from eyepeek.config import reference_scene
from eyepeek.mitigate import BlurConfig, blur_region, crossing_sigma, region_mask, residual_leakage
from eyepeek.pipeline import evaluate

REGION = (5, 8, 25, 40)


def _img(seed=0, shape=(32, 48)):
    return np.random.default_rng(seed).random(shape)


def test_zero_sigma_is_identity():
    f = _img()
    assert np.array_equal(blur_region(f, BlurConfig(REGION, 0.0)), f)


@pytest.mark.parametrize("shape", ["rectangle", "ellipse"])
def test_wide_sigma_flattens_region(shape):
    f = _img(1)
    t, l, b, r = REGION
    cfg = BlurConfig(REGION, sigma=float(max(b - t, r - l)), feather=0, shape=shape)
    out = blur_region(f, cfg)
    inside = region_mask(f.shape, cfg) > 0
    assert out[inside].std() < 0.02


@given(sigma=st.floats(0.1, 30.0), feather=st.floats(0.0, 8.0), seed=st.integers(0, 1000))
@settings(max_examples=30)
def test_outside_pixels_untouched(sigma, feather, seed):
    f = _img(seed)
    out = blur_region(f, BlurConfig(REGION, sigma, feather))
    outside = region_mask(f.shape, BlurConfig(REGION, sigma, feather)) == 0
    assert np.array_equal(out[outside], f[outside])


@given(a=arrays(float, (24, 30), elements=st.floats(0, 1)), b=arrays(float, (24, 30), elements=st.floats(0, 1)),
       sigma=st.floats(0.5, 6.0))
@settings(max_examples=30)
def test_blur_is_linear(a, b, sigma):
    cfg = BlurConfig((2, 3, 20, 27), sigma)
    assert np.allclose(blur_region(a + b, cfg), blur_region(a, cfg) + blur_region(b, cfg), atol=1e-6)


def test_feather_ramps_linearly():
    m = region_mask((20, 20), BlurConfig((0, 0, 20, 20), 1.0, feather=4))
    assert np.allclose(m[10, :5], [0.125, 0.375, 0.625, 0.875, 1.0])


@pytest.mark.parametrize("kw", [dict(sigma=-1), dict(feather=-1), dict(region=(5, 5, 5, 9))])
def test_config_validation(kw):
    args = dict(region=REGION, sigma=1.0, feather=3.0) | kw
    with pytest.raises(ValueError):
        BlurConfig(**args)


def test_region_must_fit():
    with pytest.raises(ValueError):
        blur_region(_img(), BlurConfig((0, 0, 64, 64), 2.0))


@pytest.mark.parametrize("grid", [[], [-1, 1], [2, 1], [1, 1]])
def test_grid_validation(grid):
    with pytest.raises(ValueError):
        residual_leakage(reference_scene(10.0), grid)


def test_leakage_matches_pipeline_and_is_deterministic():
    sc = reference_scene(10.0, 3)
    a = residual_leakage(sc, [0, 2, 8])
    b = residual_leakage(sc, [0, 2, 8])
    assert [s.value for s in a] == [s.value for s in b]
    assert a[0].value == pytest.approx(evaluate(sc).score, abs=1e-6)
    assert a[0].value > a[1].value > a[2].value


def test_reflective_glasses_need_more_blur():
    grid = [1.0, 1.5, 2.0, 2.5]
    out = {}
    for rho in (0.04, 0.15):
        sc = reference_scene(20.0)
        sc = dataclasses.replace(sc, glasses=dataclasses.replace(sc.glasses, reflectance=rho))
        out[rho] = crossing_sigma(grid, [s.value for s in residual_leakage(sc, grid)], 0.6)
    assert out[0.04] is not None and out[0.15] is not None
    assert out[0.15] > out[0.04]


def test_crossing_sigma():
    assert crossing_sigma([0, 1, 2], [0.9, 0.7, 0.5], 0.6) == pytest.approx(1.5)
    assert crossing_sigma([0, 1], [0.9, 0.8], 0.6) is None
    assert crossing_sigma([0, 1], [0.5, 0.4], 0.6) == 0
