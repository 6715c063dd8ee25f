from dataclasses import replace

import numpy as np
import pytest
from PIL import Image

from eyepeek.metrics import cwssim
from eyepeek.simulate import (Exposure, FrameStack, Lighting, Tremor, UnsupportedGlyph, auto_exposure,
                              ideal_reflection, ink_bbox, photon_counts, render_template, sense,
                              synthesize_frames)
from eyepeek.optics import CameraSpec


class TestRenderTemplate:
    def test_cap_height_of_h(self):
        img = render_template("H", 40)
        y0, _, y1, _ = ink_bbox(img)
        assert abs((y1 - y0) - 40) <= 1

    def test_deterministic(self):
        assert np.array_equal(render_template("TEXT", 9.3), render_template("TEXT", 9.3))

    def test_small_w_matches_downsampled_large(self):
        small = render_template("W", 5)
        assert (small < 0.9).any()
        big = render_template("W", 40)
        down = np.asarray(Image.fromarray(big.astype(np.float32), "F").resize(
            (small.shape[1], small.shape[0]), Image.BOX), dtype=float)
        assert cwssim(small, down).value >= 0.8

    def test_unsupported_glyph_named(self):
        with pytest.raises(UnsupportedGlyph, match="é"):
            render_template("café", 10)

    def test_minimum_size(self):
        with pytest.raises(ValueError):
            render_template("A", 2.5)


def quiet_scene(ref_scene, **lighting):
    sc = ref_scene(20.0, seed=3)
    cam = replace(sc.camera, exposure_policy="manual", photon_scale=1e12, read_noise=0.0, black_level=0.0,
                  iso_gain=1.0 / sc.glasses.reflectance, exposure_time=1 / 30)
    lt = replace(sc.lighting, env_illuminance=0.0, face_reflectance=0.0, **lighting)
    return replace(sc, camera=cam, lighting=lt, tremor=Tremor(0.0, 5.0))


class TestSynthesize:
    def test_noise_free_limit(self, ref_scene):
        sc = quiet_scene(ref_scene)
        stack = synthesize_frames(sc, 3)
        ideal = ideal_reflection(sc)
        for f in stack.frames:
            assert np.max(np.abs(f - ideal)) <= 1 / 255 + 1e-9

    def test_deterministic(self, ref_scene):
        a = synthesize_frames(ref_scene(10.0, seed=5), 4)
        b = synthesize_frames(ref_scene(10.0, seed=5), 4)
        assert np.array_equal(a.frames, b.frames) and np.array_equal(a.offsets, b.offsets)
        c = synthesize_frames(ref_scene(10.0, seed=6), 4)
        assert not np.array_equal(a.frames, c.frames)

    def test_inter_frame_variance(self, ref_scene):
        sc = replace(ref_scene(20.0), tremor=Tremor(0.0, 5.0))
        stack = synthesize_frames(sc, 8)
        var = stack.frames.var(axis=0)
        assert np.mean(var > 0) >= 0.99

    def test_intra_frame_noise_depends_on_level(self, ref_scene):
        # shot noise only, kept below clipping
        sc = replace(ref_scene(40.0), tremor=Tremor(0.0, 5.0))
        sc = replace(sc, camera=replace(sc.camera, read_noise=0.0, exposure_policy="manual", iso_gain=6.0))
        stack = synthesize_frames(sc, 16)
        assert stack.frames.max() < 1.0
        ideal = ideal_reflection(sc)
        sd = stack.frames.std(axis=0)
        bright, dark = sd[ideal > 0.99].mean(), sd[ideal < 0.01].mean()
        assert bright > 1.2 * dark

    def test_tiny_reflection_flagged(self, ref_scene):
        stack = synthesize_frames(ref_scene(1.0), 2)
        assert any("unresolvable" in w for w in stack.meta["warnings"])

    def test_frame_values_normalised_and_quantised(self, ref_scene):
        stack = synthesize_frames(ref_scene(10.0), 2)
        f = stack.frames
        assert f.min() >= 0 and f.max() <= 1
        assert np.allclose(f * 255, np.round(f * 255))

    def test_bad_frame_count(self, ref_scene):
        with pytest.raises(ValueError):
            synthesize_frames(ref_scene(10.0), 0)

    def test_framestack_validation(self):
        with pytest.raises(ValueError):
            FrameStack(np.zeros((2, 4, 4)), 30, np.zeros((3, 2)), 0)


class TestSensor:
    cam = CameraSpec(photon_scale=200.0, read_noise=0.0, black_level=0.0)

    def test_halving_exposure_halves_photons(self):
        irr = np.full(10_000, 0.5)
        rng = np.random.default_rng(0)
        for t in (1 / 30, 1 / 60):
            ex = Exposure(t, 1.0)
            lam = 0.5 * ex.exposure_fraction * self.cam.photon_scale
            counts = photon_counts(irr, ex, self.cam, rng)
            assert abs(counts.mean() - lam) <= 3 * np.sqrt(lam / irr.size)

    def test_variance_grows_with_gain_squared(self):
        irr = np.full((200, 200), 0.05)
        cam = replace(self.cam, read_noise=0.002)
        v = [sense(irr, Exposure(1 / 30, g), cam, np.random.default_rng(1)).var() for g in (2.0, 4.0)]
        assert v[1] / v[0] == pytest.approx(4.0, rel=0.1)


class TestAutoExposure:
    def test_mid_grey_scene_hits_target(self, ref_scene):
        sc = ref_scene(20.0)
        lt = replace(sc.lighting, text_gray=128, background_gray=128, metering_weight=1.0)
        sc = replace(sc, lighting=lt)
        ex = auto_exposure(sc)
        assert not ex.saturated
        stack = synthesize_frames(sc, 2, ex)
        assert stack.frames.mean() == pytest.approx(0.5, abs=0.05)

    def test_exposure_time_first(self, ref_scene):
        sc = ref_scene(20.0)
        bright = auto_exposure(replace(sc, lighting=replace(sc.lighting, env_illuminance=10.0)))
        assert bright.gain == sc.camera.gain_min and bright.exposure_time < 1 / 30
        dim = auto_exposure(sc)
        assert dim.exposure_time == pytest.approx(1 / sc.camera.frame_rate) and dim.gain > 1

    def test_unreachable_target_flags_saturation(self, ref_scene):
        sc = ref_scene(20.0)
        ex = auto_exposure(replace(sc, lighting=replace(sc.lighting, env_illuminance=1e-4)))
        assert ex.saturated and ex.gain == sc.camera.gain_max


class TestLighting:
    def test_gray_levels_validated(self):
        with pytest.raises(ValueError):
            Lighting(text_gray=300)

    def test_contrast(self):
        assert Lighting(text_gray=200, background_gray=255).contrast == 55
