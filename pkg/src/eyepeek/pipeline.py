"""Synthesize, optionally degrade, reconstruct and score one scene."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import channel as ch
from .metrics import reflection_similarity
from .mfsr import MfsrParams, Reconstruction, _warp_to_reference, reconstruct
from .simulate import FrameStack, SceneConfig, ideal_reflection, synthesize_frames


@dataclass
class PipelineResult:
    score: float
    stack: FrameStack
    reconstruction: Reconstruction
    template: np.ndarray


def evaluate(scene: SceneConfig, params: MfsrParams = MfsrParams(),
             bandwidth: Optional[float] = None, table: ch.ChannelTable = ch.ChannelTable(),
             frame_filter: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> PipelineResult:
    """Score of the MFSR reconstruction against the ideal reflection.

    ``params.n_frames`` frames reach the reconstructor; with a channel, enough
    source frames are synthesised to survive temporal subsampling.
    """
    n = params.n_frames
    if bandwidth is not None:
        prof = ch.profile(bandwidth, table, scene.camera.frame_rate)
        stack = synthesize_frames(scene, ch.frames_needed(n, scene.camera.frame_rate, prof.output_fps))
        stack = ch.apply(stack, prof, table)
    else:
        stack = synthesize_frames(scene, n)
    if frame_filter is not None:
        stack = FrameStack(np.stack([frame_filter(f) for f in stack.frames]), stack.frame_rate,
                           stack.offsets, stack.seed, dict(stack.meta))
    rec = reconstruct(stack, params)
    ref = rec.registration.reference
    template = ideal_reflection(scene, tuple(stack.offsets[ref]), params.scale_factor)
    return PipelineResult(reflection_similarity(rec.image, template), stack, rec, template)


def single_frame_scores(scene: SceneConfig, stack: FrameStack, scale: int = 2) -> list[float]:
    """Each frame bilinearly upsampled and scored against the template at its own true offset."""
    return [reflection_similarity(_warp_to_reference(f, np.zeros(2), scale),
                                  ideal_reflection(scene, tuple(o), scale))
            for f, o in zip(stack.frames, stack.offsets)]
