"""Multi-frame super-resolution of small, noisy reflection crops.

Coordinates: a frame pixel ``(y, x)`` has its centre at ``(y, x)``. Registration
returns per-frame content displacements ``d_k`` relative to the reference
frame, i.e. ``frame_k(p) ~ ref(p - d_k)``. High-resolution pixel ``(i, j)``
at scale ``s`` sits at reference coordinates ``((i + 0.5) / s - 0.5, ...)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from scipy import ndimage, sparse
from scipy.interpolate import CloughTocher2DInterpolator, NearestNDInterpolator
from scipy.spatial import cKDTree

from .simulate import FrameStack

log = logging.getLogger(__name__)

Method = Literal["average", "spline", "robust_l1", "akr"]


class InsufficientFrames(ValueError):
    pass


@dataclass(frozen=True)
class RegistrationResult:
    offsets: np.ndarray  # (n, 2) (dy, dx)
    confidence: np.ndarray  # (n,)
    reference: int


@dataclass(frozen=True)
class MfsrParams:
    method: Method = "akr"
    scale_factor: int = 2
    n_frames: int = 8
    # adaptive kernel regression
    akr_h: float = 1.5
    akr_order: int = 2
    akr_steering: bool = True
    akr_iterations: int = 1
    # robust L1 + bilateral TV
    l1_lambda: float = 0.05
    btv_window: int = 2
    btv_alpha: float = 0.7
    l1_iterations: int = 30
    l1_step: float = 0.01

    def __post_init__(self):
        if self.method not in ("average", "spline", "robust_l1", "akr"):
            raise ValueError(f"unknown MFSR method {self.method!r}")
        if self.scale_factor < 1 or self.n_frames < 1:
            raise ValueError("scale_factor and n_frames must be >= 1")
        if self.akr_order not in (0, 1, 2):
            raise ValueError("akr_order must be 0, 1 or 2")


@dataclass
class Reconstruction:
    image: np.ndarray
    registration: RegistrationResult
    converged: bool = True
    history: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# registration


def _parabolic(cm: float, c0: float, cp: float) -> float:
    denom = cm - 2.0 * c0 + cp
    if denom >= 0:
        return 0.0
    return float(np.clip(0.5 * (cm - cp) / denom, -0.5, 0.5))


def phase_correlate(ref: np.ndarray, img: np.ndarray, whiten: float = 0.0) -> tuple[np.ndarray, float]:
    """Translation of ``img`` relative to ``ref`` and the normalised peak height.

    Hann-apodised cross-correlation. ``whiten`` in [0, 1] raises the
    cross-power magnitude to that power before dividing (1 is classic phase
    correlation; 0 keeps plain correlation, which tolerates noisy frames
    better). The integer peak is refined by a 3-point parabola per axis.
    """
    a = ref - ref.mean()
    b = img - img.mean()
    if not a.any() or not b.any():
        return np.zeros(2), 0.0
    win = np.outer(np.hanning(a.shape[0] + 2)[1:-1], np.hanning(a.shape[1] + 2)[1:-1])
    Fa = np.fft.fft2(a * win)
    Fb = np.fft.fft2(b * win)
    cross = Fb * np.conj(Fa)
    if whiten > 0:
        mag = np.abs(cross)
        cross /= (mag + 1e-3 * mag.max()) ** whiten
        norm = np.sum(np.abs(cross)) / cross.size
    else:
        norm = np.sqrt(np.sum((a * win) ** 2) * np.sum((b * win) ** 2))
    corr = np.real(np.fft.ifft2(cross))
    h, w = corr.shape
    py, px = np.unravel_index(np.argmax(corr), corr.shape)
    dy = _parabolic(corr[(py - 1) % h, px], corr[py, px], corr[(py + 1) % h, px])
    dx = _parabolic(corr[py, (px - 1) % w], corr[py, px], corr[py, (px + 1) % w])
    sy = py if py <= h // 2 else py - h
    sx = px if px <= w // 2 else px - w
    peak = float(np.clip(corr[py, px] / norm, 0.0, 1.0)) if norm > 0 else 0.0
    return np.array([sy + dy, sx + dx]), peak


def _aligned_mean(frames: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    return np.mean([ndimage.shift(f, -d, order=1, mode="nearest") for f, d in zip(frames, offsets)], axis=0)


def register(stack: FrameStack, reference: Optional[int] = None, refine: int = 1,
             whiten: float = 0.0) -> RegistrationResult:
    """Offsets of every frame relative to the reference frame.

    After the pairwise pass, each of ``refine`` passes re-registers all frames
    against the motion-compensated mean, whose noise is lower than any single
    frame's; offsets stay expressed relative to the reference frame.
    """
    n = len(stack)
    if n < 2:
        raise InsufficientFrames("registration needs at least 2 frames")
    ref_idx = n // 2 if reference is None else reference
    frames = np.asarray(stack.frames, dtype=float)
    ref = frames[ref_idx]
    offsets = np.zeros((n, 2))
    conf = np.zeros(n)
    if np.ptp(ref) == 0:
        return RegistrationResult(offsets, conf, ref_idx)
    for k in range(n):
        if k != ref_idx:
            offsets[k], conf[k] = phase_correlate(ref, frames[k], whiten)
    conf[ref_idx] = 1.0
    for _ in range(refine):
        mean = _aligned_mean(frames, offsets)
        pairs = [phase_correlate(mean, f, whiten) for f in frames]
        raw = np.array([p[0] for p in pairs])
        offsets = raw - raw[ref_idx]
        conf = np.array([p[1] for p in pairs])
    return RegistrationResult(offsets, conf, ref_idx)


# ---------------------------------------------------------------------------
# sampling geometry


def hr_grid(shape: tuple[int, int], scale: int) -> tuple[np.ndarray, np.ndarray]:
    """Reference-frame coordinates of every HR pixel centre."""
    H, W = shape[0] * scale, shape[1] * scale
    yy = (np.arange(H) + 0.5) / scale - 0.5
    xx = (np.arange(W) + 0.5) / scale - 0.5
    return np.meshgrid(yy, xx, indexing="ij")


def _sample_cloud(frames: np.ndarray, offsets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All frame samples as points in reference coordinates."""
    n, h, w = frames.shape
    yy, xx = np.meshgrid(np.arange(h, dtype=float), np.arange(w, dtype=float), indexing="ij")
    pts = np.concatenate([np.stack([yy.ravel() - dy, xx.ravel() - dx], axis=1) for dy, dx in offsets])
    return pts, frames.reshape(-1)


def _warp_to_reference(frame: np.ndarray, offset: np.ndarray, scale: int) -> np.ndarray:
    gy, gx = hr_grid(frame.shape, scale)
    return ndimage.map_coordinates(frame, [gy + offset[0], gx + offset[1]], order=1, mode="nearest")


def _average(frames, reg, p: MfsrParams) -> np.ndarray:
    return np.mean([_warp_to_reference(f, o, p.scale_factor) for f, o in zip(frames, reg.offsets)], axis=0)


def _spline(frames, reg, p: MfsrParams) -> np.ndarray:
    pts, vals = _sample_cloud(frames, reg.offsets)
    # merge samples that land on the same spot so the triangulation stays sane
    key = np.round(pts * 64).astype(np.int64)
    _, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.ravel()
    cnt = np.bincount(inv)
    upts = np.stack([np.bincount(inv, pts[:, 0]), np.bincount(inv, pts[:, 1])], axis=1) / cnt[:, None]
    uvals = np.bincount(inv, vals) / cnt
    gy, gx = hr_grid(frames.shape[1:], p.scale_factor)
    q = np.stack([gy.ravel(), gx.ravel()], axis=1)
    out = CloughTocher2DInterpolator(upts, uvals)(q)
    hole = np.isnan(out)
    if hole.any():
        out[hole] = NearestNDInterpolator(upts, uvals)(q[hole])
    return out.reshape(gy.shape)


# ---------------------------------------------------------------------------
# robust L1 with bilateral total variation


def _box_weights(start: float, length: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices and overlap lengths of unit cells [i, i+1) with [start, start+length)."""
    lo = max(int(np.floor(start)), 0)
    hi = min(int(np.ceil(start + length)), n)
    idx = np.arange(lo, hi)
    ov = np.minimum(idx + 1, start + length) - np.maximum(idx, start)
    keep = ov > 1e-12
    return idx[keep], ov[keep]


def observation_matrix(lr_shape: tuple[int, int], offset: np.ndarray, scale: int) -> sparse.csr_matrix:
    """Sparse warp-blur-decimate operator mapping an HR image to one LR frame.

    Each LR pixel averages the HR image over its own footprint, shifted into
    reference coordinates.
    """
    h, w = lr_shape
    H, W = h * scale, w * scale
    rows, cols, vals = [], [], []
    ys = [_box_weights((y - offset[0]) * scale, scale, H) for y in range(h)]
    xs = [_box_weights((x - offset[1]) * scale, scale, W) for x in range(w)]
    for y in range(h):
        iy, wy = ys[y]
        for x in range(w):
            ix, wx = xs[x]
            wgt = np.outer(wy, wx)
            total = wgt.sum()
            if total <= 0:
                continue
            c = (iy[:, None] * W + ix[None, :]).ravel()
            rows.append(np.full(c.size, y * w + x))
            cols.append(c)
            vals.append(wgt.ravel() / total)
    return sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(h * w, H * W))


def _btv_pairs(window: int):
    for l in range(-window, window + 1):
        for m in range(0, window + 1):
            if m == 0 and l <= 0:
                continue
            yield l, m


def _shift_slices(l: int, m: int, H: int, W: int):
    a = (slice(max(l, 0), H + min(l, 0)), slice(max(m, 0), W + min(m, 0)))
    b = (slice(max(-l, 0), H + min(-l, 0)), slice(max(-m, 0), W + min(-m, 0)))
    return a, b


def btv(X: np.ndarray, window: int, alpha: float) -> float:
    H, W = X.shape
    total = 0.0
    for l, m in _btv_pairs(window):
        a, b = _shift_slices(l, m, H, W)
        total += alpha ** (abs(l) + abs(m)) * np.abs(X[a] - X[b]).sum()
    return float(total)


def _btv_grad(X: np.ndarray, window: int, alpha: float) -> np.ndarray:
    H, W = X.shape
    g = np.zeros_like(X)
    for l, m in _btv_pairs(window):
        a, b = _shift_slices(l, m, H, W)
        s = alpha ** (abs(l) + abs(m)) * np.sign(X[a] - X[b])
        g[a] += s
        g[b] -= s
    return g


def l1_objective(X, ops, ys, p: MfsrParams) -> float:
    data = sum(np.abs(A @ X.ravel() - y).sum() for A, y in zip(ops, ys))
    return float(data + p.l1_lambda * btv(X, p.btv_window, p.btv_alpha))


def _robust_l1(frames, reg, p: MfsrParams):
    ops = [observation_matrix(frames.shape[1:], o, p.scale_factor) for o in reg.offsets]
    ys = [f.ravel() for f in frames]
    X = _average(frames, reg, p)
    obj = l1_objective(X, ops, ys, p)
    history = [obj]
    step = p.l1_step
    converged = False
    for _ in range(p.l1_iterations):
        grad = sum((A.T @ np.sign(A @ X.ravel() - y)) for A, y in zip(ops, ys)).reshape(X.shape)
        grad = grad + p.l1_lambda * _btv_grad(X, p.btv_window, p.btv_alpha)
        # fixed step, halved only when it would raise the objective
        trial_step = step
        while True:
            cand = X - trial_step * grad
            cobj = l1_objective(cand, ops, ys, p)
            if cobj <= obj or trial_step < 1e-6:
                break
            trial_step *= 0.5
        if cobj > obj:
            converged = True
            break
        rel = (obj - cobj) / max(obj, 1e-12)
        X, obj = cand, cobj
        history.append(obj)
        if rel < 1e-6:
            converged = True
            break
    return X, converged, history


# ---------------------------------------------------------------------------
# adaptive (steering) kernel regression


def _basis(dy: np.ndarray, dx: np.ndarray, order: int) -> np.ndarray:
    cols = [np.ones_like(dy)]
    if order >= 1:
        cols += [dy, dx]
    if order >= 2:
        cols += [dy * dy, dy * dx, dx * dx]
    return np.stack(cols, axis=-1)


def steering_matrices(pilot: np.ndarray, sigma: float = 1.0, max_condition: float = 100.0,
                      lam: float = 1.0, lam2: float = 1e-2, alpha: float = 0.3) -> np.ndarray:
    """Per-pixel 2x2 steering matrices from the local gradient structure tensor.

    Strong, coherent edges elongate the kernel along the edge; flat areas
    keep it round. Elongation is clipped so the condition number stays at or
    below ``max_condition``.
    """
    gy = ndimage.gaussian_filter(pilot, sigma, order=(1, 0), mode="nearest")
    gx = ndimage.gaussian_filter(pilot, sigma, order=(0, 1), mode="nearest")
    Jyy = ndimage.gaussian_filter(gy * gy, sigma, mode="nearest")
    Jxy = ndimage.gaussian_filter(gy * gx, sigma, mode="nearest")
    Jxx = ndimage.gaussian_filter(gx * gx, sigma, mode="nearest")
    J = np.stack([np.stack([Jyy, Jxy], -1), np.stack([Jxy, Jxx], -1)], -2)
    evals, evecs = np.linalg.eigh(J)  # ascending
    s2 = np.sqrt(np.clip(evals[..., 0], 0, None))
    s1 = np.sqrt(np.clip(evals[..., 1], 0, None))
    scale = max(float(np.median(s1)), 1e-12)
    s1, s2 = s1 / scale, s2 / scale
    elong = np.clip((s1 + lam) / (s2 + lam), 1.0, np.sqrt(max_condition))
    gamma = ((s1 * s2 + lam2) / (1.0 + lam2)) ** alpha
    gamma = np.clip(gamma, 0.25, 4.0)
    v1 = evecs[..., :, 1]  # dominant gradient direction
    v2 = evecs[..., :, 0]
    C = (elong[..., None, None] * v1[..., :, None] * v1[..., None, :]
         + (1.0 / elong)[..., None, None] * v2[..., :, None] * v2[..., None, :])
    return gamma[..., None, None] * C


def kernel_regression(pts: np.ndarray, vals: np.ndarray, shape: tuple[int, int], scale: int,
                      h: float, order: int, C: Optional[np.ndarray] = None,
                      chunk: int = 4096, max_neighbors: int = 128) -> np.ndarray:
    """Locally weighted polynomial fit of a scattered cloud onto the HR grid.

    ``h`` is in HR pixels; the footprint radius is ``3 h``. ``C`` (HR-grid
    steering matrices) turns the isotropic Gaussian into a steered one.
    """
    gy, gx = hr_grid(shape, scale)
    q = np.stack([gy.ravel(), gx.ravel()], axis=1)
    h_ref = h / scale
    radius = 3.0 * h_ref
    if C is not None:
        # elongated kernels reach further along edges
        lam_min = np.clip(np.linalg.eigvalsh(C)[..., 0], 1e-6, None)
        radius = 3.0 * h_ref / np.sqrt(lam_min.min())
        radius = min(radius, 6.0 * h_ref)
    tree = cKDTree(pts)
    k = min(max_neighbors, len(pts))
    out = np.empty(len(q))
    Cf = None if C is None else C.reshape(-1, 2, 2)
    nb = _basis(np.zeros(1), np.zeros(1), order).shape[-1]
    ridge = np.zeros(nb)
    ridge[1:] = 1e-4
    for s in range(0, len(q), chunk):
        qs = q[s: s + chunk]
        dist, idx = tree.query(qs, k=k, distance_upper_bound=radius)
        valid = np.isfinite(dist)
        idx = np.where(valid, idx, 0)
        d = pts[idx] - qs[:, None, :]  # (m, k, 2)
        d_hr = d / h_ref
        if Cf is None:
            quad = np.sum(d_hr * d_hr, axis=-1)
            norm = 1.0
        else:
            Cs = Cf[s: s + chunk]
            quad = np.einsum("mki,mij,mkj->mk", d_hr, Cs, d_hr)
            norm = np.sqrt(np.clip(np.linalg.det(Cs), 1e-12, None))[:, None]
        wgt = norm * np.exp(-0.5 * quad) * valid
        B = _basis(d[..., 0] * scale, d[..., 1] * scale, order)  # HR-pixel units
        BtW = B * wgt[..., None]
        A = np.einsum("mki,mkj->mij", BtW, B) + np.diag(ridge)[None] * (wgt.sum(1)[:, None, None] + 1e-12)
        rhs = np.einsum("mki,mk->mi", BtW, vals[idx])
        empty = wgt.sum(1) <= 1e-12
        A[empty] = np.eye(nb)
        rhs[empty] = 0.0
        sol = np.linalg.solve(A, rhs[..., None])[..., 0]
        out[s: s + chunk] = sol[:, 0]
        if empty.any():
            _, nn = tree.query(qs[empty], k=1)
            out[s: s + chunk][empty] = vals[nn]
    return out.reshape(gy.shape)


def _akr(frames, reg, p: MfsrParams) -> np.ndarray:
    pts, vals = _sample_cloud(frames, reg.offsets)
    shape = frames.shape[1:]
    est = kernel_regression(pts, vals, shape, p.scale_factor, p.akr_h, p.akr_order)
    if not p.akr_steering:
        return est
    for _ in range(p.akr_iterations):
        C = steering_matrices(est)
        est = kernel_regression(pts, vals, shape, p.scale_factor, p.akr_h, p.akr_order, C)
    return est


def reconstruct(stack: FrameStack, params: MfsrParams = MfsrParams(),
                registration: Optional[RegistrationResult] = None) -> Reconstruction:
    """Fuse the first ``params.n_frames`` frames into one image at ``scale_factor`` x."""
    if len(stack) < params.n_frames:
        raise InsufficientFrames(f"need {params.n_frames} frames, stack has {len(stack)}")
    sub = stack.subset(slice(0, params.n_frames))
    frames = sub.frames
    if registration is None:
        if len(sub) >= 2:
            registration = register(sub)
        else:
            registration = RegistrationResult(np.zeros((1, 2)), np.ones(1), 0)
    history, converged = [], True
    if params.method == "average":
        img = _average(frames, registration, params)
    elif params.method == "spline":
        img = _spline(frames, registration, params)
    elif params.method == "robust_l1":
        img, converged, history = _robust_l1(frames, registration, params)
        if not converged:
            log.debug("robust_l1 stopped after %d iterations without converging", params.l1_iterations)
    else:
        img = _akr(frames, registration, params)
    return Reconstruction(img, registration, converged, history)
