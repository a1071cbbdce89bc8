"""Deterministic proxy renderer.

Maps ``(SceneParameters, SceneLayout)`` to a small feature image: one
intensity channel plus seven one-hot occupancy channels, and to a label
image. The camera looks straight down on a square window of the world
whose side is proportional to camera height; pitch slides the window
away from the camera position at the window's near edge. Footprints are
rasterized at cell centers (closed rectangles) and painted in ascending
height, so taller objects occlude shorter ones.

Per cell the intensity is::

    clamp(light/6 * shading * exp(-scatter_density * depth), 0, 1)

``shading`` combines a class albedo, an ambient-plus-direct sun term
``ambient + (1 - ambient) * sin(elevation)``, a side-lighting term
driven by sun azimuth against the visible object's orientation, a
color-temperature gain of at least one, a world-fixed ground texture
(gain in [1, 1 + texture_amp]) and cast shadows on open ground. ``depth``
is the camera distance relative to ``depth_ref``, scaled by the
scattering coefficient and the field of view.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .scene_model import N_CLASSES, Region, SceneLayout, SceneParameters

BACKGROUND = 255
N_CHANNELS = 1 + N_CLASSES

ALBEDO = np.array([0.6, 0.5, 0.7, 0.35, 0.3, 0.55, 1.0])


@dataclass(frozen=True)
class RenderConfig:
    width: int = 32
    height: int = 32
    region: Region = field(default_factory=Region)
    span_per_meter: float = 24.0
    depth_ref: float = 50.0
    shadow_factor: float = 0.5
    max_shadow: float = 40.0
    side_weight: float = 0.3
    texture_amp: float = 0.25
    texture_period: float = 5.0
    ambient: float = 0.4

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("render grid must be positive")


@dataclass
class FeatureImage:
    """``intensity`` is (H, W) in [0, 1]; ``occupancy`` is (7, H, W) in {0, 1}."""

    intensity: np.ndarray
    occupancy: np.ndarray

    @property
    def height(self) -> int:
        return self.intensity.shape[0]

    @property
    def width(self) -> int:
        return self.intensity.shape[1]

    @property
    def channels(self) -> int:
        return 1 + self.occupancy.shape[0]

    def to_array(self) -> np.ndarray:
        """Channel-major ``(C, H, W)`` float array, intensity first."""
        return np.concatenate([self.intensity[None].astype(np.float64),
                               self.occupancy.astype(np.float64)])

    @classmethod
    def from_array(cls, arr) -> "FeatureImage":
        arr = np.asarray(arr, dtype=np.float64)
        return cls(arr[0].copy(), np.rint(arr[1:]).astype(np.uint8))


@dataclass
class LabelImage:
    """Per-cell class id, `BACKGROUND` where nothing is visible."""

    labels: np.ndarray

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


@dataclass(frozen=True)
class View:
    x0: float
    ytop: float
    cell_w: float
    cell_h: float
    span: float

    def centers(self, H, W):
        xs = self.x0 + (np.arange(W) + 0.5) * self.cell_w
        ys = self.ytop - (np.arange(H) + 0.5) * self.cell_h
        return np.meshgrid(xs, ys)


def camera_view(theta: SceneParameters, cfg: RenderConfig) -> View:
    """World window seen by the camera for this parameter vector.

    The window is centered on the region center, shifted forward by
    ``span * tan(pitch)``; the camera sits at the unshifted near edge.
    """
    span = cfg.span_per_meter * theta.camera_height
    cx, cy = cfg.region.center
    cy = cy + span * math.tan(theta.camera_pitch)
    return View(cx - 0.5 * span, cy + 0.5 * span, span / cfg.width, span / cfg.height, span)


def camera_position(theta: SceneParameters, cfg: RenderConfig) -> tuple[float, float]:
    span = cfg.span_per_meter * theta.camera_height
    cx, cy = cfg.region.center
    return cx, cy - 0.5 * span


def ground_texture(px, py, cfg: RenderConfig) -> np.ndarray:
    """World-fixed pattern in [0, 1] at world coordinates ``(px, py)``."""
    k = 2.0 * math.pi / cfg.texture_period
    return 0.5 + 0.5 * np.cos(k * px) * np.cos(k * py)


def _painter_order(layout: SceneLayout) -> np.ndarray:
    n = len(layout)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    return np.lexsort((np.arange(n), layout.class_ids(), layout.heights()))


def visible_index(layout: SceneLayout, view: View, cfg: RenderConfig) -> np.ndarray:
    """Index into ``layout.objects`` of the visible object per cell, -1 if none."""
    order = _painter_order(layout)
    if order.size == 0:
        return np.full((cfg.height, cfg.width), -1, dtype=np.int32)
    rects = layout.rects()[order]
    idx = _kernels.paint_labels(rects, order.astype(np.int32), view.x0, view.ytop,
                                view.cell_w, view.cell_h, cfg.height, cfg.width)
    return np.asarray(idx, dtype=np.int32)


def _labels_from_index(idx: np.ndarray, layout: SceneLayout) -> np.ndarray:
    out = np.full(idx.shape, BACKGROUND, dtype=np.uint8)
    if len(layout):
        ids = layout.class_ids()
        hit = idx >= 0
        out[hit] = ids[idx[hit]]
    return out


def _shadow_mask(theta: SceneParameters, layout: SceneLayout, view: View,
                 cfg: RenderConfig) -> np.ndarray:
    if len(layout) == 0 or theta.sun_elevation <= 0:
        return np.zeros((cfg.height, cfg.width), dtype=bool)
    t = math.tan(theta.sun_elevation)
    dx, dy = -math.cos(theta.sun_azimuth), -math.sin(theta.sun_azimuth)
    base = layout.rects()
    lengths = np.minimum(layout.heights() / max(t, 1e-9), cfg.max_shadow)
    copies = []
    # union of the footprint swept away from the sun, sampled at 4 offsets
    for f in (0.25, 0.5, 0.75, 1.0):
        r = base.copy()
        r[:, 0] += f * lengths * dx
        r[:, 1] += f * lengths * dy
        copies.append(r)
    mask = _kernels.paint_mask(np.concatenate(copies), view.x0, view.ytop,
                               view.cell_w, view.cell_h, cfg.height, cfg.width)
    return np.asarray(mask, dtype=bool)


def _render_all(theta: SceneParameters, layout: SceneLayout, cfg: RenderConfig):
    view = camera_view(theta, cfg)
    H, W = cfg.height, cfg.width
    idx = visible_index(layout, view, cfg)
    labels = _labels_from_index(idx, layout)

    elev, az = theta.sun_elevation, theta.sun_azimuth
    gain = 1.0 + 0.3 * theta.color_temperature
    px, py = view.centers(H, W)
    sun = cfg.ambient + (1.0 - cfg.ambient) * math.sin(elev)
    shading = sun * gain * (1.0 + cfg.texture_amp * ground_texture(px, py, cfg))
    shadow = _shadow_mask(theta, layout, view, cfg) & (idx < 0)
    shading[shadow] *= cfg.shadow_factor
    hit = idx >= 0
    if hit.any():
        ids = layout.class_ids()[idx[hit]]
        orient = np.array([o.orientation for o in layout.objects])[idx[hit]]
        side = cfg.side_weight * math.cos(elev) * np.maximum(0.0, np.cos(az - orient))
        shading[hit] = ALBEDO[ids] * gain * (sun + side)

    cam_x, cam_y = camera_position(theta, cfg)
    dist = np.sqrt((px - cam_x) ** 2 + (py - cam_y) ** 2 + theta.camera_height ** 2)
    depth = ((0.5 + theta.scatter_coefficient) * 2.0 * math.tan(0.5 * theta.camera_fov)
             * dist / cfg.depth_ref)
    intensity = theta.light_intensity / 6.0 * shading * np.exp(-theta.scatter_density * depth)
    intensity = np.clip(intensity, 0.0, 1.0)

    occ = np.zeros((N_CLASSES, H, W), dtype=np.uint8)
    for c in range(N_CLASSES):
        occ[c] = labels == c
    return FeatureImage(intensity, occ), LabelImage(labels)


def render(theta: SceneParameters, layout: SceneLayout,
           cfg: RenderConfig = RenderConfig()) -> FeatureImage:
    return _render_all(theta, layout, cfg)[0]


def render_labels(layout: SceneLayout, cfg: RenderConfig = RenderConfig(),
                  theta: SceneParameters | None = None) -> LabelImage:
    """Label image for a layout.

    Labels depend on the camera window, so pass the same ``theta`` used
    for `render`; the default is the mid-range camera.
    """
    theta = theta if theta is not None else SceneParameters()
    view = camera_view(theta, cfg)
    return LabelImage(_labels_from_index(visible_index(layout, view, cfg), layout))


def render_pair(theta, layout, cfg: RenderConfig = RenderConfig()):
    """``(FeatureImage, LabelImage)`` from one rasterization pass."""
    return _render_all(theta, layout, cfg)


# -- discriminator input adapters --------------------------------------------

def flatten_features(img) -> np.ndarray:
    """Flatten channel-major: channel, then row, then column.

    Accepts a `FeatureImage` or any array; a (H, W) array is one channel.
    """
    if isinstance(img, FeatureImage):
        return img.to_array().ravel()
    return np.asarray(img, dtype=np.float64).ravel()


def unflatten_features(vec, height: int, width: int, channels: int = N_CHANNELS):
    arr = np.asarray(vec, dtype=np.float64)
    if arr.size != height * width * channels:
        raise ValueError(f"vector of length {arr.size} is not {channels}x{height}x{width}")
    arr = arr.reshape(channels, height, width)
    if channels == N_CHANNELS:
        return FeatureImage.from_array(arr)
    return arr


def pooled_features(img: FeatureImage, factor: int = 4) -> np.ndarray:
    """Block-average every channel by ``factor`` then flatten channel-major."""
    arr = img.to_array()
    C, H, W = arr.shape
    if H % factor or W % factor:
        raise ValueError(f"grid {H}x{W} not divisible by pool factor {factor}")
    pooled = arr.reshape(C, H // factor, factor, W // factor, factor).mean(axis=(2, 4))
    return pooled.ravel()


SUMMARY_BANDS = 4
SUMMARY_HIST_BINS = 8
SUMMARY_LENGTH = 37


def _autocorr(I: np.ndarray, lag: int) -> float:
    a = np.concatenate([I[:, :-lag].ravel(), I[:-lag, :].ravel()])
    b = np.concatenate([I[:, lag:].ravel(), I[lag:, :].ravel()])
    sa, sb = a.std(), b.std()
    if sa < 1e-12 or sb < 1e-12:
        return 0.0
    return float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))


def summary_features(img: FeatureImage) -> np.ndarray:
    """Fixed-length summary of a feature image.

    Layout (length 37): intensity mean, std, mean over open ground, mean
    over objects, 10th/50th/90th percentile, open-ground fraction; mean
    intensity of 4 horizontal bands far to near; 8-bin intensity
    histogram (fractions); per-class occupancy fraction; per-class
    boundary density (fraction of 4-neighbour edges that cross the class
    boundary), which tracks apparent object size; mean absolute intensity
    gradient and the lag-1 and lag-2 intensity autocorrelations, which
    track the apparent scale of ground texture.
    """
    I = img.intensity
    occ = img.occupancy.astype(np.float64)
    n = I.size
    ground = occ.sum(axis=0) == 0
    head = [
        I.mean(), I.std(),
        I[ground].mean() if ground.any() else 0.0,
        I[~ground].mean() if (~ground).any() else 0.0,
        *np.percentile(I, [10, 50, 90]),
        ground.mean(),
    ]
    bands = [b.mean() for b in np.array_split(I, SUMMARY_BANDS, axis=0)]
    hist = np.histogram(I, bins=SUMMARY_HIST_BINS, range=(0.0, 1.0))[0] / n
    frac = occ.reshape(occ.shape[0], -1).mean(axis=1)
    n_edges = I.shape[0] * (I.shape[1] - 1) + (I.shape[0] - 1) * I.shape[1]
    edges = (np.abs(np.diff(occ, axis=1)).sum(axis=(1, 2))
             + np.abs(np.diff(occ, axis=2)).sum(axis=(1, 2))) / max(n_edges, 1)
    grad = 0.5 * (np.abs(np.diff(I, axis=0)).mean() + np.abs(np.diff(I, axis=1)).mean())
    texture = [grad, _autocorr(I, 1), _autocorr(I, 2)]
    return np.concatenate([head, bands, hist, frac, edges, texture]).astype(np.float64)


FEATURE_MODES = ("summary", "pooled", "flat")


def extract_features(img: FeatureImage, mode: str = "summary", pool: int = 4) -> np.ndarray:
    if mode == "summary":
        return summary_features(img)
    if mode == "pooled":
        return pooled_features(img, pool)
    if mode == "flat":
        return flatten_features(img)
    raise ValueError(f"unknown feature mode {mode!r}; expected one of {FEATURE_MODES}")
