"""Pupil/iris boundary detection and morphology checks.

The detector is the circular integro-differential search: for a grid of
candidate centers and radii, take the mean intensity around each circle,
smooth along the radius axis (Gaussian σ=2 px) and maximize the absolute
radial gradient.  Ties break by smallest radius, then smallest (cy, cx),
so results are fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .errors import GeometryError, NoBoundaryError
from .imaging import GrayImage, RgbImage, _bilinear

CONTRAST_FLOOR = 8.0  # intensity units; below this no boundary is declared
SMOOTH_SIGMA = 2.0
N_THETA = 64
CENTER_WINDOW = 12  # px search half-window around the seeded center


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    r: float

    def __post_init__(self):
        if self.r <= 0:
            raise GeometryError("circle radius must be > 0")


@dataclass(frozen=True)
class EyeGeometry:
    pupil: Circle
    iris: Circle

    def validate(self) -> None:
        d = np.hypot(self.pupil.cx - self.iris.cx, self.pupil.cy - self.iris.cy)
        if d + self.pupil.r > self.iris.r:
            raise GeometryError("pupil not contained in iris")
        ratio = self.pupil.r / self.iris.r
        if not (0.1 <= ratio <= 0.8):
            raise GeometryError(f"radius ratio {ratio:.3f} outside [0.1, 0.8]")


# Fixed enumeration of morphology check names (serialized as-is)
CHECK_CONTAINMENT = "containment"
CHECK_CONCENTRICITY = "concentricity"
CHECK_RADIUS_RATIO = "radius-ratio"
CHECK_IN_FRAME = "in-frame"
CHECK_CONGESTION = "congestion-advisory"
ADVISORY_CHECKS = {CHECK_CONGESTION}


@dataclass(frozen=True)
class MorphologyReport:
    geometry: EyeGeometry
    concentricity: float
    radius_ratio: float
    sclera_redness: float
    passed: bool
    failures: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "pupil": [self.geometry.pupil.cx, self.geometry.pupil.cy, self.geometry.pupil.r],
            "iris": [self.geometry.iris.cx, self.geometry.iris.cy, self.geometry.iris.r],
            "concentricity": self.concentricity,
            "radius_ratio": self.radius_ratio,
            "sclera_redness": self.sclera_redness,
            "passed": self.passed,
            "failures": list(self.failures),
        }


def _criterion_grid(a: np.ndarray, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """|d/dr| of the σ-smoothed circular boundary integral.

    centers: (C,2) array of (cx, cy); radii: (R,) ints.
    Returns (C, R) criterion values.
    """
    thetas = np.linspace(0.0, 2 * np.pi, N_THETA, endpoint=False)
    cos_t = np.cos(thetas).astype(np.float32)
    sin_t = np.sin(thetas).astype(np.float32)
    a32 = a.astype(np.float32)
    radii32 = radii.astype(np.float32)
    out = np.empty((len(centers), len(radii)), dtype=np.float64)
    # chunk over centers to bound temporary-array memory
    for i in range(0, len(centers), 64):
        c = centers[i : i + 64].astype(np.float32)
        xs = c[:, 0, None, None] + radii32[None, :, None] * cos_t
        ys = c[:, 1, None, None] + radii32[None, :, None] * sin_t
        out[i : i + 64] = _bilinear(a32, xs, ys).mean(axis=2)
    smooth = gaussian_filter1d(out, sigma=SMOOTH_SIGMA, axis=1, mode="nearest")
    return np.abs(np.gradient(smooth, axis=1))


def _pick_best(crit: np.ndarray, centers: np.ndarray, radii: np.ndarray) -> Tuple[Circle, float]:
    best = crit.max()
    ci, ri = np.nonzero(crit == best)
    # smallest radius, then smallest (cy, cx)
    order = sorted(zip(ri, ci), key=lambda t: (radii[t[0]], centers[t[1], 1], centers[t[1], 0]))
    ri0, ci0 = order[0]
    cx, cy = centers[ci0]
    return Circle(float(cx), float(cy), float(radii[ri0])), float(best)


def _seed_center(a: np.ndarray) -> Tuple[float, float]:
    """Centroid of dark pixels; falls back to the image center.

    The pupil is the darkest structure by construction, so this keeps the
    exhaustive center search to a small window without moving the maximum.
    """
    lo, hi = a.min(), a.max()
    if hi == lo:
        return (a.shape[1] / 2.0, a.shape[0] / 2.0)
    mask = a <= lo + 0.3 * (hi - lo)
    ys, xs = np.nonzero(mask)
    if len(xs) == 0:
        return (a.shape[1] / 2.0, a.shape[0] / 2.0)
    return (float(xs.mean()), float(ys.mean()))


def _center_grid(seed_x: float, seed_y: float, window: int, shape, stride: int = 1) -> np.ndarray:
    h, w = shape
    x0 = int(round(seed_x))
    y0 = int(round(seed_y))
    xs = np.arange(max(0, x0 - window), min(w, x0 + window + 1), stride)
    ys = np.arange(max(0, y0 - window), min(h, y0 + window + 1), stride)
    gx, gy = np.meshgrid(xs, ys)
    return np.stack([gx.ravel(), gy.ravel()], axis=1).astype(float)


def find_pupil(gray: GrayImage) -> Circle:
    a = gray.to_array().astype(float)
    min_dim = min(gray.width, gray.height)
    radii = np.arange(int(np.ceil(0.05 * min_dim)), int(np.floor(0.45 * min_dim)) + 1)
    sx, sy = _seed_center(a)
    # coarse pass (stride-3 centers), then exhaustive refinement around the peak
    coarse = _center_grid(sx, sy, CENTER_WINDOW, a.shape, stride=3)
    crit = _criterion_grid(a, coarse, radii)
    peak, _ = _pick_best(crit, coarse, radii)
    centers = _center_grid(peak.cx, peak.cy, 4, a.shape)
    near = radii[np.abs(radii - peak.r) <= 8]
    crit = _criterion_grid(a, centers, near)
    circle, best = _pick_best(crit, centers, near)
    if best < CONTRAST_FLOOR:
        raise NoBoundaryError(f"pupil criterion {best:.2f} below contrast floor")
    return circle


def find_iris(gray: GrayImage, pupil: Circle) -> Circle:
    a = gray.to_array().astype(float)
    min_dim = min(gray.width, gray.height)
    r_lo = int(np.floor(1.25 * pupil.r)) + 1
    r_hi = int(np.ceil(0.48 * min_dim)) - 1
    if r_lo > r_hi:
        raise NoBoundaryError("empty iris radius search range")
    radii = np.arange(r_lo, r_hi + 1)
    centers = _center_grid(pupil.cx, pupil.cy, 5, a.shape)
    keep = np.hypot(centers[:, 0] - round(pupil.cx), centers[:, 1] - round(pupil.cy)) <= 5.0
    centers = centers[keep]
    coarse = centers[:: 4]
    crit = _criterion_grid(a, coarse, radii)
    peak, _ = _pick_best(crit, coarse, radii)
    near = radii[np.abs(radii - peak.r) <= 8]
    crit = _criterion_grid(a, centers, near)
    circle, best = _pick_best(crit, centers, near)
    if best < CONTRAST_FLOOR:
        raise NoBoundaryError(f"iris criterion {best:.2f} below contrast floor")
    return circle


def sclera_redness(img: RgbImage, geom: EyeGeometry) -> float:
    a = img.to_array().astype(float)
    h, w = a.shape[:2]
    yy, xx = np.mgrid[0:h, 0:w].astype(float)
    d = np.hypot(xx - geom.iris.cx, yy - geom.iris.cy)
    ring = (d > geom.iris.r) & (d <= 1.4 * geom.iris.r)
    rgb = a[ring]
    total = rgb.sum(axis=1)
    ok = total > 0
    if not ok.any():
        return 1.0 / 3.0
    return float((rgb[ok, 0] / total[ok]).mean())


def morphology_check(img: RgbImage, geom: EyeGeometry) -> MorphologyReport:
    failures = []
    conc = float(np.hypot(geom.pupil.cx - geom.iris.cx, geom.pupil.cy - geom.iris.cy))
    ratio = geom.pupil.r / geom.iris.r
    if conc + geom.pupil.r > geom.iris.r:
        failures.append(CHECK_CONTAINMENT)
    if conc > 0.15 * geom.iris.r:
        failures.append(CHECK_CONCENTRICITY)
    if not (0.1 <= ratio <= 0.8):
        failures.append(CHECK_RADIUS_RATIO)
    if (
        geom.iris.cx - geom.iris.r < 0
        or geom.iris.cy - geom.iris.r < 0
        or geom.iris.cx + geom.iris.r > img.width - 1
        or geom.iris.cy + geom.iris.r > img.height - 1
    ):
        failures.append(CHECK_IN_FRAME)
    redness = sclera_redness(img, geom)
    if redness > 0.55:
        # congestion is recorded but never the sole cause of rejection
        failures.append(CHECK_CONGESTION)
    passed = all(f in ADVISORY_CHECKS for f in failures)
    return MorphologyReport(geom, conc, ratio, redness, passed, failures)
