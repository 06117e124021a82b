"""Image types, synthetic eye generation and pre-reduction.

Images are thin immutable wrappers over uint8 numpy arrays.  The synthetic
eye generator stands in for the camera: it gives every downstream stage a
ground-truth geometry and a texture that is a fixed function of *normalized*
radius, so pupil dilation deforms the picture but not the unwrapped signal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .errors import CalibrationError, GeometryError

# Intensity model of the synthetic eye (8-bit scale, before illumination gain)
PUPIL_LEVEL = 25.0
IRIS_BASE = 120.0
IRIS_AMPLITUDE = 40.0
SCLERA_LUMINANCE = 150.0
SCLERA_RED_SHIFT = 60.0  # per unit redness: R += 2*shift*r, G and B -= shift*r


def _as_u8(a: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(a + 0.5), 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class GrayImage:
    width: int
    height: int
    data: bytes

    def __post_init__(self):
        if len(self.data) != self.width * self.height:
            raise ValueError("gray data length must be width*height")

    @classmethod
    def from_array(cls, a: np.ndarray) -> "GrayImage":
        a = np.asarray(a, dtype=np.uint8)
        h, w = a.shape
        return cls(w, h, a.tobytes())

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.data, dtype=np.uint8).reshape(self.height, self.width)


@dataclass(frozen=True)
class RgbImage:
    width: int
    height: int
    data: bytes

    def __post_init__(self):
        if self.width < 64 or self.height < 64:
            raise ValueError("image must be at least 64x64")
        if len(self.data) != self.width * self.height * 3:
            raise ValueError("rgb data length must be width*height*3")

    @classmethod
    def from_array(cls, a: np.ndarray) -> "RgbImage":
        a = np.asarray(a, dtype=np.uint8)
        h, w, _ = a.shape
        return cls(w, h, a.tobytes())

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.data, dtype=np.uint8).reshape(self.height, self.width, 3)


@dataclass(frozen=True)
class EyeParams:
    image_size: int = 256
    center: Tuple[float, float] = (128.0, 128.0)
    pupil_radius: float = 30.0
    iris_radius: float = 90.0
    texture_seed: int = 0
    dilation: float = 1.0
    redness: float = 0.0
    illumination_gain: float = 1.0
    noise_sigma: float = 0.0
    # optional texture modifiers (default off); rotation is radians applied
    # to the angular texture coordinate, dark_band dims ρ in [lo, hi)
    texture_rotation: float = 0.0
    dark_band: Optional[Tuple[float, float]] = None

    def validate(self) -> None:
        if not (0.0 <= self.redness <= 1.0):
            raise GeometryError("redness must be in [0,1]")
        if self.dilation <= 0 or self.illumination_gain <= 0 or self.noise_sigma < 0:
            raise GeometryError("dilation/gain must be > 0, noise_sigma >= 0")
        rp = self.pupil_radius * self.dilation
        if not (0 < rp < self.iris_radius < self.image_size / 2):
            raise GeometryError(
                f"invalid geometry: pupil {rp:.1f} iris {self.iris_radius:.1f} "
                f"in {self.image_size}px frame"
            )

    def to_json(self) -> str:
        d = {
            "image_size": self.image_size,
            "center": list(self.center),
            "pupil_radius": self.pupil_radius,
            "iris_radius": self.iris_radius,
            "texture_seed": self.texture_seed,
            "dilation": self.dilation,
            "redness": self.redness,
            "illumination_gain": self.illumination_gain,
            "noise_sigma": self.noise_sigma,
        }
        if self.texture_rotation:
            d["texture_rotation"] = self.texture_rotation
        if self.dark_band is not None:
            d["dark_band"] = list(self.dark_band)
        return json.dumps(d)

    @classmethod
    def from_json(cls, s: str) -> "EyeParams":
        d = json.loads(s)
        if "center" in d:
            d["center"] = tuple(d["center"])
        if d.get("dark_band") is not None:
            d["dark_band"] = tuple(d["dark_band"])
        return cls(**d)


@dataclass(frozen=True)
class CalibrationSpec:
    target_size: int
    target_center: Tuple[float, float]

    def __post_init__(self):
        if self.target_size < 64:
            raise ValueError("target_size must be >= 64")


def _texture_components(seed: int):
    rng = np.random.default_rng(seed)
    n = 14
    amps = rng.uniform(0.4, 1.0, n)
    ang_freq = rng.integers(1, 17, n).astype(float)  # integer => 2π periodic
    rad_freq = rng.uniform(1.0, 6.0, n)
    ang_phase = rng.uniform(0, 2 * np.pi, n)
    rad_phase = rng.uniform(0, 2 * np.pi, n)
    return amps, ang_freq, rad_freq, ang_phase, rad_phase


def iris_texture(rho: np.ndarray, phi: np.ndarray, params: EyeParams) -> np.ndarray:
    """Iris intensity at normalized radius rho in [0,1] and angle phi.

    Pure function of (rho, phi, texture_seed); dilation never enters here.
    """
    amps, mf, rf, pa, pr = _texture_components(params.texture_seed)
    phi = phi - params.texture_rotation
    t = np.zeros_like(rho, dtype=float)
    for i in range(len(amps)):
        t += amps[i] * np.cos(mf[i] * phi + pa[i]) * np.cos(np.pi * rf[i] * rho + pr[i])
    t /= amps.sum()
    out = IRIS_BASE + IRIS_AMPLITUDE * t
    if params.dark_band is not None:
        lo, hi = params.dark_band
        band = (rho >= lo) & (rho < hi)
        out = np.where(band, out * 0.3, out)
    return out


def generate_synthetic_eye(params: EyeParams) -> RgbImage:
    """Render a synthetic eye: dark pupil disc, seeded iris annulus, sclera.

    Deterministic in params; noise comes from a stream derived from
    texture_seed so the whole image is bit-reproducible.
    """
    params.validate()
    n = params.image_size
    cx, cy = params.center
    rp = params.pupil_radius * params.dilation
    ri = params.iris_radius

    yy, xx = np.mgrid[0:n, 0:n].astype(float)
    dx = xx - cx
    dy = yy - cy
    d = np.hypot(dx, dy)
    phi = np.arctan2(dy, dx)

    rho = np.clip((d - rp) / (ri - rp), 0.0, 1.0)
    iris = iris_texture(rho, phi, params)

    lum = np.where(d <= rp, PUPIL_LEVEL, np.where(d <= ri, iris, SCLERA_LUMINANCE))
    r = lum.copy()
    g = lum.copy()
    b = lum.copy()
    sclera = d > ri
    r[sclera] += 2 * SCLERA_RED_SHIFT * params.redness
    g[sclera] -= SCLERA_RED_SHIFT * params.redness
    b[sclera] -= SCLERA_RED_SHIFT * params.redness

    img = np.stack([r, g, b], axis=-1) * params.illumination_gain
    if params.noise_sigma > 0:
        noise_rng = np.random.default_rng((params.texture_seed * 0x9E3779B9 + 0xA5A5) & 0xFFFFFFFF)
        img = img + noise_rng.normal(0.0, params.noise_sigma, img.shape)
    return RgbImage.from_array(_as_u8(img))


def split_rgb(img: RgbImage) -> Tuple[GrayImage, GrayImage, GrayImage]:
    a = img.to_array()
    return (
        GrayImage.from_array(a[:, :, 0]),
        GrayImage.from_array(a[:, :, 1]),
        GrayImage.from_array(a[:, :, 2]),
    )


def recombine(r: GrayImage, g: GrayImage, b: GrayImage) -> RgbImage:
    a = np.stack([r.to_array(), g.to_array(), b.to_array()], axis=-1)
    return RgbImage.from_array(a)


def to_gray(img: RgbImage) -> GrayImage:
    """Luminance plane (R+G+B)/3, round-half-up.

    Used for boundary detection: the generator's sclera red bias is
    luminance-preserving, so geometry is insensitive to congestion.
    """
    a = img.to_array().astype(float)
    return GrayImage.from_array(_as_u8(a.mean(axis=2)))


def photometric_align(img: GrayImage) -> GrayImage:
    a = img.to_array().astype(float)
    lo, hi = a.min(), a.max()
    if hi == lo:
        return img
    return GrayImage.from_array(_as_u8((a - lo) * 255.0 / (hi - lo)))


def _bilinear(a: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Sample a (H,W) or (H,W,C) float array at real coords, clamped."""
    h, w = a.shape[:2]
    x = np.clip(x, 0.0, w - 1.0)
    y = np.clip(y, 0.0, h - 1.0)
    x0 = np.floor(x).astype(int)
    y0 = np.floor(y).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    if a.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    v00 = a[y0, x0]
    v01 = a[y0, x1]
    v10 = a[y1, x0]
    v11 = a[y1, x1]
    return (
        v00 * (1 - fx) * (1 - fy)
        + v01 * fx * (1 - fy)
        + v10 * (1 - fx) * fy
        + v11 * fx * fy
    )


def geometric_calibrate(img: RgbImage, spec: CalibrationSpec, geometry_hint=None) -> RgbImage:
    """Resample so the eye center lands on target_center at target_size.

    Without a hint the source center is the image center (center-crop/scale).
    Scale maps the smaller source dimension onto target_size.
    """
    if spec.target_size > 4 * min(img.width, img.height):
        raise CalibrationError("target more than 4x source size")
    if geometry_hint is not None:
        src_cx, src_cy = geometry_hint.iris.cx, geometry_hint.iris.cy
    else:
        src_cx, src_cy = img.width / 2.0, img.height / 2.0
    s = min(img.width, img.height) / spec.target_size
    tx, ty = spec.target_center
    out_y, out_x = np.mgrid[0 : spec.target_size, 0 : spec.target_size].astype(float)
    src_x = src_cx + (out_x - tx) * s
    src_y = src_cy + (out_y - ty) * s
    vals = _bilinear(img.to_array().astype(float), src_x, src_y)
    return RgbImage.from_array(_as_u8(vals))


# --- PPM / PGM binary I/O -------------------------------------------------

def write_ppm(img: RgbImage, path) -> None:
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (img.width, img.height))
        f.write(img.data)


def read_ppm(path) -> RgbImage:
    w, h, data = _read_netpbm(path, b"P6")
    return RgbImage(w, h, data)


def write_pgm(img: GrayImage, path) -> None:
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (img.width, img.height))
        f.write(img.data)


def read_pgm(path) -> GrayImage:
    w, h, data = _read_netpbm(path, b"P5")
    return GrayImage(w, h, data)


def _read_netpbm(path, magic: bytes):
    return _parse_netpbm(Path(path).read_bytes(), magic)


def _parse_netpbm(raw: bytes, magic: bytes):
    if not raw.startswith(magic):
        raise ValueError(f"not a {magic.decode()} stream")
    # header: magic, width, height, maxval, separated by whitespace/comments
    tokens = []
    i = 2
    while len(tokens) < 3:
        while i < len(raw) and raw[i : i + 1].isspace():
            i += 1
        if raw[i : i + 1] == b"#":
            while i < len(raw) and raw[i] != 0x0A:
                i += 1
            continue
        j = i
        while j < len(raw) and not raw[j : j + 1].isspace():
            j += 1
        tokens.append(raw[i:j])
        i = j
    i += 1  # single whitespace after maxval
    w, h, maxval = (int(t) for t in tokens)
    if maxval != 255:
        raise ValueError("only maxval 255 supported")
    channels = 3 if magic == b"P6" else 1
    return w, h, raw[i : i + w * h * channels]
