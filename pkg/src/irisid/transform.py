"""Polar normalization, weighted surface, Haar analysis and code encoding.

The normalized grid is angles x radii (row = angle).  The wavelet is the
orthonormal Haar pair: a single 1-D step maps (a, b) to ((a+b)/√2, (a−b)/√2),
applied separably for L dyadic levels with the approximation block kept
top-left (standard subband layout).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .errors import (
    LevelError,
    ModelMismatchError,
    OutOfFrameError,
    ShapeError,
    TrainingDataError,
)
from .imaging import GrayImage, _bilinear
from .segmentation import EyeGeometry

DEFAULT_ANGLES = 64
DEFAULT_RADII = 32
DEFAULT_LEVELS = 3
DEFAULT_K = 256


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class NormalizedIris:
    grid: np.ndarray  # (A, R) floats in [0,1]

    def __post_init__(self):
        a, r = self.grid.shape
        if not (_is_pow2(a) and _is_pow2(r)):
            raise ShapeError("grid dimensions must be powers of two")

    @property
    def angles(self) -> int:
        return self.grid.shape[0]

    @property
    def radii(self) -> int:
        return self.grid.shape[1]


@dataclass(frozen=True)
class WeightMap:
    sector_weights: np.ndarray  # (A, R), >= 0, not all zero

    def __post_init__(self):
        w = self.sector_weights
        if (w < 0).any() or not (w > 0).any():
            raise ShapeError("weights must be >= 0 and not all zero")

    @classmethod
    def uniform(cls, angles: int = DEFAULT_ANGLES, radii: int = DEFAULT_RADII) -> "WeightMap":
        return cls(np.ones((angles, radii)))

    @classmethod
    def angular_sectors(cls, sector_values: Sequence[float], angles: int = DEFAULT_ANGLES,
                        radii: int = DEFAULT_RADII) -> "WeightMap":
        """Piecewise-constant angular template (the 8-sector iridology map)."""
        n = len(sector_values)
        rows = np.array([sector_values[(a * n) // angles] for a in range(angles)])
        return cls(np.repeat(rows[:, None], radii, axis=1))

    def to_json(self) -> str:
        return json.dumps({
            "version": "1",
            "angles": int(self.sector_weights.shape[0]),
            "radii": int(self.sector_weights.shape[1]),
            "weights": self.sector_weights.ravel().tolist(),
        })

    @classmethod
    def from_json(cls, s: str) -> "WeightMap":
        d = json.loads(s)
        w = np.array(d["weights"]).reshape(d["angles"], d["radii"])
        return cls(w)


@dataclass(frozen=True)
class WaveletCoeffs:
    levels: int
    coefficients: np.ndarray  # (A, R), subband layout, approximation top-left


@dataclass(frozen=True)
class SelectorModel:
    weights: np.ndarray  # one per coefficient position
    bias: float
    k: int

    def __post_init__(self):
        if self.k < 64 or self.k > self.weights.size:
            raise ShapeError("k must be in [64, coefficient count]")

    def selected_positions(self) -> np.ndarray:
        """The k positions with largest final weights, ties by lower index."""
        order = np.lexsort((np.arange(self.weights.size), -self.weights))
        return np.sort(order[: self.k])

    def to_json(self) -> str:
        return json.dumps({
            "version": "1",
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "k": self.k,
        })

    @classmethod
    def from_json(cls, s: str) -> "SelectorModel":
        d = json.loads(s)
        return cls(np.array(d["weights"]), d["bias"], d["k"])


@dataclass(frozen=True)
class FeatureVector:
    positions: np.ndarray  # strictly increasing ints
    values: np.ndarray

    def __post_init__(self):
        if len(self.positions) != len(self.values):
            raise ShapeError("positions/values length mismatch")
        if len(self.positions) > 1 and not (np.diff(self.positions) > 0).all():
            raise ShapeError("positions must be strictly increasing")


@dataclass(frozen=True)
class IrisCode:
    bits: np.ndarray  # bool
    mask: np.ndarray  # bool, True = reliable

    def __post_init__(self):
        if self.bits.shape != self.mask.shape:
            raise ShapeError("bits and mask must have the same length")

    def __len__(self):
        return len(self.bits)


@dataclass(frozen=True)
class TomographyProfile:
    angle_indices: List[int]
    profiles: np.ndarray  # (len(angle_indices), R)


def unwrap_polar(gray: GrayImage, geom: EyeGeometry, angles: int = DEFAULT_ANGLES,
                 radii: int = DEFAULT_RADII) -> NormalizedIris:
    """Rubber-sheet resampling of the iris annulus onto an A x R grid."""
    if not (_is_pow2(angles) and _is_pow2(radii)):
        raise ShapeError("angles and radii must be powers of two")
    if (
        geom.iris.cx - geom.iris.r < 0
        or geom.iris.cy - geom.iris.r < 0
        or geom.iris.cx + geom.iris.r > gray.width - 1
        or geom.iris.cy + geom.iris.r > gray.height - 1
    ):
        raise OutOfFrameError("iris circle extends outside the image")
    a = gray.to_array().astype(float)
    theta = 2 * np.pi * np.arange(angles) / angles
    rho = (np.arange(radii) + 0.5) / radii
    cos_t = np.cos(theta)[:, None]
    sin_t = np.sin(theta)[:, None]
    px = geom.pupil.cx + geom.pupil.r * cos_t
    py = geom.pupil.cy + geom.pupil.r * sin_t
    ix = geom.iris.cx + geom.iris.r * cos_t
    iy = geom.iris.cy + geom.iris.r * sin_t
    xs = px + rho[None, :] * (ix - px)
    ys = py + rho[None, :] * (iy - py)
    return NormalizedIris(_bilinear(a, xs, ys) / 255.0)


def apply_weight_surface(n: NormalizedIris, w: WeightMap) -> NormalizedIris:
    if w.sector_weights.shape != n.grid.shape:
        raise ShapeError("weight map shape does not match grid")
    scaled = n.grid * w.sector_weights / w.sector_weights.max()
    return NormalizedIris(scaled)


def _haar_step_1d(v: np.ndarray, axis: int) -> np.ndarray:
    s = np.swapaxes(v, 0, axis)
    a = s[0::2]
    b = s[1::2]
    out = np.concatenate([(a + b) / np.sqrt(2.0), (a - b) / np.sqrt(2.0)], axis=0)
    return np.swapaxes(out, 0, axis)


def _haar_inv_1d(v: np.ndarray, axis: int) -> np.ndarray:
    s = np.swapaxes(v, 0, axis)
    half = s.shape[0] // 2
    lo = s[:half]
    hi = s[half:]
    a = (lo + hi) / np.sqrt(2.0)
    b = (lo - hi) / np.sqrt(2.0)
    out = np.empty_like(s)
    out[0::2] = a
    out[1::2] = b
    return np.swapaxes(out, 0, axis)


def haar_dwt2(n: NormalizedIris, levels: int = DEFAULT_LEVELS) -> WaveletCoeffs:
    a, r = n.grid.shape
    if levels < 1 or levels > int(np.log2(min(a, r))):
        raise LevelError(f"levels must be in [1, {int(np.log2(min(a, r)))}]")
    c = n.grid.astype(float).copy()
    ha, hr = a, r
    for _ in range(levels):
        block = c[:ha, :hr]
        block = _haar_step_1d(block, axis=0)
        block = _haar_step_1d(block, axis=1)
        c[:ha, :hr] = block
        ha //= 2
        hr //= 2
    return WaveletCoeffs(levels, c)


def haar_idwt2(coeffs: WaveletCoeffs) -> NormalizedIris:
    a, r = coeffs.coefficients.shape
    levels = coeffs.levels
    if levels < 1 or levels > int(np.log2(min(a, r))):
        raise LevelError("invalid level count for coefficient shape")
    c = coeffs.coefficients.astype(float).copy()
    ha = a >> levels
    hr = r >> levels
    for _ in range(levels):
        ha *= 2
        hr *= 2
        block = c[:ha, :hr]
        block = _haar_inv_1d(block, axis=1)
        block = _haar_inv_1d(block, axis=0)
        c[:ha, :hr] = block
    return NormalizedIris(c)


def fisher_scores(genuine_deltas: np.ndarray, impostor_deltas: np.ndarray,
                  eps: float = 1e-9) -> np.ndarray:
    """Per-position discriminability of |Δcoefficient| distributions."""
    mg = genuine_deltas.mean(axis=0)
    mi = impostor_deltas.mean(axis=0)
    vg = genuine_deltas.var(axis=0)
    vi = impostor_deltas.var(axis=0)
    return (mi - mg) ** 2 / (vg + vi + eps)


def train_selector(genuine_pairs: Sequence[Tuple[WaveletCoeffs, WaveletCoeffs]],
                   impostor_pairs: Sequence[Tuple[WaveletCoeffs, WaveletCoeffs]],
                   k: int = DEFAULT_K) -> SelectorModel:
    """Fisher-seeded perceptron ranking of coefficient positions.

    Fully deterministic: fixed learning rate 0.1, 200 epochs, pairs visited
    in input order (all genuine, then all impostor) each epoch.
    """
    if len(genuine_pairs) < 10 or len(impostor_pairs) < 10:
        raise TrainingDataError("need at least 10 pairs of each kind")
    gd = np.array([np.abs(a.coefficients - b.coefficients).ravel() for a, b in genuine_pairs])
    im = np.array([np.abs(a.coefficients - b.coefficients).ravel() for a, b in impostor_pairs])
    scores = fisher_scores(gd, im)
    w = scores / (np.abs(scores).max() or 1.0)
    bias = 0.0
    lr = 0.1
    # labels: +1 impostor (large deltas), -1 genuine
    xs = np.vstack([gd, im])
    ys = np.concatenate([-np.ones(len(gd)), np.ones(len(im))])
    for _ in range(200):
        for x, y in zip(xs, ys):
            if y * (w @ x + bias) <= 0:
                w = w + lr * y * x
                bias = bias + lr * y
    return SelectorModel(w, float(bias), k)


def select_features(c: WaveletCoeffs, m: SelectorModel) -> FeatureVector:
    flat = c.coefficients.ravel()
    if m.weights.size != flat.size:
        raise ModelMismatchError("model size does not match coefficient count")
    pos = m.selected_positions()
    return FeatureVector(pos, flat[pos])


def encode_code(f: FeatureVector) -> IrisCode:
    v = f.values
    bits = v >= 0
    rms = float(np.sqrt(np.mean(v ** 2))) if len(v) else 0.0
    if rms == 0.0:
        mask = np.zeros(len(v), dtype=bool)
    else:
        mask = np.abs(v) >= 0.01 * rms
    return IrisCode(bits.astype(bool), mask)


def tomography_profiles(n: NormalizedIris, angle_indices: Sequence[int]) -> TomographyProfile:
    for i in angle_indices:
        if not (0 <= i < n.angles):
            raise IndexError(f"angle index {i} out of range")
    return TomographyProfile(list(angle_indices), n.grid[list(angle_indices)].copy())


def profile_curvature(n: NormalizedIris) -> float:
    """Mean absolute second difference of the radial profiles."""
    d2 = np.diff(n.grid, n=2, axis=1)
    return float(np.abs(d2).mean())
