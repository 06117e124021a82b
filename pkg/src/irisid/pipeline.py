"""End-to-end pipeline: image -> template, corpus simulation and tuning.

The encoding chain is segment -> unwrap -> weight surface -> zero-mean ->
Haar analysis -> coefficient selection -> binary code.  The grid is
zero-meaned before the transform so approximation coefficients carry no
global brightness offset; without this, impostor codes share the sign of
every approximation bit and the Hamming distribution drifts below 0.5.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import imaging, matching, segmentation, transform
from .errors import IrisIdError, NoBoundaryError
from .imaging import EyeParams, RgbImage, generate_synthetic_eye
from .matching import ComponentTriple, GaConfig, GaTrace, GeomParams, MatchWeights
from .segmentation import EyeGeometry, MorphologyReport
from .store import IrisTemplate
from .transform import (
    DEFAULT_ANGLES,
    DEFAULT_K,
    DEFAULT_LEVELS,
    DEFAULT_RADII,
    IrisCode,
    NormalizedIris,
    SelectorModel,
    WaveletCoeffs,
    WeightMap,
)


@dataclass(frozen=True)
class GridConfig:
    angles: int = DEFAULT_ANGLES
    radii: int = DEFAULT_RADII
    levels: int = DEFAULT_LEVELS
    k: int = DEFAULT_K


@dataclass
class WeightsBundle:
    """Everything the gateway needs to encode and match: the trained
    selector, the iridology weight map and the GA-tuned fusion weights."""

    selector: SelectorModel
    weight_map: WeightMap
    match_weights: MatchWeights
    grid: GridConfig = GridConfig()

    @property
    def selector_version(self) -> str:
        h = hashlib.sha256(self.selector.to_json().encode()).hexdigest()[:12]
        return f"sel-{h}"

    def to_json(self) -> str:
        return json.dumps({
            "version": "1",
            "grid": {"angles": self.grid.angles, "radii": self.grid.radii,
                     "levels": self.grid.levels, "k": self.grid.k},
            "selector": json.loads(self.selector.to_json()),
            "weight_map": json.loads(self.weight_map.to_json()),
            "match_weights": json.loads(self.match_weights.to_json()),
        })

    @classmethod
    def from_json(cls, s: str) -> "WeightsBundle":
        d = json.loads(s)
        g = d["grid"]
        return cls(
            SelectorModel.from_json(json.dumps(d["selector"])),
            WeightMap.from_json(json.dumps(d["weight_map"])),
            MatchWeights.from_json(json.dumps(d["match_weights"])),
            GridConfig(g["angles"], g["radii"], g["levels"], g["k"]),
        )

    def save(self, path):
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "WeightsBundle":
        return cls.from_json(Path(path).read_text())


def segment_image(img: RgbImage) -> Tuple[EyeGeometry, imaging.GrayImage]:
    """Locate pupil and iris on the photometrically aligned luminance plane."""
    gray = imaging.photometric_align(imaging.to_gray(img))
    pupil = segmentation.find_pupil(gray)
    iris = segmentation.find_iris(gray, pupil)
    return EyeGeometry(pupil, iris), gray


def normalize(gray: imaging.GrayImage, geom: EyeGeometry, grid: GridConfig) -> NormalizedIris:
    return transform.unwrap_polar(gray, geom, grid.angles, grid.radii)


def geom_params(img: RgbImage, geom: EyeGeometry, normalized: NormalizedIris) -> GeomParams:
    conc = float(np.hypot(geom.pupil.cx - geom.iris.cx, geom.pupil.cy - geom.iris.cy))
    return GeomParams(
        radius_ratio=geom.pupil.r / geom.iris.r,
        concentricity_norm=conc / geom.iris.r,
        sclera_redness=segmentation.sclera_redness(img, geom),
        mean_intensity=float(normalized.grid.mean()),
        profile_curvature=transform.profile_curvature(normalized),
    )


def coefficients(normalized: NormalizedIris, weight_map: WeightMap,
                 levels: int) -> WaveletCoeffs:
    weighted = transform.apply_weight_surface(normalized, weight_map)
    centered = NormalizedIris(weighted.grid - weighted.grid.mean())
    return transform.haar_dwt2(centered, levels)


@dataclass(frozen=True)
class EncodedImage:
    geom: EyeGeometry
    report: MorphologyReport
    params: GeomParams
    coeffs: WaveletCoeffs
    code: Optional[IrisCode]  # None until a selector is applied


def analyze_image(img: RgbImage, weight_map: WeightMap,
                  grid: GridConfig = GridConfig()) -> EncodedImage:
    """Run the pipeline up to wavelet coefficients (selector-independent)."""
    geom, gray = segment_image(img)
    report = segmentation.morphology_check(img, geom)
    normalized = normalize(gray, geom, grid)
    params = geom_params(img, geom, normalized)
    coeffs = coefficients(normalized, weight_map, grid.levels)
    return EncodedImage(geom, report, params, coeffs, None)


def encode_image(img: RgbImage, bundle: WeightsBundle) -> Tuple[Optional[IrisTemplate], Optional[str]]:
    """Image -> template, or (None, failed_stage) on segmentation/morphology failure."""
    try:
        enc = analyze_image(img, bundle.weight_map, bundle.grid)
    except (NoBoundaryError, IrisIdError):
        return None, "segmentation"
    if not enc.report.passed:
        return None, "morphology"
    features = transform.select_features(enc.coeffs, bundle.selector)
    code = transform.encode_code(features)
    return IrisTemplate(code, enc.params, bundle.selector_version, time.time()), None


def compare(code_a: IrisCode, params_a: GeomParams,
            code_b: IrisCode, params_b: GeomParams) -> ComponentTriple:
    deltas = tuple(params_a.as_array() - params_b.as_array())
    return ComponentTriple(
        matching.hamming_distance(code_a, code_b),
        deltas,
        matching.cluster_penalty(code_a, code_b),
    )


# --- synthetic corpus -----------------------------------------------------

def sample_population(n_subjects: int, images_per_subject: int, seed: int,
                      noise_sigma: float = 4.0) -> List[List[EyeParams]]:
    """Deterministic population draw used by simulate and the acceptance run.

    Per subject: a texture seed and resting anatomy; per image: dilation in
    [0.85, 1.3], redness in [0, 0.6], illumination gain in [0.8, 1.2].
    """
    rng = np.random.default_rng(seed)
    population = []
    for s in range(n_subjects):
        texture_seed = int(rng.integers(0, 2**31))
        pupil_r = float(rng.uniform(24.0, 34.0))
        iris_r = float(rng.uniform(80.0, 100.0))
        eyes = []
        for _ in range(images_per_subject):
            eyes.append(EyeParams(
                image_size=256,
                center=(128.0, 128.0),
                pupil_radius=pupil_r,
                iris_radius=iris_r,
                texture_seed=texture_seed,
                dilation=float(rng.uniform(0.85, 1.3)),
                redness=float(rng.uniform(0.0, 0.6)),
                illumination_gain=float(rng.uniform(0.8, 1.2)),
                noise_sigma=noise_sigma,
            ))
        population.append(eyes)
    return population


def simulate_corpus(out_dir, n_subjects: int, images_per_subject: int, seed: int,
                    noise_sigma: float = 4.0) -> Path:
    """Write a PPM corpus plus manifest; byte-identical for a fixed seed."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    population = sample_population(n_subjects, images_per_subject, seed, noise_sigma)
    manifest = {"version": "1", "seed": seed, "n_subjects": n_subjects,
                "images_per_subject": images_per_subject, "subjects": []}
    for s, eyes in enumerate(population):
        sid = f"subject{s:03d}"
        entry = {"subject_id": sid, "images": []}
        for i, params in enumerate(eyes):
            name = f"{sid}_{i:02d}.ppm"
            imaging.write_ppm(generate_synthetic_eye(params), out / name)
            entry["images"].append({"file": name, "params": json.loads(params.to_json())})
        manifest["subjects"].append(entry)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return out


def load_corpus(corpus_dir) -> List[Tuple[str, List[RgbImage]]]:
    corpus = Path(corpus_dir)
    manifest = json.loads((corpus / "manifest.json").read_text())
    out = []
    for entry in manifest["subjects"]:
        imgs = [imaging.read_ppm(corpus / im["file"]) for im in entry["images"]]
        out.append((entry["subject_id"], imgs))
    return out


# --- tuning ---------------------------------------------------------------

@dataclass
class TuneResult:
    bundle: WeightsBundle
    trace: GaTrace
    far: float
    frr: float


def _encoded_population(subject_images: Sequence[Tuple[str, List[RgbImage]]],
                        weight_map: WeightMap, grid: GridConfig) -> List[List[EncodedImage]]:
    encoded = []
    for _, imgs in subject_images:
        encoded.append([analyze_image(img, weight_map, grid) for img in imgs])
    return encoded


def _codes_for(encoded: List[List[EncodedImage]], selector: SelectorModel):
    coded = []
    for subj in encoded:
        row = []
        for enc in subj:
            fv = transform.select_features(enc.coeffs, selector)
            row.append((transform.encode_code(fv), enc.params))
        coded.append(row)
    return coded


def build_training_triples(coded, pair_seed: int = 1234,
                           n_impostor: int = 2000) -> Tuple[List[ComponentTriple], List[ComponentTriple]]:
    genuine = []
    for row in coded:
        for i in range(len(row)):
            for j in range(i + 1, len(row)):
                genuine.append(compare(row[i][0], row[i][1], row[j][0], row[j][1]))
    rng = np.random.default_rng(pair_seed)
    impostor = []
    n_subj = len(coded)
    for _ in range(n_impostor):
        a, b = rng.choice(n_subj, 2, replace=False)
        i = int(rng.integers(len(coded[a])))
        j = int(rng.integers(len(coded[b])))
        impostor.append(compare(coded[a][i][0], coded[a][i][1], coded[b][j][0], coded[b][j][1]))
    return genuine, impostor


def tune(subject_images: Sequence[Tuple[str, List[RgbImage]]],
         cfg: GaConfig, grid: GridConfig = GridConfig(),
         weight_map: Optional[WeightMap] = None) -> TuneResult:
    """Train the coefficient selector and GA-tune fusion weights on a corpus."""
    wm = weight_map or WeightMap.uniform(grid.angles, grid.radii)
    encoded = _encoded_population(subject_images, wm, grid)

    genuine_pairs = []
    impostor_pairs = []
    n_subj = len(encoded)
    for s, subj in enumerate(encoded):
        for i in range(len(subj) - 1):
            genuine_pairs.append((subj[i].coeffs, subj[i + 1].coeffs))
        other = encoded[(s + 1) % n_subj]
        for i in range(min(len(subj), len(other))):
            impostor_pairs.append((subj[i].coeffs, other[i].coeffs))
    selector = transform.train_selector(genuine_pairs, impostor_pairs, grid.k)

    coded = _codes_for(encoded, selector)
    genuine, impostor = build_training_triples(coded, pair_seed=cfg.seed + 1)
    trace = GaTrace()
    weights = matching.ga_tune(genuine, impostor, cfg, trace)
    far, frr = matching.evaluate_rates(weights, genuine, impostor)
    bundle = WeightsBundle(selector, wm, weights, grid)
    return TuneResult(bundle, trace, far, frr)
