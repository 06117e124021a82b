"""Score fusion over the multidimensional match space and GA weight tuning.

A comparison produces three components: masked Hamming distance between
codes, weighted Euclidean distance between geometric parameter vectors and
a cluster penalty over the differing code positions.  The genetic algorithm
searches fusion weights plus the acceptance threshold against a penalized
FAR/FRR fitness; every stochastic step draws from one seeded generator so
runs are bit-reproducible.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import CodeLengthError, EmptySampleError, TrainingDataError, WeightError
from .transform import IrisCode

GEOM_FIELDS = ("radius_ratio", "concentricity_norm", "sclera_redness",
               "mean_intensity", "profile_curvature")


@dataclass(frozen=True)
class GeomParams:
    radius_ratio: float
    concentricity_norm: float
    sclera_redness: float
    mean_intensity: float
    profile_curvature: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in GEOM_FIELDS])


@dataclass(frozen=True)
class MatchWeights:
    w_code: float
    w_geom: Tuple[float, float, float, float, float]
    w_cluster: float
    threshold: float

    def __post_init__(self):
        if self.w_code < 0 or self.w_cluster < 0 or any(w < 0 for w in self.w_geom):
            raise WeightError("weights must be >= 0")
        if self.w_code + sum(self.w_geom) + self.w_cluster <= 0:
            raise WeightError("at least one weight must be positive")
        if not (0 < self.threshold < 1):
            raise WeightError("threshold must be in (0,1)")

    def to_json(self) -> str:
        return json.dumps({
            "version": "1",
            "w_code": self.w_code,
            "w_geom": list(self.w_geom),
            "w_cluster": self.w_cluster,
            "threshold": self.threshold,
        })

    @classmethod
    def from_json(cls, s: str) -> "MatchWeights":
        d = json.loads(s)
        return cls(d["w_code"], tuple(d["w_geom"]), d["w_cluster"], d["threshold"])


@dataclass(frozen=True)
class GaConfig:
    population: int = 40
    generations: int = 60
    mutation_rate: float = 0.15
    crossover_rate: float = 0.7
    tournament_size: int = 3
    elitism: int = 2
    seed: int = 0
    fa_penalty: float = 10.0
    fr_penalty: float = 1.0

    def __post_init__(self):
        if self.tournament_size < 2 or self.elitism < 1:
            raise WeightError("invalid GA configuration")
        if self.population > 1 and self.elitism >= self.population:
            raise WeightError("elitism must be smaller than the population")

    def to_json(self) -> str:
        d = {"version": "1"}
        d.update({k: getattr(self, k) for k in (
            "population", "generations", "mutation_rate", "crossover_rate",
            "tournament_size", "elitism", "seed", "fa_penalty", "fr_penalty")})
        return json.dumps(d)

    @classmethod
    def from_json(cls, s: str) -> "GaConfig":
        d = json.loads(s)
        d.pop("version", None)
        return cls(**d)


@dataclass(frozen=True)
class MatchScore:
    code_distance: float
    geom_distance: float
    cluster_penalty: float
    fused: float
    accepted: bool


# A precomputed comparison: (code_distance, per-field geom deltas, cluster penalty)
@dataclass(frozen=True)
class ComponentTriple:
    code_distance: float
    geom_deltas: Tuple[float, float, float, float, float]
    cluster_penalty: float


def hamming_distance(a: IrisCode, b: IrisCode) -> float:
    if len(a) != len(b):
        raise CodeLengthError("codes must have equal length")
    valid = a.mask & b.mask
    n = int(valid.sum())
    if n == 0:
        return 0.5
    return float((a.bits[valid] != b.bits[valid]).sum() / n)


def cluster_penalty(a: IrisCode, b: IrisCode, positions: Optional[np.ndarray] = None) -> float:
    """Largest run of consecutive differing positions over total differing.

    Runs are taken along the code in ascending coefficient-position order;
    adjacent entries of the code belong to the same run when both differ.
    """
    if len(a) != len(b):
        raise CodeLengthError("codes must have equal length")
    diff = a.bits != b.bits
    total = int(diff.sum())
    if total == 0:
        return 0.0
    best = run = 0
    for d in diff:
        if d:
            run += 1
            best = max(best, run)
        else:
            run = 0
    return best / total


def geometric_distance(a: GeomParams, b: GeomParams, w_geom: Sequence[float]) -> float:
    d = a.as_array() - b.as_array()
    return float(np.sqrt((np.asarray(w_geom) * d ** 2).sum()))


def fuse(code_d: float, geom_deltas: Sequence[float], cluster_p: float,
         w: MatchWeights) -> MatchScore:
    """Normalized weighted fusion; accepted iff fused < threshold (ties reject).

    The geometric term enters as the weighted *squared* distance so the
    whole numerator is linear in the weights, which makes the fused score
    invariant under scaling all weights by a common factor.
    """
    wg = np.asarray(w.w_geom)
    total = w.w_code + wg.sum() + w.w_cluster
    if total <= 0:
        raise WeightError("all weights zero")
    d2 = np.asarray(geom_deltas) ** 2
    geom_d = float(np.sqrt((wg * d2).sum()))
    fused = (w.w_code * code_d + float((wg * d2).sum()) + w.w_cluster * cluster_p) / total
    return MatchScore(code_d, geom_d, cluster_p, fused, fused < w.threshold)


def score_triple(t: ComponentTriple, w: MatchWeights) -> MatchScore:
    return fuse(t.code_distance, t.geom_deltas, t.cluster_penalty, w)


def evaluate_rates(weights: MatchWeights, genuine: Sequence[ComponentTriple],
                   impostor: Sequence[ComponentTriple]) -> Tuple[float, float]:
    if not genuine or not impostor:
        raise EmptySampleError("need nonempty genuine and impostor samples")
    far = sum(score_triple(t, weights).accepted for t in impostor) / len(impostor)
    frr = sum(not score_triple(t, weights).accepted for t in genuine) / len(genuine)
    return far, frr


_N_GENES = 8  # w_code, 5 geom weights, w_cluster, threshold
_EPS_T = 1e-6


def _chromosome_to_weights(genes: np.ndarray) -> MatchWeights:
    t = min(max(float(genes[7]), _EPS_T), 1.0 - _EPS_T)
    return MatchWeights(float(genes[0]), tuple(float(g) for g in genes[1:6]),
                        float(genes[6]), t)


class _RateEvaluator:
    """Vectorized FAR/FRR over precomputed component triples."""

    def __init__(self, genuine: Sequence[ComponentTriple], impostor: Sequence[ComponentTriple]):
        def unpack(ts):
            return (np.array([t.code_distance for t in ts]),
                    np.array([t.geom_deltas for t in ts]) ** 2,
                    np.array([t.cluster_penalty for t in ts]))
        self.g_cd, self.g_d2, self.g_cp = unpack(genuine)
        self.i_cd, self.i_d2, self.i_cp = unpack(impostor)

    def _fused(self, cd, d2, cp, genes):
        total = genes[:7].sum()
        return (genes[0] * cd + d2 @ genes[1:6] + genes[6] * cp) / total

    def rates(self, genes: np.ndarray) -> Tuple[float, float]:
        thr = min(max(float(genes[7]), _EPS_T), 1.0 - _EPS_T)
        far = float((self._fused(self.i_cd, self.i_d2, self.i_cp, genes) < thr).mean())
        frr = float((self._fused(self.g_cd, self.g_d2, self.g_cp, genes) >= thr).mean())
        return far, frr


def _fitness(genes: np.ndarray, ev: _RateEvaluator, cfg: GaConfig) -> float:
    if genes[:7].sum() <= 0:
        return float("inf")
    far, frr = ev.rates(genes)
    return cfg.fa_penalty * far + cfg.fr_penalty * frr


@dataclass
class GaTrace:
    rows: List[Tuple[int, float, float, float]] = field(default_factory=list)

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out)
        writer.writerow(["generation", "best_fitness", "FAR", "FRR"])
        writer.writerows(self.rows)
        return out.getvalue()


def ga_tune(genuine: Sequence[ComponentTriple], impostor: Sequence[ComponentTriple],
            cfg: GaConfig, trace: Optional[GaTrace] = None) -> MatchWeights:
    if len(genuine) < 20 or len(impostor) < 20:
        raise TrainingDataError("need at least 20 samples of each class")
    rng = np.random.default_rng(cfg.seed)
    ev = _RateEvaluator(genuine, impostor)
    pop = rng.random((cfg.population, _N_GENES))
    fits = np.array([_fitness(g, ev, cfg) for g in pop])
    best_genes = pop[fits.argmin()].copy()
    best_fit = float(fits.min())

    for gen in range(cfg.generations):
        order = np.argsort(fits, kind="stable")
        new_pop = [pop[i].copy() for i in order[: cfg.elitism]]
        while len(new_pop) < cfg.population:
            parents = []
            for _ in range(2):
                contenders = rng.integers(0, cfg.population, cfg.tournament_size)
                parents.append(pop[contenders[np.argmin(fits[contenders])]])
            if rng.random() < cfg.crossover_rate:
                mask = rng.random(_N_GENES) < 0.5
                child = np.where(mask, parents[0], parents[1])
            else:
                child = parents[0].copy()
            mut = rng.random(_N_GENES) < cfg.mutation_rate
            if mut.any():
                child = child + mut * rng.normal(0.0, 0.05, _N_GENES)
            new_pop.append(np.clip(child, 0.0, 1.0))
        pop = np.array(new_pop)
        fits = np.array([_fitness(g, ev, cfg) for g in pop])
        gen_best = float(fits.min())
        if gen_best < best_fit:
            best_fit = gen_best
            best_genes = pop[fits.argmin()].copy()
        if trace is not None:
            w = _chromosome_to_weights(best_genes)
            far, frr = evaluate_rates(w, genuine, impostor)
            trace.rows.append((gen, best_fit, far, frr))
        assert best_fit <= gen_best + 1e-12, "elitism monotonicity violated"
    return _chromosome_to_weights(best_genes)
