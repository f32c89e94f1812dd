"""Monte Carlo estimators used as independent checks.

Sampling is split into fixed-size batches. Each batch draws from its own
Philox stream spawned from the master seed, and batch results are merged in
batch order, so estimates do not depend on the number of worker threads.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .geometry import ConvexBody, polar


class HighVarianceWarning(UserWarning):
    """Relative standard error above 5%."""


@dataclass(frozen=True)
class McConfig:
    samples: int = 1_000_000
    seed: int = 0
    batch_size: int = 1 << 16
    threads: int | None = None

    def __post_init__(self):
        if self.samples < 10_000:
            raise DomainError("at least 1e4 samples are required")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    stderr: float
    samples: int

    def __iter__(self):
        yield self.estimate
        yield self.stderr


def _threads(cfg: McConfig) -> int:
    if cfg.threads:
        return int(cfg.threads)
    env = os.environ.get("PAFFINE_THREADS")
    return int(env) if env else 1


def _run_batches(cfg: McConfig, lo: np.ndarray, hi: np.ndarray, fn):
    """Evaluate ``fn`` on uniform points of the box ``[lo, hi]`` and return the
    merged first and second moments of its values."""
    sizes = [cfg.batch_size] * (cfg.samples // cfg.batch_size)
    if cfg.samples % cfg.batch_size:
        sizes.append(cfg.samples % cfg.batch_size)
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(sizes))

    def work(i):
        rng = np.random.Generator(np.random.Philox(seeds[i]))
        pts = lo + (hi - lo) * rng.random((sizes[i], len(lo)))
        vals = fn(pts)
        return float(vals.sum()), float((vals * vals).sum())

    nthreads = _threads(cfg)
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as pool:
            parts = list(pool.map(work, range(len(sizes))))
    else:
        parts = [work(i) for i in range(len(sizes))]
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    return s1, s2


def _estimate(cfg, lo, hi, fn) -> McEstimate:
    box = float(np.prod(hi - lo))
    s1, s2 = _run_batches(cfg, lo, hi, fn)
    N = cfg.samples
    mean = s1 / N
    var = max(s2 / N - mean * mean, 0.0)
    est = McEstimate(box * mean, box * float(np.sqrt(var / N)), N)
    if est.estimate != 0 and est.stderr / abs(est.estimate) > 0.05:
        warnings.warn(f"relative standard error {est.stderr / abs(est.estimate):.3g} above 5%",
                      HighVarianceWarning, stacklevel=3)
    return est


def _box(body: ConvexBody):
    E = np.eye(body.dim)
    hi = body._support(E)
    lo = -body._support(-E)
    return lo, hi


def _gauge_leq_one(support, pts, offset=None):
    # y is in {y : h(y) - <y, x> <= 1} with h positively homogeneous
    norms = np.linalg.norm(pts, axis=1)
    nz = norms > 0
    out = np.ones(len(pts), dtype=bool)
    if np.any(nz):
        dirs = pts[nz] / norms[nz, None]
        val = norms[nz] * support(dirs)
        if offset is not None:
            val = val - pts[nz] @ offset
        out[nz] = val <= 1.0
    return out


def mc_volume(body: ConvexBody, cfg: McConfig = McConfig()) -> McEstimate:
    """Hit-or-miss volume in the bounding box given by axis support values."""
    lo, hi = _box(body)
    return _estimate(cfg, lo, hi, lambda p: body.contains(p).astype(float))


def mc_polar_volume(body: ConvexBody, x=None, cfg: McConfig = McConfig()) -> McEstimate:
    """``|K^x|`` by hit-or-miss on ``{y : h_K(y) - <y, x> <= 1}``."""
    x = np.zeros(body.dim) if x is None else np.asarray(x, dtype=float)
    lo, hi = _box(polar(body, x))
    return _estimate(cfg, lo, hi,
                     lambda p: _gauge_leq_one(body._support, p, x).astype(float))


def mc_phi(body: ConvexBody, x, beta: float, cfg: McConfig = McConfig()) -> McEstimate:
    """``int_{K^0} (1 - <x, y>)^(-beta) dy`` by uniform sampling of a box
    around ``K^0``."""
    x = np.asarray(x, dtype=float)
    lo, hi = _box(polar(body))

    def fn(p):
        inside = _gauge_leq_one(body._support, p)
        vals = np.zeros(len(p))
        s = p[inside] @ x
        if np.any(s >= 1):
            raise DomainError("x is not interior to the body")
        vals[inside] = (1.0 - s) ** (-beta)
        return vals

    return _estimate(cfg, lo, hi, fn)


def disc_polar_volume(x) -> float:
    """``|B^x| = pi / (1 - |x|^2)^(3/2)`` for the unit disc."""
    r2 = float(np.dot(x, x))
    if r2 >= 1:
        raise DomainError("point must lie inside the unit disc")
    return np.pi / (1.0 - r2) ** 1.5
