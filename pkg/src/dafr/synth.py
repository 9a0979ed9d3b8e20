"""Synthetic datasets and target perturbations for the experiment suite.

Three generators: a single global line (the null case), three joined lines
over low/mid/high target ranges (segmentation should win), and a single
line whose noise blows up in both target tails (a single fit shows the
bathtub error profile). Two injectors perturb targets in the tails or the
middle of the target distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .metrics import quantile

KINDS = ("single_line", "piecewise_three", "hetero_tails")

# joined at the breakpoints: 2+3*1 = -5+10*1 and -5+10*2 = -25+20*2
DEFAULT_BREAKPOINTS = (1.0, 2.0)
DEFAULT_PIECES = ((2.0, 3.0), (-5.0, 10.0), (-25.0, 20.0))


@dataclass(frozen=True)
class SynthConfig:
    """Full recipe for one synthetic dataset; same config, same bytes."""

    kind: str = "single_line"
    n: int = 2000
    p: int = 3
    noise_sigma: float = 1.0
    seed: int = 0
    breakpoints: tuple[float, float] = DEFAULT_BREAKPOINTS
    pieces: tuple[tuple[float, float], ...] = DEFAULT_PIECES
    tail_noise_factor: float = 5.0
    tail_quantile: float = 0.2

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.n < 1 or self.p < 1:
            raise ValueError(f"need n >= 1 and p >= 1, got n={self.n}, p={self.p}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be non-negative, got {self.noise_sigma}")
        if len(self.breakpoints) != 2 or not self.breakpoints[0] < self.breakpoints[1]:
            raise ValueError(f"breakpoints must be two increasing values, got {self.breakpoints}")
        if len(self.pieces) != 3 or any(len(piece) != 2 for piece in self.pieces):
            raise ValueError("pieces must be three (intercept, slope) pairs")
        if self.tail_noise_factor < 1:
            raise ValueError(f"tail_noise_factor must be >= 1, got {self.tail_noise_factor}")
        if not 0.0 < self.tail_quantile < 0.5:
            raise ValueError(f"tail_quantile must lie in (0, 0.5), got {self.tail_quantile}")
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))
        object.__setattr__(
            self, "pieces",
            tuple((float(b0), float(b1)) for b0, b1 in self.pieces),
        )

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "p": self.p,
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
            "breakpoints": list(self.breakpoints),
            "pieces": [list(piece) for piece in self.pieces],
            "tail_noise_factor": self.tail_noise_factor,
            "tail_quantile": self.tail_quantile,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SynthConfig":
        return cls(
            kind=obj["kind"],
            n=int(obj["n"]),
            p=int(obj["p"]),
            noise_sigma=float(obj["noise_sigma"]),
            seed=int(obj["seed"]),
            breakpoints=tuple(obj["breakpoints"]),
            pieces=tuple(tuple(piece) for piece in obj["pieces"]),
            tail_noise_factor=float(obj["tail_noise_factor"]),
            tail_quantile=float(obj["tail_quantile"]),
        )


def _finish(X: np.ndarray, y: np.ndarray, p: int) -> Dataset:
    # keep every target at least 1 so percentage error stays defined
    shift = max(0.0, 1.0 - float(y.min()))
    names = tuple(f"x{j}" for j in range(p))
    return Dataset(X, y + shift, names, "y")


def generate(config: SynthConfig) -> Dataset:
    """Deterministic dataset for the configured generator kind."""
    rng = np.random.default_rng(config.seed)
    n, p = config.n, config.p
    if config.kind == "single_line":
        X = rng.uniform(0.0, 1.0, size=(n, p))
        y0 = 20.0 + 10.0 * X.sum(axis=1)
        y = y0 + config.noise_sigma * rng.normal(size=n)
        return _finish(X, y, p)
    if config.kind == "piecewise_three":
        X = np.empty((n, p))
        lo, hi = 0.0, 1.5 * config.breakpoints[1]
        X[:, 0] = rng.uniform(lo, hi, size=n)
        if p > 1:
            X[:, 1:] = rng.uniform(0.0, 1.0, size=(n, p - 1))
        region = np.digitize(X[:, 0], config.breakpoints)
        intercepts = np.array([piece[0] for piece in config.pieces])
        slopes = np.array([piece[1] for piece in config.pieces])
        y0 = intercepts[region] + slopes[region] * X[:, 0]
        if p > 1:
            y0 = y0 + 0.5 * X[:, 1:].sum(axis=1)
        y = y0 + config.noise_sigma * rng.normal(size=n)
        return _finish(X, y, p)
    # hetero_tails: single line, tail rows get amplified noise
    X = rng.uniform(0.0, 1.0, size=(n, p))
    y0 = 20.0 + 10.0 * X.sum(axis=1)
    lo_cut = quantile(y0, config.tail_quantile)
    hi_cut = quantile(y0, 1.0 - config.tail_quantile)
    scale = np.where((y0 < lo_cut) | (y0 > hi_cut), config.tail_noise_factor, 1.0)
    y = y0 + config.noise_sigma * scale * rng.normal(size=n)
    return _finish(X, y, p)


def _tail_pool(y: np.ndarray) -> np.ndarray:
    """Row indices of the bottom and top target deciles."""
    n = y.shape[0]
    order = np.argsort(y, kind="stable")
    return np.concatenate([order[: n // 10], order[(9 * n) // 10:]])

def _mid_pool(y: np.ndarray) -> np.ndarray:
    """Row indices of target deciles 4 through 7."""
    n = y.shape[0]
    order = np.argsort(y, kind="stable")
    return order[(3 * n) // 10: (7 * n) // 10]


def _choose(pool: np.ndarray, budget: int, rng) -> np.ndarray:
    count = min(budget, pool.shape[0])
    return rng.choice(pool, size=count, replace=False)


def inject_tail_outliers(ds: Dataset, fraction: float = 0.05,
                         magnitude: float = 4.0, seed: int = 0) -> Dataset:
    """Push round(fraction*n) targets from the outer deciles away from the
    median by magnitude standard deviations. Features untouched."""
    if not 0.0 < fraction <= 0.2:
        raise ValueError(f"fraction must lie in (0, 0.2], got {fraction}")
    if magnitude <= 0:
        raise ValueError(f"magnitude must be positive, got {magnitude}")
    y = ds.target
    if np.ptp(y) == 0.0:
        raise ValueError("degenerate target: all values equal, deciles undefined")
    budget = int(round(fraction * ds.n_rows))
    if budget == 0:
        return ds
    rng = np.random.default_rng(seed)
    chosen = _choose(_tail_pool(y), budget, rng)
    delta = magnitude * float(y.std(ddof=1))
    med = float(np.median(y))
    new_y = y.copy()
    new_y[chosen] += np.where(y[chosen] >= med, delta, -delta)
    return ds.with_target(new_y)


def inject_mid_noise(ds: Dataset, fraction: float = 0.05,
                     sigma: float = 1.0, seed: int = 0) -> Dataset:
    """Add Gaussian noise of sigma target-stddevs to round(fraction*n) rows
    drawn from the middle target deciles. Features untouched."""
    if not 0.0 < fraction <= 0.5:
        raise ValueError(f"fraction must lie in (0, 0.5], got {fraction}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    y = ds.target
    if np.ptp(y) == 0.0:
        raise ValueError("degenerate target: all values equal, deciles undefined")
    budget = int(round(fraction * ds.n_rows))
    if budget == 0:
        return ds
    rng = np.random.default_rng(seed)
    chosen = _choose(_mid_pool(y), budget, rng)
    new_y = y.copy()
    new_y[chosen] += sigma * float(y.std(ddof=1)) * rng.normal(size=chosen.shape[0])
    return ds.with_target(new_y)
