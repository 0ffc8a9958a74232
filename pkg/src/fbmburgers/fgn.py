"""Fractional Gaussian noise: covariances, exact circulant sampler, Cholesky oracle.

Each spatial mode of the cylindrical fBm is driven by its own scalar fBm.
Increments (fGn) on a uniform grid are the canonical representation; path
values are prefix sums.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

__all__ = [
    "HurstParameter",
    "FgnGrid",
    "EmbeddingError",
    "fbm_covariance",
    "fgn_autocovariance",
    "mode_streams",
    "sample_fgn",
    "sample_fgn_cholesky",
    "read_fgn_csv",
]

# Relative floor below which negative circulant eigenvalues are treated as rounding.
EIGEN_TOL = 1e-10


class EmbeddingError(RuntimeError):
    """Raised when a covariance factorisation is not nonnegative definite."""


@dataclass(frozen=True)
class HurstParameter:
    """Hurst exponent of the driving fBm.

    Values in (1/2, 1) are the supported range. ``permissive=True`` also
    admits (0, 1/2], which is only meant for the Brownian degeneration checks.
    """

    value: float
    permissive: bool = False

    def __post_init__(self):
        h = float(self.value)
        if not 0.0 < h < 1.0:
            raise ValueError(f"Hurst parameter must lie in (0, 1), got {h}")
        if h <= 0.5 and not self.permissive:
            raise ValueError(
                f"Hurst parameter must satisfy 1/2 < H < 1, got {h} "
                "(pass permissive=True for H <= 1/2)"
            )
        object.__setattr__(self, "value", h)

    def __float__(self):
        return self.value


HurstLike = Union[HurstParameter, float]


def as_hurst(H: HurstLike) -> HurstParameter:
    if isinstance(H, HurstParameter):
        return H
    return HurstParameter(float(H))


def fbm_covariance(t, s, H: HurstLike):
    """Covariance ``R(t, s) = (s^2H + t^2H - |t - s|^2H) / 2`` of standard fBm."""
    h = as_hurst(H).value
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(t < 0) or np.any(s < 0):
        raise ValueError("fBm covariance is defined for nonnegative times only")
    out = 0.5 * (s ** (2 * h) + t ** (2 * h) - np.abs(t - s) ** (2 * h))
    return out[()] if out.ndim == 0 else out


def fgn_autocovariance(lag, step: float, H: HurstLike):
    """Autocovariance of fGn increments of width ``step`` at integer ``lag``."""
    h = as_hurst(H).value
    k = np.abs(np.asarray(lag, dtype=float))
    g = 0.5 * ((k + 1) ** (2 * h) - 2 * k ** (2 * h) + np.abs(k - 1) ** (2 * h))
    g = g * step ** (2 * h)
    return g[()] if g.ndim == 0 else g


@dataclass(frozen=True)
class FgnGrid:
    """Per-mode fGn increments on a uniform grid.

    ``increments[k - 1, j]`` is the increment of the k-th scalar fBm over
    ``[j * step, (j + 1) * step]``. Leading batch axes (e.g. paths) are
    allowed in front of the mode axis.
    """

    step: float
    increments: np.ndarray

    @property
    def count(self) -> int:
        return self.increments.shape[-1]

    @property
    def modes(self) -> int:
        return self.increments.shape[-2]

    def paths(self) -> np.ndarray:
        """fBm values at ``step, 2 step, ...`` (the value at 0 is omitted)."""
        return np.cumsum(self.increments, axis=-1)

    def to_csv(self, path) -> None:
        if self.increments.ndim != 2:
            raise ValueError("CSV export expects a single (modes, count) grid")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["mode", "substep", "value"])
            for k, row in enumerate(self.increments, start=1):
                for j, val in enumerate(row):
                    w.writerow([k, j, f"{val:.17g}"])


def read_fgn_csv(path, step: float) -> FgnGrid:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    modes = max(int(r["mode"]) for r in rows)
    count = max(int(r["substep"]) for r in rows) + 1
    inc = np.zeros((modes, count))
    for r in rows:
        inc[int(r["mode"]) - 1, int(r["substep"])] = float(r["value"])
    return FgnGrid(step=step, increments=inc)


def mode_streams(seed: int, path: int, modes: int, first_mode: int = 1):
    """One independent counter-based generator per ``(seed, path, mode)``.

    Streams depend only on their own key, so mode k sees the same noise
    whatever the total number of modes or the order paths are generated in.
    """
    return [
        np.random.Generator(
            np.random.Philox(np.random.SeedSequence(seed, spawn_key=(path, k)))
        )
        for k in range(first_mode, first_mode + modes)
    ]


@lru_cache(maxsize=64)
def _circulant_sqrt_eigs(count: int, h: float) -> np.ndarray:
    # Embed the unit-step autocovariance into a circulant of size 2*count.
    g = fgn_autocovariance(np.arange(count + 1), 1.0, HurstParameter(h, permissive=True))
    row = np.concatenate([g, g[-2:0:-1]])
    eig = np.fft.fft(row).real
    floor = -EIGEN_TOL * eig.max()
    if eig.min() < floor:
        raise EmbeddingError(
            f"circulant embedding has eigenvalue {eig.min():.3e} < {floor:.3e}"
        )
    eig = np.clip(eig, 0.0, None)
    out = np.sqrt(eig / row.size)
    out.setflags(write=False)
    return out


def sample_fgn(
    modes: int,
    count: int,
    step: float,
    H: HurstLike,
    rng: Union[np.random.Generator, Sequence[np.random.Generator]],
) -> FgnGrid:
    """Draw ``modes`` independent rows of exact fGn by circulant embedding.

    ``rng`` is either a single generator (rows drawn in order) or one
    generator per mode, as returned by :func:`mode_streams`.
    """
    if modes < 1 or count < 1:
        raise ValueError("modes and count must be positive")
    if step <= 0:
        raise ValueError("step must be positive")
    h = as_hurst(H).value
    lam = _circulant_sqrt_eigs(count, h)
    m = lam.size
    if isinstance(rng, np.random.Generator):
        z = rng.standard_normal((modes, 2, m))
    else:
        if len(rng) != modes:
            raise ValueError(f"expected {modes} generators, got {len(rng)}")
        z = np.stack([g.standard_normal((2, m)) for g in rng])
    w = np.fft.fft(lam * (z[:, 0] + 1j * z[:, 1]), axis=-1)
    # Real and imaginary parts are each exact fGn; keep the real part.
    inc = w.real[:, :count] * step**h
    return FgnGrid(step=float(step), increments=inc)


def sample_fgn_cholesky(count: int, step: float, H: HurstLike, rng: np.random.Generator) -> np.ndarray:
    """O(count^2) reference sampler through the Cholesky factor of the covariance."""
    if count > 2048:
        raise ValueError("Cholesky oracle is limited to count <= 2048")
    h = as_hurst(H)
    lags = np.arange(count)
    cov = fgn_autocovariance(np.abs(lags[:, None] - lags[None, :]), step, h)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise EmbeddingError("fGn covariance matrix is not positive definite") from exc
    return chol @ rng.standard_normal(count)
