"""Sine-basis field algebra on (0, 1) with homogeneous Dirichlet conditions.

A field is stored by its coefficients ``a_k`` in the orthonormal basis
``phi_k(x) = sqrt(2) sin(k pi x)``, k = 1..N, which diagonalises the Dirichlet
Laplacian with eigenvalues ``(k pi)^2``. All functions act on the last axis,
so batches of fields (paths x modes) go through unchanged.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

__all__ = [
    "SpectralField",
    "CollocationField",
    "eigenvalues",
    "interior_grid",
    "evaluate",
    "evaluate_at",
    "project",
    "sobolev_norm",
    "lp_norm",
    "burgers_nonlinearity",
    "semigroup_apply",
    "h1_seminorm_grid",
    "write_field_csv",
    "read_field_csv",
]

SQRT2 = np.sqrt(2.0)


def eigenvalues(N: int) -> np.ndarray:
    """``lambda_k = (k pi)^2`` for k = 1..N."""
    k = np.arange(1, N + 1, dtype=float)
    return (k * np.pi) ** 2


def interior_grid(points: int) -> np.ndarray:
    """Collocation nodes ``x_i = i / (points + 1)``, i = 1..points."""
    return np.arange(1, points + 1) / (points + 1.0)


@dataclass(frozen=True)
class SpectralField:
    """Coefficients of a field in the sine eigenbasis."""

    coefficients: np.ndarray

    @property
    def modes(self) -> int:
        return self.coefficients.shape[-1]

    @classmethod
    def basis(cls, k: int, N: int) -> "SpectralField":
        a = np.zeros(N)
        a[k - 1] = 1.0
        return cls(a)

    def norm(self, gamma: float = 0.0) -> float:
        return sobolev_norm(self.coefficients, gamma)

    def to_grid(self, points: int) -> "CollocationField":
        return CollocationField(evaluate(self.coefficients, points))


@dataclass(frozen=True)
class CollocationField:
    """Point values on the interior grid ``i / (P + 1)``, i = 1..P."""

    values: np.ndarray

    @property
    def points(self) -> int:
        return self.values.shape[-1]

    @property
    def x(self) -> np.ndarray:
        return interior_grid(self.points)

    def project(self, N: int) -> SpectralField:
        return SpectralField(project(self.values, N))


def _coeffs(u):
    return np.asarray(u.coefficients if isinstance(u, SpectralField) else u, dtype=float)


def _sine_matrix(N: int, x: np.ndarray) -> np.ndarray:
    k = np.arange(1, N + 1)
    return SQRT2 * np.sin(np.pi * np.outer(x, k))


def evaluate(u, points: int, method: str = "fft") -> np.ndarray:
    """Values of ``u`` on the interior grid of ``points`` nodes."""
    a = _coeffs(u)
    N = a.shape[-1]
    if points < N:
        raise ValueError(f"need at least {N} points to evaluate {N} modes, got {points}")
    if method == "matrix":
        return a @ _sine_matrix(N, interior_grid(points)).T
    pad = np.zeros(a.shape[:-1] + (points,))
    pad[..., :N] = a
    # DST-I: y_n = 2 sum_k a_k sin(pi (k+1)(n+1)/(P+1))
    return sfft.dst(pad, type=1, axis=-1) * (SQRT2 / 2.0)


def evaluate_at(u, x) -> np.ndarray:
    """Direct O(N len(x)) evaluation at arbitrary points."""
    a = _coeffs(u)
    return a @ _sine_matrix(a.shape[-1], np.asarray(x, dtype=float)).T


def project(samples, N: int, method: str = "fft") -> np.ndarray:
    """First ``N`` sine coefficients of grid values on ``i / (P + 1)``.

    This is the orthonormally scaled DST-I, i.e. the trapezoidal rule for
    ``<g, phi_k>`` with zero boundary values.
    """
    g = np.asarray(samples.values if isinstance(samples, CollocationField) else samples, dtype=float)
    P = g.shape[-1]
    if N > P:
        raise ValueError(f"cannot extract {N} modes from {P} grid points")
    if method == "matrix":
        return g @ _sine_matrix(N, interior_grid(P)) / (P + 1)
    y = sfft.dst(g, type=1, axis=-1)
    return y[..., :N] * (SQRT2 / (2.0 * (P + 1)))


def sobolev_norm(u, gamma: float):
    """``(sum_k lambda_k^gamma a_k^2)^(1/2)``."""
    a = _coeffs(u)
    w = eigenvalues(a.shape[-1]) ** gamma
    return np.sqrt(np.sum(w * a * a, axis=-1))


def lp_norm(u, p, quad_points: int | None = None):
    """L^p norm for p in {2, 4, inf}.

    L2 is exact from the coefficients. L4 uses the trapezoidal rule and L-inf
    the maximum over ``quad_points`` uniform intervals (default 8N).
    """
    a = _coeffs(u)
    N = a.shape[-1]
    if p == 2:
        return np.sqrt(np.sum(a * a, axis=-1))
    n = 8 * N if quad_points is None else int(quad_points)
    if n < 4 * N:
        raise ValueError(f"quad_points must be >= 4N = {4 * N}")
    vals = evaluate(a, n - 1)  # boundary values are zero
    if p == 4:
        return (np.sum(vals**4, axis=-1) / n) ** 0.25
    if p in (np.inf, "inf"):
        return np.max(np.abs(vals), axis=-1)
    raise ValueError(f"unsupported p={p!r}; use 2, 4 or inf")


def burgers_nonlinearity(u, method: str = "fft") -> np.ndarray:
    """Galerkin projection of ``u u_x = (u^2)_x / 2`` onto the first N modes.

    ``u^2`` is a cosine series of degree <= 2N. It is sampled on 2N + 1
    interior nodes, which resolves it without aliasing, converted to cosine
    coefficients by a DCT-I, and differentiated mode-wise back into sines.
    """
    a = _coeffs(u)
    N = a.shape[-1]
    L = 2 * N + 2
    vals = evaluate(a, L - 1, method=method)
    sq = np.zeros(a.shape[:-1] + (L + 1,))
    sq[..., 1:L] = vals * vals
    k = np.arange(1, N + 1)
    if method == "matrix":
        x = np.arange(L + 1) / L
        w = np.full(L + 1, 1.0 / L)
        w[[0, -1]] *= 0.5
        c = (sq * w) @ (SQRT2 * np.cos(np.pi * np.outer(x, k)))
    else:
        # DCT-I: y_m = x_0 + (-1)^m x_L + 2 sum_{i=1}^{L-1} x_i cos(pi m i / L)
        c = sfft.dct(sq, type=1, axis=-1)[..., 1 : N + 1] * (SQRT2 / (2.0 * L))
    # d/dx sqrt2 cos(k pi x) = -k pi sqrt2 sin(k pi x)
    return -0.5 * np.pi * k * c


def semigroup_apply(u, t: float) -> np.ndarray:
    """Heat semigroup ``S(t) = exp(-t A)`` acting mode-wise."""
    if t < 0:
        raise ValueError("semigroup is defined for t >= 0 only")
    a = _coeffs(u)
    return np.exp(-eigenvalues(a.shape[-1]) * t) * a


def h1_seminorm_grid(values, dx: float):
    """Discrete ``(sum ((u_{i+1} - u_i) / dx)^2 dx)^(1/2)`` of boundary-padded grid values."""
    v = np.asarray(values, dtype=float)
    pad = np.zeros(v.shape[:-1] + (v.shape[-1] + 2,))
    pad[..., 1:-1] = v
    d = np.diff(pad, axis=-1)
    return np.sqrt(np.sum(d * d, axis=-1) / dx)


def write_field_csv(path, x, values, t: float | None = None) -> None:
    """Write ``x,u`` (or ``t,x,u`` when ``t`` is given) with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "u"] if t is None else ["t", "x", "u"])
        for xi, ui in zip(np.asarray(x), np.asarray(values)):
            row = [f"{xi:.17g}", f"{ui:.17g}"]
            w.writerow(row if t is None else [f"{t:.17g}"] + row)


def read_field_csv(path):
    """Inverse of :func:`write_field_csv` for ``x,u`` files."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    x = np.array([float(r["x"]) for r in rows])
    u = np.array([float(r["u"]) for r in rows])
    return x, u
