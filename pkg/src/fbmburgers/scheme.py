"""Tamed accelerated exponential Euler stepping for the Galerkin-truncated Burgers SPDE.

Per mode k and step m the update is::

    a_k <- exp(-lam_k tau) a_k + (1 - exp(-lam_k tau)) / lam_k * G_m * f_k(v_m) + dO_k

with ``G_m = 1 / (1 + tau^theta ||v_m||^2_{H^rho} + tau^theta ||O_m||^2_{H^rho})``
and ``dO_k`` the convolution increment over the step. Arrays carry any number
of leading batch axes in front of the mode axis, so a block of paths is
stepped together.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .fgn import FgnGrid
from .spectral import SpectralField, burgers_nonlinearity, eigenvalues, sobolev_norm
from .stochconv import cell_weights

__all__ = [
    "SchemeConfig",
    "SchemeState",
    "NoiseBundle",
    "BlowUpError",
    "Trajectory",
    "default_initial_condition",
    "drift_weights",
    "taming_factor",
    "step",
    "interpolate",
    "run",
]


class BlowUpError(FloatingPointError):
    """A coefficient became NaN or infinite."""

    def __init__(self, step_index: int, detail: str = ""):
        self.step_index = step_index
        msg = f"numerical blow-up at step {step_index}"
        super().__init__(f"{msg}: {detail}" if detail else msg)


def _check_params(rho: float, theta: float) -> None:
    if not 0.25 <= rho <= 0.375:
        raise ValueError(f"rho must satisfy 1/4 <= rho <= 3/8, got rho={rho}")
    if not theta < 0.125:
        raise ValueError(f"theta must satisfy theta < 1/8, got theta={theta}")
    if not rho - 2 * theta >= 0.25:
        raise ValueError(f"rho and theta must satisfy rho - 2*theta >= 1/4, got rho={rho}, theta={theta}")


@dataclass(frozen=True)
class SchemeConfig:
    """Discretisation parameters.

    ``refinement`` is the number of fine noise cells per time step.
    """

    N: int
    M: int
    T: float = 1.0
    rho: float = 0.375
    theta: float = 0.0625
    refinement: int = 4
    seed: int = 0
    nonlinearity_enabled: bool = True

    def __post_init__(self):
        if self.N < 1 or self.M < 1 or self.refinement < 1:
            raise ValueError("N, M and refinement must be positive integers")
        if self.T <= 0:
            raise ValueError("T must be positive")
        _check_params(self.rho, self.theta)

    @property
    def tau(self) -> float:
        return self.T / self.M

    @property
    def fine_step(self) -> float:
        return self.tau / self.refinement

    @property
    def fine_count(self) -> int:
        return self.M * self.refinement


@dataclass(frozen=True)
class NoiseBundle:
    """Fine-grid fGn increments of shape (..., N, count) shared by all step sizes."""

    step: float
    increments: np.ndarray

    @classmethod
    def from_grid(cls, grid: FgnGrid) -> "NoiseBundle":
        return cls(grid.step, grid.increments)

    @classmethod
    def zeros(cls, N: int, count: int, step: float, batch: Sequence[int] = ()) -> "NoiseBundle":
        return cls(step, np.zeros(tuple(batch) + (N, count)))

    @property
    def count(self) -> int:
        return self.increments.shape[-1]

    def coarsen(self, substeps: int) -> np.ndarray:
        """View as (..., N, steps, substeps)."""
        inc = self.increments
        if inc.shape[-1] % substeps:
            raise ValueError(f"{inc.shape[-1]} fine cells do not split into blocks of {substeps}")
        return inc.reshape(inc.shape[:-1] + (inc.shape[-1] // substeps, substeps))


@dataclass(frozen=True)
class SchemeState:
    v: np.ndarray
    conv: np.ndarray
    m: int
    tau: float

    @property
    def time(self) -> float:
        return self.m * self.tau

    @classmethod
    def initial(cls, u0, tau: float, N: int | None = None) -> "SchemeState":
        a = np.asarray(u0.coefficients if isinstance(u0, SpectralField) else u0, dtype=float)
        if N is not None and a.shape[-1] != N:
            a = _resize(a, N)
        return cls(a.copy(), np.zeros_like(a), 0, tau)


def _resize(a: np.ndarray, N: int) -> np.ndarray:
    # P_N: truncate or zero-pad the coefficient vector.
    out = np.zeros(a.shape[:-1] + (N,))
    n = min(N, a.shape[-1])
    out[..., :n] = a[..., :n]
    return out


def default_initial_condition(N: int) -> np.ndarray:
    """``u0(x) = sin(pi x)``, i.e. coefficient ``1/sqrt(2)`` on the first mode."""
    a = np.zeros(N)
    a[0] = 1.0 / np.sqrt(2.0)
    return a


def drift_weights(lam: np.ndarray, dt: float) -> np.ndarray:
    """``int_0^dt exp(-lam s) ds = (1 - exp(-lam dt)) / lam`` without cancellation."""
    lam = np.asarray(lam, dtype=float)
    out = np.full(lam.shape, float(dt))
    nz = lam != 0
    out[nz] = -np.expm1(-lam[nz] * dt) / lam[nz]
    return out


def taming_factor(v, conv, rho: float, theta: float, tau: float):
    """``1 / (1 + tau^theta ||v||^2_{H^rho} + tau^theta ||O||^2_{H^rho})``."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    if isinstance(v, SchemeState):
        v, conv = v.v, v.conv
    tt = tau**theta
    denom = 1.0 + tt * sobolev_norm(v, rho) ** 2 + tt * sobolev_norm(conv, rho) ** 2
    return 1.0 / denom


class _Stepper:
    """Per-mode factors for one (N, tau, refinement), computed once."""

    def __init__(self, config: SchemeConfig):
        self.config = config
        lam = eigenvalues(config.N)
        self.decay = np.exp(-lam * config.tau)
        self.drift = drift_weights(lam, config.tau)
        self.weights = cell_weights(lam, config.tau, config.refinement)

    def __call__(self, state: SchemeState, increments: np.ndarray):
        cfg = self.config
        g = taming_factor(state.v, state.conv, cfg.rho, cfg.theta, cfg.tau)
        d_conv = np.einsum("...kj,kj->...k", increments, self.weights)
        v = self.decay * state.v + d_conv
        if cfg.nonlinearity_enabled:
            v = v + self.drift * np.expand_dims(g, -1) * burgers_nonlinearity(state.v)
        conv = self.decay * state.conv + d_conv
        if not np.all(np.isfinite(v)):
            bad = np.flatnonzero(~np.isfinite(v).reshape(-1, v.shape[-1]).all(axis=-1))
            raise BlowUpError(state.m, f"non-finite coefficient in v (batch rows {bad.tolist()})")
        return SchemeState(v, conv, state.m + 1, state.tau), g


def step(state: SchemeState, increments, config: SchemeConfig) -> SchemeState:
    """One step of the scheme; ``increments`` are the r fine cells, shape (..., N, r)."""
    inc = np.asarray(increments, dtype=float)
    if inc.shape[-1] != config.refinement:
        raise ValueError(f"expected {config.refinement} fine increments per step, got {inc.shape[-1]}")
    if inc.shape[-2] != config.N or state.v.shape[-1] != config.N:
        raise ValueError("mode count of state/noise does not match config.N")
    return _Stepper(config)(state, inc)[0]


def interpolate(state: SchemeState, t: float, increments, config: SchemeConfig) -> np.ndarray:
    """Continuous-time value ``v_t`` for ``t`` in ``[t_m, t_m + tau]``.

    Drift and taming are frozen at ``t_m``; the convolution is advanced over
    the whole fine cells in ``[t_m, t]``, so ``t - t_m`` must sit on the
    fine grid. ``increments`` are the r fine cells of the step.
    """
    tm = state.time
    tau = config.tau
    delta = config.fine_step
    if not (tm - 1e-12 * tau <= t <= tm + tau * (1 + 1e-12)):
        raise ValueError(f"t={t} lies outside [{tm}, {tm + tau}]")
    q = int(round((t - tm) / delta))
    if abs(q * delta - (t - tm)) > 1e-9 * delta:
        raise ValueError("t - t_m must be a multiple of the fine noise step")
    if q == 0:
        return state.v.copy()
    inc = np.asarray(increments, dtype=float)[..., :q]
    lam = eigenvalues(config.N)
    dt = q * delta
    w = cell_weights(lam, dt, q)
    d_conv = np.einsum("...kj,kj->...k", inc, w)
    v = np.exp(-lam * dt) * state.v + d_conv
    if config.nonlinearity_enabled:
        g = taming_factor(state.v, state.conv, config.rho, config.theta, tau)
        v = v + drift_weights(lam, dt) * np.expand_dims(g, -1) * burgers_nonlinearity(state.v)
    return v


@dataclass
class Trajectory:
    """Result of :func:`run`.

    ``taming`` holds G_m for every step (shape (M, ...)); ``vbar_max`` is the
    running maximum over m of ``||v_m - O_m||^2``.
    """

    final: SchemeState
    taming: np.ndarray
    vbar_max: np.ndarray
    snapshots: dict = field(default_factory=dict)
    states: list | None = None


def _snapshot_steps(times, config: SchemeConfig) -> dict:
    out = {}
    for t in times:
        m = Fraction(t).limit_denominator(1 << 30) / Fraction(config.tau).limit_denominator(1 << 30)
        if m.denominator != 1 or not 0 <= m <= config.M:
            raise ValueError(f"snapshot time {t} is not on the time grid")
        out.setdefault(int(m), []).append(float(t))
    return out


def run(
    config: SchemeConfig,
    u0,
    noise: NoiseBundle,
    snapshot_times: Sequence[float] = (),
    keep_states: bool = False,
) -> Trajectory:
    """March M steps, consuming ``noise`` aggregated to the step size.

    ``noise.step`` must equal ``tau / refinement`` for this config; the same
    bundle can drive several configs that differ only in M (and hence in
    refinement), which couples them pathwise.
    """
    if not np.isclose(noise.step, config.fine_step, rtol=1e-12, atol=0):
        raise ValueError(f"noise step {noise.step} does not match tau/refinement = {config.fine_step}")
    if noise.count != config.fine_count:
        raise ValueError(f"noise has {noise.count} fine cells, config needs {config.fine_count}")
    blocks = noise.coarsen(config.refinement)
    if blocks.shape[-3] != config.N:
        if blocks.shape[-3] < config.N:
            raise ValueError("noise bundle has fewer modes than config.N")
        blocks = blocks[..., : config.N, :, :]
    batch = blocks.shape[:-3]
    a0 = np.asarray(u0.coefficients if isinstance(u0, SpectralField) else u0, dtype=float)
    a0 = np.broadcast_to(_resize(a0, config.N), batch + (config.N,))
    state = SchemeState.initial(a0, config.tau)
    stepper = _Stepper(config)
    snaps = _snapshot_steps(snapshot_times, config)
    snapshots = {t: state.v.copy() for t in snaps.get(0, [])}
    taming = np.empty((config.M,) + batch)
    vbar_max = np.zeros(batch)
    states = [state] if keep_states else None
    for m in range(config.M):
        state, g = stepper(state, blocks[..., m, :])
        taming[m] = g
        vbar = state.v - state.conv
        vbar_max = np.maximum(vbar_max, np.sum(vbar * vbar, axis=-1))
        for t in snaps.get(m + 1, []):
            snapshots[t] = state.v.copy()
        if keep_states:
            states.append(state)
    return Trajectory(final=state, taming=taming, vbar_max=vbar_max, snapshots=snapshots, states=states)


def with_steps(config: SchemeConfig, M: int, refinement: int) -> SchemeConfig:
    return replace(config, M=M, refinement=refinement)
