"""Monte Carlo strong-error studies with pathwise-coupled reference solutions.

Every path owns one fine-grid noise realisation (fine step ``tau_ref /
fine_factor``). The reference run at ``tau_ref`` and every coarse run at
``tau`` consume that same realisation, aggregated to their step size, so
``v^tau_T - v^ref_T`` is a pathwise error.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .fgn import HurstParameter, mode_streams, sample_fgn
from .scheme import BlowUpError, NoiseBundle, SchemeConfig, default_initial_condition, run
from .spectral import evaluate, h1_seminorm_grid, interior_grid, write_field_csv

__all__ = [
    "StudyConfig",
    "ErrorRow",
    "ErrorTable",
    "REFERENCE_RATES",
    "path_noise",
    "path_errors",
    "strong_error",
    "convergence_study",
    "GalleryResult",
    "trajectory_gallery",
    "worker_count",
]

log = logging.getLogger(__name__)

# Published errors and rates for the full-scale study (N=1000, 1000 paths, tau_ref=1/1024).
REFERENCE_RATES = {
    0.9: {Fraction(1, 4): (2.0513e-02, None), Fraction(1, 8): (1.4643e-02, 0.49),
          Fraction(1, 16): (8.5205e-03, 0.78), Fraction(1, 32): (4.6832e-03, 0.86)},
    0.7: {Fraction(1, 4): (4.9763e-02, None), Fraction(1, 8): (4.0368e-02, 0.30),
          Fraction(1, 16): (2.6524e-02, 0.61), Fraction(1, 32): (1.6631e-02, 0.67)},
    0.6: {Fraction(1, 4): (6.7938e-02, None), Fraction(1, 8): (5.8234e-02, 0.22),
          Fraction(1, 16): (4.0781e-02, 0.51), Fraction(1, 32): (2.7754e-02, 0.56)},
}


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x).limit_denominator(1 << 40)


@dataclass(frozen=True)
class StudyConfig:
    """Convergence-study setup. Step sizes are exact fractions."""

    hurst: tuple = (0.9, 0.7, 0.6)
    taus: tuple = (Fraction(1, 4), Fraction(1, 8), Fraction(1, 16), Fraction(1, 32))
    tau_ref: Fraction = Fraction(1, 512)
    N: int = 128
    paths: int = 200
    T: Fraction = Fraction(1)
    rho: float = 0.375
    theta: float = 0.0625
    seed: int = 0
    fine_factor: int = 4
    nonlinearity_enabled: bool = True
    zero_noise: bool = False
    chunk: int | None = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "hurst", tuple(float(h) for h in self.hurst))
        object.__setattr__(self, "taus", tuple(_frac(t) for t in self.taus))
        object.__setattr__(self, "tau_ref", _frac(self.tau_ref))
        object.__setattr__(self, "T", _frac(self.T))
        for h in self.hurst:
            HurstParameter(h)
        if self.paths < 1 or self.N < 1 or self.fine_factor < 1 or (self.chunk is not None and self.chunk < 1):
            raise ValueError("paths, N, fine_factor and chunk must be positive")
        if self.tau_ref <= 0 or (self.T / self.tau_ref).denominator != 1:
            raise ValueError(f"tau_ref={self.tau_ref} must divide T={self.T}")
        for tau in self.taus:
            if tau <= 0 or (tau / self.tau_ref).denominator != 1:
                raise ValueError(f"tau={tau} is not an integer multiple of tau_ref={self.tau_ref}")
            if (self.T / tau).denominator != 1:
                raise ValueError(f"tau={tau} does not divide T={self.T}")
        # Validates rho/theta.
        self.scheme(self.tau_ref)

    @classmethod
    def full_scale(cls, **overrides) -> "StudyConfig":
        """The published configuration: N=1000, 1000 paths, tau_ref=1/1024."""
        base = dict(N=1000, paths=1000, tau_ref=Fraction(1, 1024))
        base.update(overrides)
        return cls(**base)

    @property
    def fine_step(self) -> Fraction:
        return self.tau_ref / self.fine_factor

    @property
    def fine_count(self) -> int:
        return int(self.T / self.fine_step)

    @property
    def paths_per_chunk(self) -> int:
        if self.chunk is not None:
            return self.chunk
        # Keep one chunk's noise under ~200 MB.
        return max(1, min(25, 25_000_000 // (self.N * self.fine_count)))

    def scheme(self, tau) -> SchemeConfig:
        tau = _frac(tau)
        return SchemeConfig(
            N=self.N,
            M=int(self.T / tau),
            T=float(self.T),
            rho=self.rho,
            theta=self.theta,
            refinement=int(tau / self.fine_step),
            seed=self.seed,
            nonlinearity_enabled=self.nonlinearity_enabled,
        )


def path_noise(config: StudyConfig, H: float, paths: Iterable[int]) -> NoiseBundle:
    """Fine-grid noise for the given path indices, shape (paths, N, count)."""
    step = float(config.fine_step)
    paths = list(paths)
    if config.zero_noise:
        return NoiseBundle.zeros(config.N, config.fine_count, step, batch=(len(paths),))
    h = HurstParameter(H)
    inc = np.stack(
        [
            sample_fgn(config.N, config.fine_count, step, h, mode_streams(config.seed, p, config.N)).increments
            for p in paths
        ]
    )
    return NoiseBundle(step, inc)


def _run(config: StudyConfig, tau, u0, noise, lo: int, H: float):
    try:
        return run(config.scheme(tau), u0, noise)
    except BlowUpError as exc:
        raise BlowUpError(
            exc.step_index,
            f"H={H}, tau={tau}, paths {lo}..{lo + noise.increments.shape[0] - 1}, seed={config.seed}",
        ) from exc


def _chunk(args):
    config, H, lo, hi, u0 = args
    noise = path_noise(config, H, range(lo, hi))
    ref = _run(config, config.tau_ref, u0, noise, lo, H).final.v
    out = {}
    for tau in config.taus:
        v = _run(config, tau, u0, noise, lo, H).final.v
        d = v - ref
        out[tau] = np.sum(d * d, axis=-1)
    return out, ref


def worker_count(requested: int | None = None) -> int:
    """Worker processes (0 or None means one per CPU), capped by ``SBE_THREADS``."""
    n = requested if requested else os.cpu_count() or 1
    cap = os.environ.get("SBE_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def _map_chunks(config: StudyConfig, H: float, u0):
    c = config.paths_per_chunk
    jobs = [(config, H, lo, min(config.paths, lo + c), u0) for lo in range(0, config.paths, c)]
    workers = min(worker_count(config.workers), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_chunk, jobs))
    return [_chunk(j) for j in jobs]


def path_errors(H: float, config: StudyConfig, u0=None) -> tuple[dict, np.ndarray]:
    """Squared L2 errors per path at T for every tau, plus the reference endpoints."""
    u0 = default_initial_condition(config.N) if u0 is None else u0
    parts = _map_chunks(config, H, u0)
    errs = {tau: np.concatenate([p[0][tau] for p in parts]) for tau in config.taus}
    ref = np.concatenate([p[1] for p in parts])
    return errs, ref


def _rms(sq: np.ndarray) -> tuple[float, float]:
    # Delta-method standard error of sqrt(mean(sq)).
    mean = float(np.mean(sq))
    err = math.sqrt(mean)
    if sq.size < 2 or err == 0.0:
        return err, 0.0
    se_mean = float(np.std(sq, ddof=1)) / math.sqrt(sq.size)
    return err, se_mean / (2.0 * err)


def strong_error(H: float, tau, config: StudyConfig, u0=None) -> float:
    """``(E ||v^tau_T - v^ref_T||^2)^(1/2)`` over ``config.paths`` coupled paths."""
    tau = _frac(tau)
    errs, _ = path_errors(H, replace(config, taus=(tau,)), u0)
    return _rms(errs[tau])[0]


@dataclass
class ErrorRow:
    H: float
    tau: Fraction
    error: float
    rate: float | None
    mc_stderr: float
    paths: int
    seed: int


@dataclass
class ErrorTable:
    rows: list = field(default_factory=list)

    FIELDS = ("H", "tau", "error", "rate", "mc_stderr", "paths", "seed")

    def for_h(self, H: float) -> list:
        return sorted((r for r in self.rows if r.H == H), key=lambda r: r.tau, reverse=True)

    @property
    def hurst(self) -> list:
        return list(dict.fromkeys(r.H for r in self.rows))

    def final_rate(self, H: float) -> float:
        return self.for_h(H)[-1].rate

    def rate_stderr(self, H: float, index: int = -1) -> float:
        """Delta-method standard error of a rate, treating both errors as independent."""
        rows = self.for_h(H)
        i = index % len(rows)
        if i == 0:
            raise ValueError("the first row has no rate")
        a, b = rows[i - 1], rows[i]
        return math.hypot(a.mc_stderr / a.error, b.mc_stderr / b.error) / math.log(2)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.FIELDS)
            for r in self.rows:
                w.writerow([
                    f"{r.H:.17g}",
                    f"{r.tau.numerator}/{r.tau.denominator}",
                    f"{r.error:.17g}",
                    "" if r.rate is None else f"{r.rate:.17g}",
                    f"{r.mc_stderr:.17g}",
                    r.paths,
                    r.seed,
                ])

    @classmethod
    def read_csv(cls, path) -> "ErrorTable":
        rows = []
        with open(path, newline="") as fh:
            for d in csv.DictReader(fh):
                rows.append(ErrorRow(
                    H=float(d["H"]),
                    tau=Fraction(d["tau"]),
                    error=float(d["error"]),
                    rate=float(d["rate"]) if d["rate"] else None,
                    mc_stderr=float(d["mc_stderr"]),
                    paths=int(d["paths"]),
                    seed=int(d["seed"]),
                ))
        return cls(rows)

    def format(self) -> str:
        lines = [f"{'H':>5} {'tau':>7} {'error':>12} {'rate':>6} {'stderr':>10}"]
        for r in self.rows:
            rate = "" if r.rate is None else f"{r.rate:.2f}"
            lines.append(f"{r.H:>5} {str(r.tau):>7} {r.error:>12.4e} {rate:>6} {r.mc_stderr:>10.2e}")
        return "\n".join(lines)


def convergence_study(config: StudyConfig, out=None, u0=None) -> ErrorTable:
    """Fill the (H, tau) error table; writes ``errors.csv`` under ``out`` if given."""
    table = ErrorTable()
    taus = sorted(config.taus, reverse=True)
    for H in config.hurst:
        log.info("H=%s: %d paths, N=%d, tau_ref=%s", H, config.paths, config.N, config.tau_ref)
        errs, _ = path_errors(H, config, u0)
        prev = None
        for tau in taus:
            err, se = _rms(errs[tau])
            rate = None
            if prev is not None and prev[0] == 2 * tau and err > 0 and prev[1] > 0:
                rate = math.log2(prev[1] / err)
            table.rows.append(ErrorRow(H, tau, err, rate, se, config.paths, config.seed))
            prev = (tau, err)
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        table.to_csv(Path(out) / "errors.csv")
    return table


@dataclass
class GalleryResult:
    """Endpoint profiles of the reference solution per H."""

    x: np.ndarray
    profiles: dict
    seminorms: dict
    files: dict = field(default_factory=dict)

    def median_seminorm(self, H: float) -> float:
        return float(np.median(self.seminorms[H]))


def trajectory_gallery(
    hurst: Sequence[float],
    config: StudyConfig,
    out=None,
    grid_points: int | None = None,
    u0=None,
) -> GalleryResult:
    """Reference-solution profiles at T and their discrete H1 seminorms.

    Every H is driven by the same per-path normal draws (same seed), so the
    comparison across H is a common-random-numbers one. With ``out`` set,
    the first path's profile goes to ``snapshots/H_<H>.csv``.
    """
    P = 8 * config.N - 1 if grid_points is None else grid_points
    x = interior_grid(P)
    dx = 1.0 / (P + 1)
    u0 = default_initial_condition(config.N) if u0 is None else u0
    cfg = replace(config, taus=(config.tau_ref,))
    profiles, seminorms, files = {}, {}, {}
    for H in hurst:
        parts = _map_chunks(cfg, H, u0)
        ref = np.concatenate([p[1] for p in parts])
        vals = evaluate(ref, P)
        profiles[H] = vals
        seminorms[H] = h1_seminorm_grid(vals, dx)
        if out is not None:
            snap = Path(out) / "snapshots"
            snap.mkdir(parents=True, exist_ok=True)
            f = snap / f"H_{H:g}.csv"
            write_field_csv(f, x, vals[0])
            files[H] = f
    return GalleryResult(x=x, profiles=profiles, seminorms=seminorms, files=files)
