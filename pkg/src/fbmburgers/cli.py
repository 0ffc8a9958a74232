"""Command-line front end: ``sbe-fbm {simulate,convergence,noise-check,gallery}``.

Configuration comes from a ``key = value`` file (``#`` starts a comment)
overridden by flags. Every run writes ``manifest.txt`` into ``--out``; the
manifest is itself a valid config file, so::

    sbe-fbm convergence --config out/manifest.txt --out out2

reproduces ``out``'s CSVs bit for bit.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import StudyConfig, convergence_study, trajectory_gallery
from .fgn import FgnGrid, HurstParameter, fgn_autocovariance, mode_streams, sample_fgn
from .scheme import BlowUpError, NoiseBundle, SchemeConfig, default_initial_condition, run
from .spectral import eigenvalues, evaluate, interior_grid
from .stochconv import convolution_variance_oracle, sample_convolution

log = logging.getLogger("fbmburgers")

COMMANDS = ("simulate", "convergence", "noise-check", "gallery")


class ConfigError(ValueError):
    """Invalid or incomplete configuration."""


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot parse {text!r} as a number or fraction") from exc


def _fraction_list(text: str) -> tuple:
    return tuple(_fraction(t) for t in text.split(",") if t.strip())


def _float_list(text: str) -> tuple:
    return tuple(float(_fraction(t)) for t in text.split(",") if t.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"cannot parse {text!r} as a boolean")


def _int(text: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"cannot parse {text!r} as an integer") from exc


# key -> (parser, default, help). None default means required.
KEYS = {
    "h": (_float_list, None, "Hurst parameter(s), comma separated, each in (1/2, 1)"),
    "n_modes": (_int, 128, "Galerkin modes N"),
    "m_steps": (_int, 512, "time steps M (simulate, noise-check)"),
    "taus": (_fraction_list, "1/4,1/8,1/16,1/32", "coarse step sizes for the convergence study"),
    "tau_ref": (_fraction, "1/512", "reference step size"),
    "paths": (_int, 200, "Monte Carlo paths (convergence, gallery)"),
    "rho": (lambda s: float(_fraction(s)), "3/8", "Sobolev index in the taming factor"),
    "theta": (lambda s: float(_fraction(s)), "1/16", "step-size exponent in the taming factor"),
    "refine": (_int, 4, "fine noise cells per step (per tau_ref step for convergence/gallery)"),
    "seed": (_int, 0, "master seed"),
    "t_end": (_fraction, "1", "time horizon T"),
    "samples": (_int, 1000, "samples for noise-check"),
    "mode": (_int, 1, "mode index for noise-check"),
    "snapshot_times": (_fraction_list, "1/4,1/2,3/4,1", "snapshot times for simulate"),
    "full_scale": (_bool, "false", "use N=1000, 1000 paths, tau_ref=1/1024"),
    "zero_noise": (_bool, "false", "switch the noise off"),
    "nonlinearity": (_bool, "true", "include the Burgers drift"),
}
META_KEYS = ("command", "tool_version", "wall_clock_seconds")

# Per-command defaults that differ from the table above.
COMMAND_DEFAULTS = {
    "noise-check": {"m_steps": "64", "refine": "64"},
    "gallery": {"h": "0.95,0.7,0.55", "paths": "20"},
}


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines into raw strings; unknown keys are errors."""
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key in META_KEYS or key.startswith("sha256."):
            continue
        if key == "out":
            out[key] = value
            continue
        if key not in KEYS:
            raise ConfigError(f"{path}:{n}: unknown key {key!r}")
        out[key] = value
    return out


def parse_config(command: str, path=None, overrides: dict | None = None):
    """Resolve file values, flag overrides and defaults into a validated config.

    Returns ``(config, resolved)`` where ``config`` is a :class:`SchemeConfig`
    (simulate, noise-check) or :class:`StudyConfig` (convergence, gallery)
    and ``resolved`` maps every key to its materialised value.
    """
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    raw = {k: v[1] for k, v in KEYS.items() if v[1] is not None}
    raw.update(COMMAND_DEFAULTS.get(command, {}))
    if path is not None:
        raw.update(read_config_file(path))
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = v if isinstance(v, str) else str(v)
    if "h" not in raw:
        raise ConfigError("missing Hurst parameter: pass --h 0.9 (or several, e.g. --h 0.9,0.7,0.6) or set 'h = ...' in the config file")
    vals = {}
    for k, s in raw.items():
        vals[k] = s if k == "out" else KEYS[k][0](str(s))
    if vals["full_scale"]:
        vals.update(n_modes=1000, paths=1000, tau_ref=Fraction(1, 1024))
    try:
        for h in vals["h"]:
            HurstParameter(h)
        if command in ("simulate", "noise-check"):
            cfg = SchemeConfig(
                N=vals["n_modes"],
                M=vals["m_steps"],
                T=float(vals["t_end"]),
                rho=vals["rho"],
                theta=vals["theta"],
                refinement=vals["refine"],
                seed=vals["seed"],
                nonlinearity_enabled=vals["nonlinearity"],
            )
            if command == "noise-check" and not 1 <= vals["mode"]:
                raise ValueError("mode must be >= 1")
        else:
            cfg = StudyConfig(
                hurst=vals["h"],
                taus=vals["taus"] if command == "convergence" else (vals["tau_ref"],),
                tau_ref=vals["tau_ref"],
                N=vals["n_modes"],
                paths=vals["paths"],
                T=vals["t_end"],
                rho=vals["rho"],
                theta=vals["theta"],
                seed=vals["seed"],
                fine_factor=vals["refine"],
                nonlinearity_enabled=vals["nonlinearity"],
                zero_noise=vals["zero_noise"],
                workers=0,
            )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg, vals


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ",".join(_format_value(x) for x in v)
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_manifest(out: Path, command: str, vals: dict, artifacts, elapsed: float) -> Path:
    lines = ["# sbe-fbm run manifest; usable as --config", f"command = {command}"]
    for k in KEYS:
        if k in vals and k != "full_scale":
            lines.append(f"{k} = {_format_value(vals[k])}")
    lines.append("full_scale = false")
    lines.append(f"tool_version = {__version__}")
    lines.append(f"wall_clock_seconds = {elapsed:.3f}")
    for a in sorted(artifacts):
        digest = hashlib.sha256(Path(a).read_bytes()).hexdigest()
        lines.append(f"sha256.{Path(a).relative_to(out).as_posix()} = {digest}")
    path = out / "manifest.txt"
    path.write_text("\n".join(lines) + "\n")
    return path


def _simulate(cfg: SchemeConfig, vals: dict, out: Path):
    H = vals["h"][0]
    N = cfg.N
    if vals["zero_noise"]:
        noise = NoiseBundle.zeros(N, cfg.fine_count, cfg.fine_step)
    else:
        grid = sample_fgn(N, cfg.fine_count, cfg.fine_step, HurstParameter(H), mode_streams(cfg.seed, 0, N))
        noise = NoiseBundle.from_grid(grid)
    times = [float(t) for t in vals["snapshot_times"]]
    traj = run(cfg, default_initial_condition(N), noise, snapshot_times=times)
    P = 8 * N - 1
    x = interior_grid(P)
    snap = out / "snapshots"
    snap.mkdir(parents=True, exist_ok=True)
    path = snap / "trajectory.csv"
    with open(path, "w") as fh:
        fh.write("t,x,u\n")
        for t in times:
            u = evaluate(traj.snapshots[t], P)
            for xi, ui in zip(x, u):
                fh.write(f"{t:.17g},{xi:.17g},{ui:.17g}\n")
    print(f"min G = {traj.taming.min():.6g}, max ||v - O||^2 = {float(traj.vbar_max):.6g}")
    return [path]


def _convergence(cfg: StudyConfig, vals: dict, out: Path):
    table = convergence_study(cfg, out=out)
    print(table.format())
    return [out / "errors.csv"]


def _noise_check(cfg: SchemeConfig, vals: dict, out: Path):
    k = vals["mode"]
    S = vals["samples"]
    r = cfg.refinement
    tau = cfg.tau
    lam = float(eigenvalues(k)[-1])
    rows, fgn_rows = [], []
    for H in vals["h"]:
        h = HurstParameter(H)
        for m in sorted({max(1, cfg.M // 4), max(1, cfg.M // 2), max(1, 3 * cfg.M // 4), cfg.M}):
            t = m * tau
            o = sample_convolution(k, t, h, S, cfg.seed, tau, r, modes=[k])[:, 0]
            emp = float(np.mean(o * o))
            ora = convolution_variance_oracle(lam, t, h)
            rows.append((H, k, t, emp, ora, emp / ora))
        # fGn sanity on the fine grid used above
        grid = sample_fgn(S, cfg.fine_count, cfg.fine_step, h, np.random.Generator(np.random.Philox(cfg.seed)))
        inc = grid.increments
        for lag in range(4):
            emp = float(np.mean(inc[:, : inc.shape[1] - lag] * inc[:, lag:]))
            fgn_rows.append((H, lag, emp, float(fgn_autocovariance(lag, cfg.fine_step, h))))
    path = out / "noise_check.csv"
    with open(path, "w") as fh:
        fh.write("H,mode,t,empirical_var,oracle_var,ratio\n")
        for H, mode, t, e, o, q in rows:
            fh.write(f"{H:.17g},{mode},{t:.17g},{e:.17g},{o:.17g},{q:.17g}\n")
    fpath = out / "fgn_check.csv"
    with open(fpath, "w") as fh:
        fh.write("H,lag,empirical_cov,exact_cov\n")
        for H, lag, e, x in fgn_rows:
            fh.write(f"{H:.17g},{lag},{e:.17g},{x:.17g}\n")
    for H, mode, t, e, o, q in rows:
        print(f"H={H} mode={mode} t={t:.4g}: empirical {e:.5e} oracle {o:.5e} ratio {q:.4f}")
    files = [path, fpath]
    if vals.get("dump_noise"):
        dump = out / "fgn.csv"
        FgnGrid(grid.step, grid.increments[:1]).to_csv(dump)
        files.append(dump)
    return files


def _gallery(cfg: StudyConfig, vals: dict, out: Path):
    res = trajectory_gallery(vals["h"], cfg, out=out)
    path = out / "gallery.csv"
    with open(path, "w") as fh:
        fh.write("H,median_h1_seminorm,paths\n")
        for H in vals["h"]:
            fh.write(f"{H:.17g},{res.median_seminorm(H):.17g},{cfg.paths}\n")
            print(f"H={H}: median discrete H1 seminorm {res.median_seminorm(H):.5g}")
    return [path] + list(res.files.values())


HANDLERS = {"simulate": _simulate, "convergence": _convergence, "noise-check": _noise_check, "gallery": _gallery}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sbe-fbm",
        description="Tamed exponential Euler / spectral Galerkin solver for the stochastic Burgers equation with fBm noise.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value configuration file (a manifest.txt works)")
        p.add_argument("--out", help="output directory (default: ./sbe-out)")
        p.add_argument("--h", help=KEYS["h"][2])
        p.add_argument("--n-modes", dest="n_modes")
        p.add_argument("--m-steps", dest="m_steps")
        p.add_argument("--taus")
        p.add_argument("--tau-ref", dest="tau_ref")
        p.add_argument("--paths")
        p.add_argument("--rho")
        p.add_argument("--theta")
        p.add_argument("--refine")
        p.add_argument("--seed")
        p.add_argument("--t-end", dest="t_end")
        p.add_argument("--samples")
        p.add_argument("--mode")
        p.add_argument("--snapshot-times", dest="snapshot_times")
        p.add_argument("--full-scale", dest="full_scale", action="store_const", const="true")
        p.add_argument("--zero-noise", dest="zero_noise", action="store_const", const="true")
        p.add_argument("--no-nonlinearity", dest="nonlinearity", action="store_const", const="false")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "noise-check":
            p.add_argument("--dump-noise", action="store_true", help="also write one fGn grid to fgn.csv")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = {k: getattr(args, k, None) for k in KEYS}
    try:
        cfg, vals = parse_config(args.command, args.config, overrides)
    except ConfigError as exc:
        print(f"sbe-fbm {args.command}: error: {exc}", file=sys.stderr)
        return 1
    out = Path(args.out or vals.get("out") or "sbe-out")
    out.mkdir(parents=True, exist_ok=True)
    vals["dump_noise"] = getattr(args, "dump_noise", False)
    start = time.perf_counter()
    try:
        artifacts = HANDLERS[args.command](cfg, vals, out)
    except BlowUpError as exc:
        print(f"sbe-fbm {args.command}: blow-up: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"sbe-fbm {args.command}: error: {exc}", file=sys.stderr)
        return 1
    write_manifest(out, args.command, vals, artifacts, time.perf_counter() - start)
    return 0


if __name__ == "__main__":
    sys.exit(main())
