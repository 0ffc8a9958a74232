import numpy as np
import pytest

from fbmburgers.cli import ConfigError, main, parse_config, read_config_file
from fbmburgers.experiments import StudyConfig
from fbmburgers.scheme import SchemeConfig


def test_default_parameters_accepted(tmp_path):
    f = tmp_path / "c.txt"
    f.write_text("h = 0.9  # Hurst\nrho = 0.375\ntheta = 0.0625\n")
    cfg, vals = parse_config("simulate", f)
    assert isinstance(cfg, SchemeConfig)
    assert (cfg.rho, cfg.theta) == (0.375, 0.0625)


def test_theta_rejected_names_inequality():
    with pytest.raises(ConfigError, match="theta < 1/8"):
        parse_config("convergence", overrides={"h": "0.9", "theta": "0.2"})


def test_missing_h():
    with pytest.raises(ConfigError, match="--h"):
        parse_config("convergence")


def test_flags_override_file(tmp_path):
    f = tmp_path / "c.txt"
    f.write_text("h = 0.7\npaths = 5\ntaus = 1/4, 1/8\n")
    cfg, vals = parse_config("convergence", f, {"paths": "7"})
    assert isinstance(cfg, StudyConfig)
    assert cfg.paths == 7 and cfg.hurst == (0.7,)
    assert [str(t) for t in cfg.taus] == ["1/4", "1/8"]


def test_fraction_parsing_is_exact():
    cfg, _ = parse_config("convergence", overrides={"h": "0.9", "tau_ref": "1/1024"})
    assert str(cfg.tau_ref) == "1/1024"


def test_full_scale_flag():
    cfg, _ = parse_config("convergence", overrides={"h": "0.9", "full_scale": "true"})
    assert (cfg.N, cfg.paths, str(cfg.tau_ref)) == (1000, 1000, "1/1024")


def test_unknown_key(tmp_path):
    f = tmp_path / "c.txt"
    f.write_text("h = 0.7\nbogus = 1\n")
    with pytest.raises(ConfigError, match="bogus"):
        read_config_file(f)


def test_bad_line(tmp_path):
    f = tmp_path / "c.txt"
    f.write_text("h 0.7\n")
    with pytest.raises(ConfigError):
        read_config_file(f)


def test_exit_code_validation(tmp_path, capsys):
    assert main(["convergence", "--h", "0.9", "--theta", "0.2", "--out", str(tmp_path)]) == 1
    assert "theta < 1/8" in capsys.readouterr().err
    assert main(["simulate", "--out", str(tmp_path)]) == 1


def test_exit_code_blowup(tmp_path, monkeypatch):
    import fbmburgers.cli as cli
    from fbmburgers.scheme import BlowUpError

    def boom(*a, **k):
        raise BlowUpError(3)

    monkeypatch.setitem(cli.HANDLERS, "simulate", boom)
    assert main(["simulate", "--h", "0.7", "--out", str(tmp_path)]) == 2


def test_convergence_two_rows(tmp_path):
    out = tmp_path / "o"
    args = ["convergence", "--h", "0.9", "--paths", "4", "--taus", "1/4,1/8", "--n-modes", "16", "--tau-ref", "1/32", "--out", str(out)]
    assert main(args) == 0
    lines = (out / "errors.csv").read_text().splitlines()
    assert len(lines) == 3
    assert lines[1].split(",")[3] == "" and lines[2].split(",")[3] != ""
    assert "sha256.errors.csv" in (out / "manifest.txt").read_text()


def test_manifest_reproduces(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    base = ["--h", "0.8", "--paths", "3", "--taus", "1/4,1/8", "--n-modes", "8", "--tau-ref", "1/16", "--seed", "5"]
    assert main(["convergence", *base, "--out", str(a)]) == 0
    assert main(["convergence", "--config", str(a / "manifest.txt"), "--out", str(b)]) == 0
    assert (a / "errors.csv").read_bytes() == (b / "errors.csv").read_bytes()


def test_simulate_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["simulate", "--h", "0.7", "--seed", "7", "--n-modes", "16", "--m-steps", "32", "--out", str(d)]) == 0
    fa = (a / "snapshots" / "trajectory.csv").read_bytes()
    assert fa == (b / "snapshots" / "trajectory.csv").read_bytes()
    assert fa.splitlines()[0] == b"t,x,u"


def test_noise_check(tmp_path):
    out = tmp_path / "n"
    assert main(["noise-check", "--h", "0.75", "--mode", "1", "--samples", "1000", "--m-steps", "16", "--refine", "64", "--out", str(out), "--dump-noise"]) == 0
    lines = (out / "noise_check.csv").read_text().splitlines()
    assert lines[0] == "H,mode,t,empirical_var,oracle_var,ratio"
    ratios = np.array([float(l.split(",")[-1]) for l in lines[1:]])
    # 1000 samples: relative sd of a variance estimate is sqrt(2/1000) ~ 4.5%
    assert np.all(np.abs(ratios - 1) < 4 * np.sqrt(2 / 1000))
    assert (out / "fgn.csv").read_text().startswith("mode,substep,value")
    assert (out / "fgn_check.csv").exists()


def test_gallery(tmp_path):
    out = tmp_path / "g"
    assert main(["gallery", "--paths", "2", "--n-modes", "16", "--tau-ref", "1/32", "--out", str(out)]) == 0
    snaps = sorted(p.name for p in (out / "snapshots").iterdir())
    assert snaps == ["H_0.55.csv", "H_0.7.csv", "H_0.95.csv"]
    assert (out / "gallery.csv").read_text().startswith("H,median_h1_seminorm")
