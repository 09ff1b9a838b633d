import importlib.resources

import pytest

from glse_gamp.cli import main, parse_config, serialize_config
from glse_gamp.errors import InvalidConfig
from glse_gamp.simharness import CSV_HEADER


def packaged_config(name):
    ref = importlib.resources.files("glse_gamp") / "configs" / name
    return ref.read_text(encoding="utf-8")


SMALL_CONFIG = """\
[experiment]
mode = tas
n_antennas = 16
inv_load_grid = 2, 4
rho = 1.0
p_avg = 0.3
eta_grid = 0.5, 1.0
trials = 2
seed = 5

[engine]
max_iter = 20
tol = 1e-8
damping = 1.0

[output]
csv = out.csv
"""


def test_parse_packaged_configs():
    for name in ("fig1.cfg", "fig2.cfg"):
        cfg = parse_config(packaged_config(name))
        assert cfg.spec.trials == 500
        assert cfg.spec.n_antennas == 64


def test_parse_serialize_round_trip():
    cfg = parse_config(SMALL_CONFIG)
    again = parse_config(serialize_config(cfg))
    assert again.spec == cfg.spec
    assert again.csv_path == cfg.csv_path
    # and the packaged configs round-trip as well
    cfg1 = parse_config(packaged_config("fig2.cfg"))
    assert parse_config(serialize_config(cfg1)).spec == cfg1.spec


def test_parse_rejects_unknown_key_and_section():
    with pytest.raises(InvalidConfig):
        parse_config(SMALL_CONFIG + "\n[bogus]\nx = 1\n")
    with pytest.raises(InvalidConfig):
        parse_config(SMALL_CONFIG.replace("trials", "trails"))
    with pytest.raises(InvalidConfig):
        parse_config("not an ini file at all [")
    with pytest.raises(InvalidConfig):
        parse_config("[engine]\nmax_iter = 5\n")


def test_seed_env_override(monkeypatch):
    monkeypatch.setenv("GLSE_SEED", "99")
    assert parse_config(SMALL_CONFIG).spec.seed == 99
    monkeypatch.delenv("GLSE_SEED")
    assert parse_config(SMALL_CONFIG).spec.seed == 5


def test_tune_command_success(capsys):
    code = main(["tune", "--mode", "tas", "--alpha", "0.5", "--p", "0.3",
                 "--eta", "1.0"])
    out = capsys.readouterr().out
    assert code == 0
    assert "lambda = " in out and "xi = " in out
    lam = float(out.splitlines()[0].split("=")[1])
    assert abs(lam - 0.31163) < 1e-3


def test_tune_command_rejects_bad_targets(capsys):
    assert main(["tune", "--mode", "tas", "--alpha", "0.5", "--p", "0.3",
                 "--eta", "1.5"]) == 2
    # past the feasibility pole
    assert main(["tune", "--mode", "tas", "--alpha", "0.2", "--p", "0.3",
                 "--eta", "1.0"]) == 2
    # papr mode without a target
    assert main(["tune", "--mode", "papr", "--alpha", "0.5", "--p", "0.3"]) == 2


def test_precode_command_output(capsys):
    code = main(["precode", "--k", "4", "--n", "8", "--lam", "0.3",
                 "--mu", "0.05", "--seed", "1", "--max-iter", "50"])
    out = capsys.readouterr().out
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 10  # 8 antennas + distortion + iterations
    re_part, im_part = lines[0].split()
    float(re_part), float(im_part)
    assert lines[8].startswith("distortion = ")
    assert lines[9].startswith("iterations = ")


def test_precode_deterministic(capsys):
    argv = ["precode", "--k", "2", "--n", "4", "--lam", "0.4", "--seed", "7"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == first


def test_sweep_command_writes_csv(tmp_path, capsys):
    cfg_path = tmp_path / "small.cfg"
    out_path = tmp_path / "rows.csv"
    cfg_path.write_text(SMALL_CONFIG, encoding="utf-8")
    code = main(["sweep", str(cfg_path), "--output", str(out_path),
                 "--workers", "1"])
    assert code == 0
    text = out_path.read_text(encoding="utf-8")
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    assert len(text.splitlines()) == 5
    # a second run reproduces the file byte for byte
    out2 = tmp_path / "rows2.csv"
    main(["sweep", str(cfg_path), "--output", str(out2), "--workers", "2"])
    assert out2.read_text(encoding="utf-8") == text


def test_sweep_command_missing_config(tmp_path, capsys):
    assert main(["sweep", str(tmp_path / "nope.cfg")]) == 3
    cfg_path = tmp_path / "small.cfg"
    cfg_path.write_text(SMALL_CONFIG, encoding="utf-8")
    assert main(["sweep", str(cfg_path),
                 "--output", str(tmp_path / "no" / "dir.csv"),
                 "--workers", "1"]) == 3


def test_validate_command(capsys):
    assert main(["validate", "--cases", "0"]) == 0
    assert main(["validate", "--cases", "2", "--seed", "3"]) == 0
    out = capsys.readouterr().out
    assert "max objective gap" in out
