import json
import subprocess
import sys
from fractions import Fraction

import pytest

from elliptic_cs.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_RESONANCE,
    config_parse,
    main,
)
from elliptic_cs.errors import ConfigError


def run_json(argv, capsys):
    code = main(argv)
    return code, json.loads(capsys.readouterr().out)


def test_solve_energy_length(capsys):
    code, doc = run_json(["solve", "--N", "2", "--lambda", "2", "--n", "1,0", "--L", "3"], capsys)
    assert code == EXIT_OK
    assert len(doc["result"]["energy"]) == 4
    assert doc["provenance"]["config"]["L"] == 3
    assert "version" in doc["provenance"]


def test_verify_zeta(capsys):
    code, doc = run_json(["verify-zeta", "--q", "0.2", "--samples", "100", "--seed", "7"], capsys)
    assert code == EXIT_OK
    assert doc["result"]["max_abs_residual"] < 1e-10


def test_verify_identity_fd(capsys):
    code, doc = run_json(["verify-identity", "--N", "3", "--lambda", "0.7", "--q", "0.3"], capsys)
    assert code == EXIT_OK
    assert doc["result"]["method"] == "fd"
    assert doc["result"]["max_rel_residual"] < 1e-6


def test_empty_lambda_names_flag(capsys):
    assert main(["solve", "--lambda", ""]) == EXIT_CONFIG
    assert "lambda" in capsys.readouterr().err
    with pytest.raises(ConfigError) as info:
        config_parse(["solve", "--lambda", ""])
    assert info.value.field == "lambda"


def test_fraction_declares_rational():
    cfg = config_parse(["solve", "--lambda", "3/2"])
    assert cfg.params.lam == Fraction(3, 2) and cfg.params.exact
    assert not config_parse(["solve", "--lambda", "1.5"]).params.exact


def test_file_and_flag_precedence(tmp_path):
    path = tmp_path / "job.cfg"
    path.write_text("# comment\nN=3\nlambda=1/2\nL=2\n")
    cfg = config_parse(["solve", "--config", str(path), "--L", "1"])
    assert cfg.params.N == 3 and cfg.params.lam == Fraction(1, 2)
    assert cfg.L == 1
    assert config_parse(["solve"]).L == 3


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "job.cfg"
    path.write_text("lambda=2\ncolour=blue\n")
    with pytest.raises(ConfigError) as info:
        config_parse(["solve", "--config", str(path)])
    assert info.value.field == "colour"


@pytest.mark.parametrize(
    "argv, field",
    [
        (["solve", "--N", "two"], "N"),
        (["solve", "--q", "1.5"], "q"),
        (["solve", "--N", "2", "--n", "1,0,0"], "n"),
        (["verify-identity", "--method", "spectral"], "method"),
        (["solve", "--format", "xml"], "format"),
    ],
)
def test_field_level_errors(argv, field):
    with pytest.raises(ConfigError) as info:
        config_parse(argv)
    assert info.value.field == field


def test_obstruction_exit_code(capsys):
    assert main(["solve", "--N", "3", "--lambda", "3/2", "--n", "0,0,0", "--L", "3"]) == EXIT_RESONANCE


def test_byte_identical_output(tmp_path):
    argv = ["solve", "--N", "3", "--lambda", "2", "--n", "1,0,0", "--L", "2"]
    outs = []
    for i in range(2):
        path = tmp_path / f"out{i}.json"
        assert main(argv + ["--out", str(path)]) == EXIT_OK
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_csv_output(capsys):
    assert main(["solve", "--lambda", "3/2", "--n", "1,0", "--L", "1", "--format", "csv"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# ")
    assert any(line.startswith("l,mu_12") for line in lines)


def test_jack_and_oracle(capsys):
    code, doc = run_json(["jack", "--N", "2", "--lambda", "3/2", "--n", "1,0", "--L", "1"], capsys)
    assert code == EXIT_OK and doc["result"]["metadata"]["n"] == [1, 0]
    code, doc = run_json(["oracle-compare", "--N", "2", "--lambda", "2", "--q", "0.15", "--n", "0,0", "--L", "6"], capsys)
    assert code == EXIT_OK


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "elliptic_cs", "solve", "--lambda", "2", "--n", "0,0", "--L", "1"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["energy"][0] == "10"
