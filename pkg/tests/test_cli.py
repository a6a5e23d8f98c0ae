import json
import os
import subprocess
import sys

import pytest

from jcas.cli import main, parse_override, resolve_config
from jcas.errors import ConfigError


def write(tmp_path, text, name="scenario.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_single_defaults(tmp_path, capsys):
    assert main(["single", "--out", str(tmp_path), "--set", "single.schemes=['OPTS']"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# config_hash=")
    row = [line for line in out.splitlines() if line.startswith("OPTS")][0]
    assert float(row.split()[5]) == pytest.approx(1.0)
    data = json.loads((tmp_path / "single.json").read_text())
    assert data["reports"]["OPTS"]["rel_sensing"] == pytest.approx(1.0, abs=1e-9)


def test_missing_config_is_config_error(tmp_path):
    assert main(["single", "--config", str(tmp_path / "absent.toml"), "--out", str(tmp_path)]) == 2


def test_snr_override_in_metadata(tmp_path):
    assert main(["single", "--out", str(tmp_path), "--set", "snr_db=7"]) == 0
    data = json.loads((tmp_path / "single.json").read_text())
    assert data["snr_db"] == pytest.approx(7.0)
    assert data["config"]["total_energy"] == pytest.approx(128 * 10**0.7)


def test_config_file_sections_and_precedence(tmp_path):
    path = write(tmp_path, "n_antennas = 4\nl_train = 4\n[system]\nsnr_db = 3\n[sweep]\naxis = 'snr_db'\n")
    cfg, sweep, _ = resolve_config(path, ["total_energy=50.0", "sweep.trials=7"])
    assert cfg.n_antennas == 4 and cfg.total_energy == 50.0
    assert sweep == {"axis": "snr_db", "trials": 7}
    cfg, _, _ = resolve_config(path)
    assert cfg.snr_db == pytest.approx(3.0)


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        resolve_config(write(tmp_path, "bogus = 1\n"))
    with pytest.raises(ConfigError):
        resolve_config(write(tmp_path, "[extra]\nx = 1\n"))
    with pytest.raises(ConfigError):
        resolve_config(write(tmp_path, "n_antennas = \n"))
    with pytest.raises(ConfigError):
        resolve_config(None, ["snr_db=1", "total_energy=3"])
    with pytest.raises(ConfigError):
        resolve_config(None, ["l_train=2"])
    with pytest.raises(ConfigError):
        parse_override("no_equals_sign")
    assert main(["single", "--set", "n_antennas='eight'"]) == 2
    assert main(["bogus-command"]) == 2


def test_seed_precedence(monkeypatch):
    monkeypatch.setenv("JCAS_SEED", "17")
    assert resolve_config(None, ["seed=3"])[0].seed == 17
    assert resolve_config(None, [], seed=5)[0].seed == 5
    monkeypatch.delenv("JCAS_SEED")
    assert resolve_config(None, ["seed=3"])[0].seed == 3


def test_sweep_command(tmp_path):
    path = write(tmp_path, "[sweep]\naxis = 'snr_db'\nvalues = [0.0, 5.0]\nschemes = ['OPTC', 'JCAS(0.4)']\n")
    assert main(["sweep", "--config", path, "--trials", "2", "--out", str(tmp_path), "--seed", "4"]) == 0
    lines = (tmp_path / "sweep_snr_db.csv").read_text().splitlines()
    assert lines[0].startswith("# config_hash=") and lines[0].endswith("seed=4")
    assert len(lines) == 2 + 4
    assert main(["sweep", "--out", str(tmp_path)]) == 2


def test_numerical_error_exit_code(tmp_path):
    # ratio 1.0 leaves no data symbols: rejected as configuration
    path = write(tmp_path, "[sweep]\naxis = 'train_ratio'\nvalues = [0.5, 1.0]\n")
    assert main(["sweep", "--config", path, "--trials", "1", "--out", str(tmp_path)]) == 2
    # vanishing energy breaks the split computation itself
    assert main(["single", "--set", "total_energy=1e-300", "--out", str(tmp_path)]) == 3


def test_oracle_check_passes_and_detects_fault(capsys):
    assert main(["oracle-check"]) == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 5
    assert main(["oracle-check", "--inject-fault"]) == 1
    assert "[FAIL] water-filling" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    env = dict(os.environ, JCAS_SEED="1")
    proc = subprocess.run(
        [sys.executable, "-m", "jcas", "single", "--out", str(tmp_path), "--set", "single.schemes='EQUAL'"],
        capture_output=True, text=True, env=env,
    )
    assert proc.returncode == 0, proc.stderr
    assert "seed=1" in proc.stdout
