"""
Tests for system documents and run settings
"""

from pathlib import Path

import pytest

from raman_echo.core.errors import ConfigurationError
from raman_echo.simulation.analysis import EfficiencyMetric
from raman_echo.simulation.config import RunSettings, SystemDocument, load_settings, parse_pair
from raman_echo.simulation.model import EnsembleSpec, LevelSystem
from raman_echo.simulation.propagate import Integrator

SETTINGS_TOML = """
[tool.raman-echo]
integrator = "rk4"
dt_us = 0.002
threads = 2
efficiency_metric = "intensity"

[tool.raman-echo.system]
levels = 3
shift_target = 2
initial_populations = [0.5, 0.5]

[tool.raman-echo.system.gamma]
21 = 2.0
31 = 25.0

[tool.raman-echo.system.big_gamma]
31 = 0.5
"""


class TestParsePair:
    def test_pair(self):
        assert parse_pair("31") == (3, 1)
        assert parse_pair(" 21 ") == (2, 1)

    @pytest.mark.parametrize("key", ["3", "311", "a1", ""])
    def test_rejects(self, key):
        with pytest.raises(ValueError):
            parse_pair(key)


class TestSystemDocument:
    def test_shipped_three_level(self, sequences_dir):
        """fig1a.json is the default lambda system"""
        document = SystemDocument.load(sequences_dir / "fig1a.json")
        assert document.to_system() == LevelSystem.three_level_default()
        assert document.to_ensemble() == EnsembleSpec()
        assert document.populations() == (0.5, 0.5)

    def test_shipped_four_level(self, sequences_dir):
        document = SystemDocument.load(sequences_dir / "fig2.json")
        assert document.to_system() == LevelSystem.four_level_default()

    def test_round_trip(self, four_level):
        document = SystemDocument.from_system(four_level, populations=(0.5, 0.5))
        again = SystemDocument.model_validate_json(document.to_json())
        assert again.to_system() == four_level
        assert again.populations() == (0.5, 0.5)

    def test_default_transitions(self):
        system = SystemDocument(levels=4).to_system()
        assert [t.name.value for t in system.transitions] == ["probe", "coupling", "aux"]

    def test_gamma_key_order_is_irrelevant(self):
        system = SystemDocument(gamma={"12": 3.0}).to_system()
        assert system.dephasing(2, 1) == 3.0

    def test_bad_rate_key(self):
        with pytest.raises(ValueError):
            SystemDocument(gamma={"x1": 1.0})

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "system.json"
        path.write_text('{"levels": 3, "colour": "blue"}')
        with pytest.raises(ConfigurationError):
            SystemDocument.load(path)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "system.json"
        path.write_text("{levels: 3")
        with pytest.raises(ConfigurationError, match="invalid JSON"):
            SystemDocument.load(path)

    def test_top_level_must_be_object(self, tmp_path):
        path = tmp_path / "system.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigurationError, match="object"):
            SystemDocument.load(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            SystemDocument.load(tmp_path / "nope.json")

    def test_from_toml(self, tmp_path):
        path = tmp_path / "pyproject.toml"
        path.write_text(SETTINGS_TOML)
        system = SystemDocument.load(path).to_system()
        assert system.dephasing(2, 1) == 2.0
        assert system.population_rate(3, 1) == 0.5
        assert system.population_rate(3, 2) == 0.0


class TestRunSettings:
    def test_defaults(self):
        settings = RunSettings()
        assert settings.integrator == Integrator.EXACT
        assert settings.dt_us == 0.005
        assert settings.sample_interval_us == 0.1
        assert settings.efficiency_metric == EfficiencyMetric.AMPLITUDE
        assert settings.threads is None

    def test_from_toml(self, tmp_path):
        path = tmp_path / "pyproject.toml"
        path.write_text(SETTINGS_TOML)
        settings = RunSettings.from_toml(path)
        assert settings.integrator == Integrator.RK4
        assert settings.dt_us == 0.002
        assert settings.threads == 2
        assert settings.efficiency_metric == EfficiencyMetric.INTENSITY

    def test_invalid_values(self, tmp_path):
        path = tmp_path / "pyproject.toml"
        path.write_text('[tool.raman-echo]\ndt_us = -1\n')
        with pytest.raises(ConfigurationError):
            RunSettings.from_toml(path)

    def test_malformed_toml(self, tmp_path):
        path = tmp_path / "pyproject.toml"
        path.write_text("[tool.raman-echo\n")
        with pytest.raises(ConfigurationError):
            RunSettings.from_toml(path)

    def test_merged_ignores_none(self):
        settings = RunSettings(threads=4).merged(threads=None, dt_us=0.001, integrator="rk4")
        assert settings.threads == 4
        assert settings.dt_us == 0.001
        assert settings.integrator == Integrator.RK4

    def test_merged_validates(self):
        with pytest.raises(ValueError):
            RunSettings().merged(sample_interval_us=0.0)


class TestLoadSettings:
    def test_defaults_without_pyproject(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert load_settings() == RunSettings()

    def test_cwd_pyproject_is_not_read(self, tmp_path, monkeypatch):
        """Only an explicit path feeds settings; a stray pyproject.toml does not"""
        (tmp_path / "pyproject.toml").write_text(SETTINGS_TOML)
        monkeypatch.chdir(tmp_path)
        assert load_settings() == RunSettings()

    def test_reads_explicit_path(self, tmp_path):
        path = tmp_path / "settings.toml"
        path.write_text(SETTINGS_TOML)
        assert load_settings(path).integrator == Integrator.RK4

    def test_explicit_path_must_exist(self, tmp_path):
        with pytest.raises(ConfigurationError, match="not found"):
            load_settings(tmp_path / "missing.toml")

    def test_repository_pyproject(self):
        """The shipped pyproject carries the default settings"""
        path = Path(__file__).resolve().parents[1] / "pyproject.toml"
        assert RunSettings.from_toml(path) == RunSettings()
