# tests/test_config_parser.py

import json
from fractions import Fraction

import pytest
import yaml

from graetzmodes.config import DEFAULT_SETTINGS, SolverSettings
from graetzmodes.config_parser import ConfigParser
from graetzmodes.domain import BoundaryKind, Geometry, SourceKind
from graetzmodes.errors import ConfigError, DomainValidationError

HEATED_PIPE = {
    "geometry": "cylindrical",
    "interfaces": [1, 2],
    "layers": [
        {"conductivity": 1, "velocity": [1, 0, -1]},
        {"conductivity": 1},
    ],
    "boundary": {
        "kind": "neumann",
        "source": {"kind": "raised_cosine", "amplitude": 1, "z0": "1/2", "half_width": "1/2"},
    },
}


def _write_yaml(path, data):
    path.write_text(yaml.safe_dump(data), encoding='utf-8')
    return path


def test_load_yaml(tmp_path):
    config = ConfigParser.load_config(_write_yaml(tmp_path / "pipe.yml", HEATED_PIPE))
    assert config.spec.geometry == Geometry.CYLINDRICAL
    assert config.spec.interfaces == (1, 2)
    assert config.spec.layers[0].velocity == (1, 0, -1)
    assert config.boundary.kind == BoundaryKind.NEUMANN
    assert config.boundary.source.kind == SourceKind.RAISED_COSINE
    assert config.boundary.source.center == 0.5
    assert config.settings == DEFAULT_SETTINGS


def test_fractions_stay_exact():
    data = dict(HEATED_PIPE, interfaces=["1/2", 2])
    config = ConfigParser.parse(data)
    assert config.spec.interfaces[0] == Fraction(1, 2)
    assert isinstance(config.spec.interfaces[0], Fraction)


def test_load_json(tmp_path):
    path = tmp_path / "pipe.json"
    path.write_text(json.dumps(HEATED_PIPE), encoding='utf-8')
    assert ConfigParser.load_config(path).spec.compartment_count == 2


def test_settings_override():
    config = ConfigParser.parse(dict(HEATED_PIPE, settings={"order": 90, "mode_count": 4}))
    assert config.settings.order == 90
    assert config.settings.mode_count == 4
    assert config.settings.precision == DEFAULT_SETTINGS.precision


def test_boundary_defaults_to_neumann_without_source():
    data = {k: v for k, v in HEATED_PIPE.items() if k != 'boundary'}
    config = ConfigParser.parse(data)
    assert config.boundary.kind == BoundaryKind.NEUMANN
    assert config.boundary.source.is_zero


@pytest.mark.parametrize("data", [
    dict(HEATED_PIPE, colour="blue"),
    dict(HEATED_PIPE, layers=[{"conductivity": 1, "density": 2}, {"conductivity": 1}]),
    dict(HEATED_PIPE, boundary={"kind": "robin"}),
    dict(HEATED_PIPE, settings={"tolerance": 1}),
    dict(HEATED_PIPE, settings={"order": -1}),
    {k: v for k, v in HEATED_PIPE.items() if k != 'layers'},
    dict(HEATED_PIPE, interfaces="1, 2"),
    [1, 2],
])
def test_invalid_configurations(data):
    with pytest.raises(ConfigError):
        ConfigParser.parse(data)


def test_domain_violations_are_collected():
    data = dict(HEATED_PIPE, interfaces=[2, 1], layers=[{"conductivity": 0}, {"conductivity": 1}])
    with pytest.raises(DomainValidationError) as excinfo:
        ConfigParser.parse(data)
    assert 'NonIncreasingInterfaces' in excinfo.value.codes
    assert 'NonPositiveConductivity' in excinfo.value.codes


def test_missing_file_and_bad_suffix(tmp_path):
    with pytest.raises(ConfigError):
        ConfigParser.load_config(tmp_path / "missing.yml")
    path = tmp_path / "pipe.toml"
    path.write_text("geometry = 'planar'", encoding='utf-8')
    with pytest.raises(ConfigError):
        ConfigParser.load_config(path)


def test_invalid_yaml(tmp_path):
    path = tmp_path / "broken.yml"
    path.write_text("geometry: [planar\n", encoding='utf-8')
    with pytest.raises(ConfigError):
        ConfigParser.load_config(path)


@pytest.mark.parametrize("fmt, suffix", [("yaml", "yml"), ("json", "json")])
def test_sample_config_round_trip(tmp_path, fmt, suffix):
    path = tmp_path / f"sample.{suffix}"
    ConfigParser.create_sample_config(path, fmt)
    config = ConfigParser.load_config(path)
    assert config.spec.interfaces == (1, 2)
    assert config.settings.order == 160


def test_sample_config_rejects_unknown_format(tmp_path):
    with pytest.raises(ConfigError):
        ConfigParser.create_sample_config(tmp_path / "sample.txt", "txt")


def test_solver_settings_validation():
    with pytest.raises(ConfigError):
        SolverSettings(normalization='unit')
    with pytest.raises(ConfigError):
        SolverSettings(trust_estimate='guess')
    with pytest.raises(ConfigError):
        SolverSettings(order_step=0)
    with pytest.raises(ConfigError):
        DEFAULT_SETTINGS.with_overrides(colour='blue')
    assert DEFAULT_SETTINGS.with_overrides(order=None) == DEFAULT_SETTINGS
    assert DEFAULT_SETTINGS.as_dict()['order'] == 60
    assert DEFAULT_SETTINGS.trust_estimate == 'terms'
    assert DEFAULT_SETTINGS.max_order >= DEFAULT_SETTINGS.order
