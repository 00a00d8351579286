"""
Configuration Parser for the graetzmodes package

This module handles parsing of configuration files that include:
- Domain geometry, interface coordinates and layers
- Boundary kind and lateral source
- Optional solver settings overrides
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, Union

import yaml

from graetzmodes.config import DEFAULT_SETTINGS, SolverSettings
from graetzmodes.domain import (
    BoundaryKind,
    BoundarySpec,
    DomainSpec,
    Geometry,
    LayerSpec,
    SourceKind,
    SourceSpec,
    as_exact,
    validate,
    validate_boundary,
)
from graetzmodes.errors import ConfigError
from graetzmodes.logging import get_logger
from graetzmodes.utils import get_file_extension

logger = get_logger(__name__)

TOP_LEVEL_KEYS = {'geometry', 'interfaces', 'layers', 'boundary', 'settings'}
LAYER_KEYS = {'conductivity', 'velocity'}
BOUNDARY_KEYS = {'kind', 'source'}
SOURCE_KEYS = {'kind', 'amplitude', 'z0', 'half_width'}


@dataclass
class Config:
    """Main configuration structure"""
    spec: DomainSpec
    boundary: BoundarySpec
    settings: SolverSettings


def _reject_unknown(data: Dict[str, Any], allowed: Iterable[str], where: str) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        logger.error(f"Unknown configuration keys in {where}: {', '.join(unknown)}")
        raise ConfigError(f"Unknown configuration keys in {where}: {', '.join(unknown)}")


def _require_mapping(value: Any, where: str) -> Dict[str, Any]:
    if not isinstance(value, dict):
        raise ConfigError(f"{where} must be a mapping, got {type(value).__name__}")
    return value


def _choice(enum_type, value: Any, where: str):
    try:
        return enum_type(str(value).lower())
    except ValueError:
        choices = ', '.join(member.value for member in enum_type)
        raise ConfigError(f"{where} must be one of {choices}, got {value!r}")


class ConfigParser:
    """Parser for configuration files supporting YAML and JSON"""

    @staticmethod
    def load_config(config_path: Union[str, Path]) -> Config:
        """
        Load configuration from YAML or JSON file

        Args:
            config_path: Path to the configuration file

        Returns:
            Config object

        Raises:
            ConfigError: If the file is missing, unreadable or describes an invalid problem
        """
        config_path = Path(config_path)

        if not config_path.exists():
            raise ConfigError(f"Configuration file not found: {config_path}")

        # Determine file format and load
        extension = get_file_extension(config_path)
        with open(config_path, 'r', encoding='utf-8') as f:
            if extension in ['.yml', '.yaml']:
                try:
                    config_data = yaml.safe_load(f)
                except yaml.YAMLError as e:
                    raise ConfigError(f"Invalid YAML format in {config_path}: {e}")
            elif extension == '.json':
                try:
                    config_data = json.load(f)
                except json.JSONDecodeError as e:
                    raise ConfigError(f"Invalid JSON format in {config_path}: {e}")
            else:
                raise ConfigError(
                    f"Unsupported file format: {config_path.suffix}. Use .yml, .yaml, or .json")

        logger.info(f"Loaded configuration from {config_path}")
        return ConfigParser.parse(config_data)

    @staticmethod
    def parse(config_data: Any) -> Config:
        """Parse configuration data into a Config object"""
        config_data = _require_mapping(config_data, 'configuration')
        _reject_unknown(config_data, TOP_LEVEL_KEYS, 'configuration')

        missing = [key for key in ('geometry', 'interfaces', 'layers') if key not in config_data]
        if missing:
            logger.error(f"Missing required configuration fields: {', '.join(missing)}")
            raise ConfigError(f"Missing required configuration fields: {', '.join(missing)}")

        geometry = _choice(Geometry, config_data['geometry'], 'geometry')
        interfaces = config_data['interfaces']
        if not isinstance(interfaces, list):
            raise ConfigError("interfaces must be a list of coordinates")

        layers = []
        for j, layer_data in enumerate(config_data['layers'] or []):
            layer_data = _require_mapping(layer_data, f'layers[{j}]')
            _reject_unknown(layer_data, LAYER_KEYS, f'layers[{j}]')
            if 'conductivity' not in layer_data:
                raise ConfigError(f"layers[{j}] needs a conductivity")
            velocity = layer_data.get('velocity') or []
            if not isinstance(velocity, list):
                raise ConfigError(f"layers[{j}].velocity must be a list of coefficients")
            layers.append(LayerSpec.create(layer_data['conductivity'], velocity))

        spec = validate(DomainSpec(geometry, tuple(as_exact(x) for x in interfaces), tuple(layers)))
        boundary = ConfigParser._parse_boundary(config_data.get('boundary') or {})

        overrides = _require_mapping(config_data.get('settings') or {}, 'settings')
        try:
            settings = DEFAULT_SETTINGS.with_overrides(**overrides)
        except TypeError as e:
            raise ConfigError(f"Invalid solver settings: {e}")
        return Config(spec=spec, boundary=boundary, settings=settings)

    @staticmethod
    def _parse_boundary(boundary_data: Any) -> BoundarySpec:
        boundary_data = _require_mapping(boundary_data, 'boundary')
        _reject_unknown(boundary_data, BOUNDARY_KEYS, 'boundary')
        kind = _choice(BoundaryKind, boundary_data.get('kind', 'neumann'), 'boundary.kind')

        source_data = _require_mapping(boundary_data.get('source') or {'kind': 'zero'}, 'boundary.source')
        _reject_unknown(source_data, SOURCE_KEYS, 'boundary.source')
        source_kind = _choice(SourceKind, source_data.get('kind', 'raised_cosine'), 'boundary.source.kind')
        if source_kind == SourceKind.ZERO:
            source = SourceSpec.zero()
        else:
            source = SourceSpec.raised_cosine(
                as_exact(source_data.get('amplitude', 1)),
                as_exact(source_data.get('z0', 0)),
                as_exact(source_data.get('half_width', '1/2')),
            )
        return validate_boundary(BoundarySpec(kind, source))

    @staticmethod
    def create_sample_config(output_path: Union[str, Path], format: str = 'yaml') -> None:
        """
        Create a sample configuration file (heated pipe, Pe = 1)

        Args:
            output_path: Path where to save the sample config
            format: 'yaml' or 'json'
        """
        sample_config = {
            "geometry": "cylindrical",
            "interfaces": [1, 2],
            "layers": [
                {"conductivity": 1, "velocity": [1, 0, -1]},
                {"conductivity": 1, "velocity": []},
            ],
            "boundary": {
                "kind": "neumann",
                "source": {
                    "kind": "raised_cosine",
                    "amplitude": 1,
                    "z0": "1/2",
                    "half_width": "1/2",
                },
            },
            "settings": {
                "order": 160,
                "mode_count": 8,
            },
        }

        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)

        with open(output_path, 'w', encoding='utf-8') as f:
            if format.lower() in ('yaml', 'yml'):
                f.write("# Heated pipe: Poiseuille flow for r < 1 inside a solid wall up to R = 2\n")
                yaml.dump(sample_config, f, default_flow_style=False,
                          indent=2, sort_keys=False)
            elif format.lower() == 'json':
                json.dump(sample_config, f, indent=2)
            else:
                raise ConfigError(f"Unsupported sample format: {format}. Use yaml or json")

        logger.info(f"Sample configuration created: {output_path}")
