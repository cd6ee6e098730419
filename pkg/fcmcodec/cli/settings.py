import os
import logging
from typing import Any, Dict, Mapping, Optional, Union

import yaml
from pydantic import ValidationError
from yaml import YAMLError

from .. import config as package_config
from ..backend.errors import InvalidConfig, IoError
from ..backend.model import (DecodeConfig, EncodeConfig, ExternalCommands, InnerCodecId, InnerConfig,
                             ReducerId)
from ..backend.repositories.gain_repo import GainTableRepository

ENV_EXTERNAL_ENCODE = 'FCM_EXTERNAL_CODEC'
ENV_EXTERNAL_DECODE = 'FCM_EXTERNAL_DECODER'

KNOWN_KEYS = ('reducer', 'gain_index', 'gain_table', 'temporal', 'bitdepth', 'bypass_quantization',
              'inner_codec', 'quality', 'gop_hint', 'low_delay', 'lossless', 'all_intra', 'external_encode',
              'external_decode', 'threads', 'log_level')


def read_config_file(path: Union[str, os.PathLike]) -> Dict[str, Any]:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            raw = yaml.safe_load(f) or {}
    except OSError as e:
        raise IoError(f'cannot read config {path}: {e}') from e
    except YAMLError as e:
        raise InvalidConfig(f'config {path} is not valid YAML: {e}') from e
    if not isinstance(raw, dict):
        raise InvalidConfig(f'config {path} must be a mapping of key: value pairs')
    for key in raw:
        if key not in KNOWN_KEYS:
            logging.warning('Ignoring unknown config key %r in %s', key, path)
    return {key: value for key, value in raw.items() if key in KNOWN_KEYS}


def load_settings(config_path: Optional[Union[str, os.PathLike]] = None,
                  overrides: Optional[Mapping[str, Any]] = None,
                  environ: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
    """Package defaults < config file < environment < command line flags."""
    settings = {key: value for key, value in package_config.items() if key in KNOWN_KEYS}
    if config_path is not None:
        settings.update(read_config_file(config_path))
    environ = os.environ if environ is None else environ
    if environ.get(ENV_EXTERNAL_ENCODE):
        settings['external_encode'] = environ[ENV_EXTERNAL_ENCODE]
    if environ.get(ENV_EXTERNAL_DECODE):
        settings['external_decode'] = environ[ENV_EXTERNAL_DECODE]
    for key, value in (overrides or {}).items():
        if value is not None:
            settings[key] = value
    return settings


def parse_enum(enum_cls, value, key: str):
    if isinstance(value, enum_cls):
        return value
    try:
        if isinstance(value, str) and not value.isdigit():
            return enum_cls[value.strip().upper()]
        return enum_cls(int(value))
    except (KeyError, ValueError):
        names = ', '.join(member.name for member in enum_cls)
        raise InvalidConfig(f'{key} must be one of {names}, got {value!r}')


def external_commands(settings: Mapping[str, Any]) -> ExternalCommands:
    return ExternalCommands(encode=settings.get('external_encode'), decode=settings.get('external_decode'))


def encode_config(settings: Mapping[str, Any]) -> EncodeConfig:
    try:
        inner = InnerConfig(codec=parse_enum(InnerCodecId, settings.get('inner_codec', 'LOSSLESS'), 'inner_codec'),
                            quality=settings.get('quality', 32),
                            gop_hint=settings.get('gop_hint', 8),
                            low_delay=settings.get('low_delay', True),
                            lossless=settings.get('lossless', False))
        return EncodeConfig(reducer=parse_enum(ReducerId, settings.get('reducer', 'S2D'), 'reducer'),
                            gain_index=settings.get('gain_index', 0),
                            temporal=settings.get('temporal', False),
                            bitdepth=settings.get('bitdepth', 10),
                            bypass_quantization=settings.get('bypass_quantization', False),
                            all_intra=settings.get('all_intra', False),
                            inner=inner,
                            external=external_commands(settings))
    except ValidationError as e:
        error = e.errors()[0]
        field = '.'.join(str(part) for part in error['loc'])
        raise InvalidConfig(f'invalid setting {field}: {error["msg"]}') from e


def decode_config(settings: Mapping[str, Any]) -> DecodeConfig:
    return DecodeConfig(external=external_commands(settings))


def gain_repository(settings: Mapping[str, Any]) -> GainTableRepository:
    return GainTableRepository(path=settings.get('gain_table'))
