import sys
from typing import Any, Dict

import yaml

from ..backend.errors import FormatError, IoError


def dump(data: Dict[str, Any]) -> str:
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=None)


def emit(data: Dict[str, Any]):
    """Results go to stdout as one YAML document; logs stay on stderr."""
    sys.stdout.write(dump(data))
    sys.stdout.flush()


def write_yaml(path, data: Dict[str, Any]):
    try:
        with open(path, 'w', encoding='utf-8') as f:
            f.write(dump(data))
    except OSError as e:
        raise IoError(f'cannot write {path}: {e.strerror or e}') from e


def read_yaml(path) -> Dict[str, Any]:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise IoError(f'cannot read {path}: {e.strerror or e}') from e
    except yaml.YAMLError as e:
        raise FormatError(f'{path} is not valid YAML: {e}') from e
    if not isinstance(data, dict):
        raise FormatError(f'{path} must hold a YAML mapping')
    return data
