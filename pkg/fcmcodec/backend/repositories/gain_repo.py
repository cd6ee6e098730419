import os
import logging
from typing import Dict, List, Optional, Union

import yaml
from yaml import YAMLError

from ..errors import FormatError, GainLengthError, IoError, UnknownGainIndex
from ..model import GainTable, GainVector


def _parse_multipliers(index, value) -> List[float]:
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, str):
        items = [item.strip() for item in value.split(',') if item.strip()]
    elif isinstance(value, list):
        items = value
    else:
        raise FormatError(f'gain table entry {index!r} must be a comma-separated list of multipliers')
    try:
        return [float(item) for item in items]
    except (TypeError, ValueError):
        raise FormatError(f'gain table entry {index!r} holds a non-numeric multiplier')


class GainTableRepository:
    """Gain vectors indexed by quality level, stored as ``index: m0,m1,...`` lines."""

    def __init__(self,
                 path: Optional[Union[str, os.PathLike]] = None,
                 table: Optional[GainTable] = None):
        self.path = path
        self.table = table

    def load(self) -> GainTable:
        if self.table is not None:
            return self.table
        if self.path is None:
            self.table = GainTable()
            return self.table
        try:
            with open(self.path, 'r', encoding='utf-8') as f:
                raw = yaml.safe_load(f) or {}
        except OSError as e:
            raise IoError(f'cannot read gain table {self.path}: {e}') from e
        except YAMLError as e:
            raise FormatError(f'gain table {self.path} is not a valid index: multipliers mapping: {e}') from e
        if not isinstance(raw, dict):
            raise FormatError(f'gain table {self.path} must map indices to multipliers')

        vectors: Dict[int, List[float]] = {}
        for index, value in raw.items():
            try:
                key = int(index)
            except (TypeError, ValueError):
                raise FormatError(f'gain table index {index!r} is not an integer')
            vectors[key] = _parse_multipliers(index, value)
        self.table = GainTable(vectors=vectors)
        logging.info('Loaded %d gain vectors from %s', len(vectors), self.path)
        return self.table

    def get_vector(self, index: int, channels: int) -> GainVector:
        table = self.load()
        if index in table.vectors:
            vector = GainVector(index=index, multipliers=table.vectors[index])
            if len(vector.multipliers) != channels:
                raise GainLengthError(f'gain vector {index} has {len(vector.multipliers)} multipliers, '
                                      f'fused tensor has {channels} channels')
            return vector
        if index == 0:
            return GainVector.unit(channels)
        raise UnknownGainIndex(f'gain index {index} is not defined in the gain table')
