import os
import time
import logging
from typing import Any, List, Optional, Sequence, Tuple, Union

import pandas as pd
from pydantic import ValidationError

from ..errors import FormatError, InvalidConfig, IoError, UsageError
from ..model import DecodeConfig, EncodeConfig, FeatureTensorSet, InnerConfig, RdCurve, RdPoint
from ..models.metrics import bitrate_kbps, quality_metric
from .pipeline_service import PipelineService

CSV_COLUMNS = ['config_id', 'qp', 'bitrate_kbps', 'quality_db', 'bytes', 'enc_time_s', 'dec_time_s']
CSV_COMMENT = '# quality_db is feature PSNR, a proxy for task accuracy; qp holds the swept setting'
MIN_LADDER = 4


def apply_setting(cfg: EncodeConfig, key: str, value: Any) -> EncodeConfig:
    """Returns ``cfg`` with one setting replaced; ``key`` may name an inner codec field."""
    try:
        if key in EncodeConfig.model_fields and key not in ('inner', 'external'):
            return EncodeConfig.model_validate({**cfg.model_dump(), key: value})
        if key in InnerConfig.model_fields:
            inner = InnerConfig.model_validate({**cfg.inner.model_dump(), key: value})
            return cfg.model_copy(update={'inner': inner})
    except ValidationError as e:
        raise InvalidConfig(f'{key}={value!r} is not a valid setting: {e.errors()[0]["msg"]}') from e
    raise UsageError(f'cannot sweep over unknown setting {key!r}')


class EvaluationService:
    def __init__(self, pipeline: PipelineService):
        self.pipeline = pipeline

    def run_point(self, fts: FeatureTensorSet, cfg: EncodeConfig,
                  dec_cfg: Optional[DecodeConfig] = None) -> dict:
        dec_cfg = dec_cfg or DecodeConfig(external=cfg.external)
        start = time.perf_counter()
        stream = self.pipeline.encode(fts, cfg)
        enc_time = time.perf_counter() - start
        start = time.perf_counter()
        reconstructed = self.pipeline.decode(stream, dec_cfg)
        dec_time = time.perf_counter() - start
        score = quality_metric(fts, reconstructed)
        return {
            'bitrate_kbps': bitrate_kbps(len(stream), fts.frame_rate, fts.frame_count),
            'quality_db': score.psnr_db,
            'bytes': len(stream),
            'enc_time_s': enc_time,
            'dec_time_s': dec_time,
        }

    def sweep(self,
              fts: FeatureTensorSet,
              base_cfg: EncodeConfig,
              values: Sequence[Any],
              ladder_key: str = 'quality',
              config_id: str = 'fcm',
              dec_cfg: Optional[DecodeConfig] = None) -> Tuple[RdCurve, pd.DataFrame]:
        """Encodes and decodes ``fts`` once per ladder value; returns the curve and one row per point."""
        if len(values) < MIN_LADDER:
            raise UsageError(f'a sweep needs at least {MIN_LADDER} ladder values, got {len(values)}')
        rows = []
        for value in values:
            cfg = apply_setting(base_cfg, ladder_key, value)
            row = {'config_id': config_id, 'qp': getattr(value, 'name', value)}
            row.update(self.run_point(fts, cfg, dec_cfg))
            logging.info('%s %s=%s: %.3f kbps, %.3f dB', config_id, ladder_key, value,
                         row['bitrate_kbps'], row['quality_db'])
            rows.append(row)
        table = pd.DataFrame(rows, columns=CSV_COLUMNS)
        return curve_from_table(table), table

    @staticmethod
    def write_csv(table: pd.DataFrame, path: Union[str, os.PathLike, None] = None) -> str:
        """Writes the sweep table (to ``path`` if given) and returns the CSV text."""
        text = CSV_COMMENT + '\n' + table.to_csv(index=False, columns=CSV_COLUMNS, lineterminator='\n')
        if path is not None:
            try:
                with open(path, 'w', encoding='utf-8', newline='') as f:
                    f.write(text)
            except OSError as e:
                raise IoError(f'cannot write {path}: {e}') from e
            logging.info('Saved %d rate points to %s', len(table), path)
        return text

    @staticmethod
    def read_curve(path: Union[str, os.PathLike], config_id: Optional[str] = None) -> RdCurve:
        try:
            table = pd.read_csv(path, comment='#')
        except OSError as e:
            raise IoError(f'cannot read {path}: {e}') from e
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise FormatError(f'{path} is not a rate-quality CSV: {e}') from e
        missing = {'bitrate_kbps', 'quality_db'} - set(table.columns)
        if missing:
            raise FormatError(f'{path} lacks columns {sorted(missing)}')
        if config_id is not None:
            if 'config_id' not in table.columns:
                raise FormatError(f'{path} has no config_id column')
            table = table[table['config_id'].astype(str) == config_id]
        elif 'config_id' in table.columns and table['config_id'].nunique() > 1:
            raise UsageError(f'{path} holds several configurations, choose one of '
                             f'{sorted(table["config_id"].astype(str).unique())}')
        return curve_from_table(table)


def curve_from_table(table: pd.DataFrame) -> RdCurve:
    points: List[RdPoint] = [RdPoint(bitrate_kbps=float(rate), quality=float(quality))
                             for rate, quality in zip(table['bitrate_kbps'], table['quality_db'])]
    return RdCurve(points=points)
