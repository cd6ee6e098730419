import time
import logging
from argparse import Namespace
from typing import Any, Dict, Mapping

from ..backend.errors import FormatError, IoError, ShapeError, UsageError
from ..backend.model import FcmHeader, FeatureTensorSet, StageTimeReport
from ..backend.models.metrics import bitrate_kbps
from ..backend.repositories.fts_repo import load_fts, save_fts
from ..backend.services.pipeline_service import STAGES, PipelineService
from .settings import decode_config, encode_config, gain_repository
from .output import emit, write_yaml


def load_input(path) -> FeatureTensorSet:
    try:
        return load_fts(path)
    except (FormatError, ShapeError) as e:
        raise IoError(f'{path}: {e}') from e


def read_stream(path) -> bytes:
    try:
        with open(path, 'rb') as f:
            return f.read()
    except OSError as e:
        raise IoError(f'cannot read {path}: {e.strerror or e}') from e


def write_stream(path, stream: bytes):
    try:
        with open(path, 'wb') as f:
            f.write(stream)
    except OSError as e:
        raise IoError(f'cannot write {path}: {e.strerror or e}') from e


def pipeline_for(settings: Mapping[str, Any]) -> PipelineService:
    return PipelineService(gain_repo=gain_repository(settings), threads=int(settings.get('threads', 1)))


def header_summary(header: FcmHeader) -> Dict[str, Any]:
    return {
        'version': header.version,
        'reducer': header.reducer.name,
        'inner_codec': header.inner_codec.name,
        'temporal': header.temporal_flag,
        'original_frames': header.original_frame_count,
        'coded_frames': header.coded_frame_count,
        'frame_rate': header.frame_rate,
        'gain_index': header.gain_index,
        'layer_shapes': [list(shape) for shape in header.layer_shapes],
        'fused_shape': list(header.fused_shape),
        'grid': [header.grid_rows, header.grid_cols],
        'bitdepth': header.bitdepth,
        'quant_params': [[x_min, x_max] for x_min, x_max in header.quant_params],
        'quality': header.quality,
        'gop_hint': header.gop_hint,
        'low_delay': header.low_delay,
        'payload_bytes': header.payload_length,
    }


def run_encode(args: Namespace, settings: Mapping[str, Any]) -> int:
    fts = load_input(args.input)
    cfg = encode_config(settings)
    pipeline = pipeline_for(settings)

    timings: Dict[str, float] = {}
    start = time.perf_counter()
    stream = pipeline.encode(fts, cfg, timings)
    encode_total = time.perf_counter() - start
    write_stream(args.output, stream)

    result = {
        'output': str(args.output),
        'bytes': len(stream),
        'frames': fts.frame_count,
        'bitrate_kbps': bitrate_kbps(len(stream), fts.frame_rate, fts.frame_count),
        'stage_times_s': {name: timings[name] for name in STAGES if name in timings},
        'encode_total_s': encode_total,
    }
    if args.report:
        start = time.perf_counter()
        pipeline.decode(stream, decode_config(settings), timings)
        report = StageTimeReport(stages={name: timings.get(name, 0.0) for name in STAGES},
                                 encode_total=encode_total, decode_total=time.perf_counter() - start,
                                 stream_bytes=len(stream), frame_count=fts.frame_count)
        write_yaml(args.report, report.model_dump())
        result['report'] = str(args.report)
    emit(result)
    return 0


def run_decode(args: Namespace, settings: Mapping[str, Any]) -> int:
    stream = read_stream(args.input)
    pipeline = pipeline_for(settings)
    if args.inspect_only:
        emit(header_summary(pipeline.inspect(stream)))
        return 0
    if not args.output:
        raise UsageError('decode needs --output unless --inspect-only is given')

    fts = pipeline.decode(stream, decode_config(settings))
    save_fts(fts, args.output)
    emit({
        'output': str(args.output),
        'frames': fts.frame_count,
        'frame_rate': fts.frame_rate,
        'layer_shapes': [list(shape) for shape in fts.layer_shapes],
    })
    return 0


def run_inspect(args: Namespace, settings: Mapping[str, Any]) -> int:
    header = PipelineService.inspect(read_stream(args.input))
    logging.debug('Header of %s parsed', args.input)
    emit(header_summary(header))
    return 0
