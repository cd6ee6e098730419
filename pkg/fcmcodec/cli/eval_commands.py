import sys
from argparse import Namespace
from typing import Any, List, Mapping

from pydantic import ValidationError

from ..backend.errors import FormatError, IoError, UsageError
from ..backend.model import InnerCodecId, ReducerId, StageTimeReport
from ..backend.models.bjontegaard import bd_quality, bd_rate
from ..backend.models.metrics import complexity_ratios, overall_complexity
from ..backend.services.evaluation_service import MIN_LADDER, EvaluationService
from .codec_commands import load_input, pipeline_for
from .output import emit, read_yaml
from .settings import decode_config, encode_config, parse_enum

# config keys whose names differ from the InnerConfig field they set
_LADDER_FIELDS = {'inner_codec': 'codec'}


def parse_ladder(text: str, key: str) -> List[Any]:
    values: List[Any] = []
    for item in (part.strip() for part in text.split(',')):
        if not item:
            continue
        if key == 'reducer':
            values.append(parse_enum(ReducerId, item, key))
        elif key == 'inner_codec':
            values.append(parse_enum(InnerCodecId, item, key))
        else:
            try:
                values.append(int(item))
            except ValueError:
                raise UsageError(f'ladder value {item!r} is not an integer')
    if len(values) < MIN_LADDER:
        raise UsageError(f'--ladder needs at least {MIN_LADDER} values, got {len(values)}')
    return values


def run_sweep(args: Namespace, settings: Mapping[str, Any]) -> int:
    values = parse_ladder(args.ladder, args.ladder_key)
    fts = load_input(args.input)
    service = EvaluationService(pipeline_for(settings))
    _, table = service.sweep(fts, encode_config(settings), values,
                             ladder_key=_LADDER_FIELDS.get(args.ladder_key, args.ladder_key),
                             config_id=args.config_id, dec_cfg=decode_config(settings))
    text = service.write_csv(table, args.output)
    if args.output is None:
        sys.stdout.write(text)
    else:
        emit({'output': str(args.output), 'points': len(table)})
    return 0


def _read_curve(path, config_id):
    try:
        return EvaluationService.read_curve(path, config_id)
    except FormatError as e:
        raise IoError(str(e)) from e


def run_bdrate(args: Namespace, settings: Mapping[str, Any]) -> int:
    reference = _read_curve(args.reference, args.reference_id)
    test = _read_curve(args.test, args.test_id)
    result = bd_rate(reference, test, method=args.method)
    lines = [f'BD-rate: {result.percent:.2f}% (fit: {result.fit})']
    if args.quality:
        delta = bd_quality(reference, test, method=args.method)
        lines.append(f'BD-quality: {delta.percent:.4f} dB (fit: {delta.fit})')
    sys.stdout.write('\n'.join(lines) + '\n')
    return 0


def _verdict(satisfied: bool) -> str:
    return 'satisfied' if satisfied else 'NOT satisfied'


def _read_report(path) -> StageTimeReport:
    try:
        return StageTimeReport.model_validate(read_yaml(path))
    except (FormatError, ValidationError) as e:
        raise IoError(f'{path} is not a stage time report: {e}') from e


def run_complexity(args: Namespace, settings: Mapping[str, Any]) -> int:
    reports = [_read_report(path) for path in args.report or []]
    if len(reports) > 1 and (args.encoder_time is not None or args.decoder_time is not None):
        raise UsageError('--encoder-time and --decoder-time cannot be combined with several --report files')
    encoder_time, decoder_time = args.encoder_time, args.decoder_time
    if len(reports) == 1:
        encoder_time = reports[0].encode_total if encoder_time is None else encoder_time
        decoder_time = reports[0].decode_total if decoder_time is None else decoder_time
    needed = [('--nn1-time', args.nn1_time), ('--nn2-time', args.nn2_time)]
    if len(reports) < 2:
        needed = [('--encoder-time', encoder_time), ('--decoder-time', decoder_time)] + needed
    missing = [flag for flag, value in needed if value is None]
    if missing:
        raise UsageError(f'complexity needs {", ".join(missing)} (or --report for the codec times)')

    if len(reports) > 1:
        # network times are per report, summed like the codec times
        ratios = overall_complexity([complexity_ratios(report.encode_total, report.decode_total,
                                                       args.nn1_time, args.nn2_time) for report in reports])
    else:
        ratios = complexity_ratios(encoder_time, decoder_time, args.nn1_time, args.nn2_time)
    emit({
        'reports': len(reports),
        'fcm_encoder_time_s': ratios.fcm_encoder_time,
        'fcm_decoder_time_s': ratios.fcm_decoder_time,
        'nn_part1_time_s': ratios.nn_part1_time,
        'nn_part2_time_s': ratios.nn_part2_time,
        'encoder_ratio': round(ratios.encoder_ratio, 4),
        'encoder_condition': 'fcm_encoder_time < nn_part2_time',
        'encoder_inequality': _verdict(ratios.encoder_satisfied),
        'decoder_ratio': round(ratios.decoder_ratio, 4),
        'decoder_condition': 'fcm_decoder_time < nn_part1_time',
        'decoder_inequality': _verdict(ratios.decoder_satisfied),
    })
    return 0
