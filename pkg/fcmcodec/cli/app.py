import sys
import logging
import argparse
from typing import List, Optional

from ..backend.errors import FcmError, InvalidConfig, IoError, UsageError
from .codec_commands import run_decode, run_encode, run_inspect
from .eval_commands import run_bdrate, run_complexity, run_sweep
from .settings import load_settings

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_PIPELINE = 3

LOG_FORMAT = '%(asctime)s : %(levelname)s : %(message)s'

# flag destinations that override config keys of the same name
CONFIG_FLAGS = ('reducer', 'gain_index', 'gain_table', 'temporal', 'bitdepth', 'bypass_quantization',
                'inner_codec', 'quality', 'gop_hint', 'low_delay', 'lossless', 'all_intra', 'threads', 'log_level')


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f'{self.prog}: error: {message}\n')


def _common_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument('--config', help='YAML file of key: value settings')
    common.add_argument('--threads', type=int, help='worker threads for per-frame stages')
    common.add_argument('--log-level', dest='log_level', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    return common


def _codec_flags(parser: ArgumentParser):
    group = parser.add_argument_group('codec settings (override --config)')
    group.add_argument('--reducer', help='S2D or AVGPOOL')
    group.add_argument('--gain-index', dest='gain_index', type=int)
    group.add_argument('--gain-table', dest='gain_table', help='YAML file of index: m0,m1,... lines')
    group.add_argument('--temporal', action=argparse.BooleanOptionalAction, default=None)
    group.add_argument('--bitdepth', type=int)
    group.add_argument('--bypass-quantization', dest='bypass_quantization',
                       action=argparse.BooleanOptionalAction, default=None)
    group.add_argument('--inner-codec', dest='inner_codec', help='RAW, LOSSLESS or EXTERNAL')
    group.add_argument('--quality', type=int)
    group.add_argument('--gop-hint', dest='gop_hint', type=int)
    group.add_argument('--low-delay', dest='low_delay', action=argparse.BooleanOptionalAction, default=None)
    group.add_argument('--all-intra', dest='all_intra', action=argparse.BooleanOptionalAction, default=None)
    group.add_argument('--lossless', action=argparse.BooleanOptionalAction, default=None,
                       help='external encoder in lossless mode')


def build_parser() -> ArgumentParser:
    common = _common_parser()
    parser = ArgumentParser(prog='fcmcodec', description='Feature coding for split inference')
    commands = parser.add_subparsers(dest='command', metavar='command', required=True)

    encode = commands.add_parser('encode', parents=[common], help='code an FTS1 feature file into FCMB')
    encode.add_argument('--input', required=True, help='.fts feature file')
    encode.add_argument('--output', required=True, help='.fcmb stream to write')
    encode.add_argument('--report', help='also decode and write the stage time report here')
    _codec_flags(encode)
    encode.set_defaults(handler=run_encode)

    decode = commands.add_parser('decode', parents=[common], help='decode an FCMB stream into FTS1')
    decode.add_argument('--input', required=True, help='.fcmb stream')
    decode.add_argument('--output', help='.fts feature file to write')
    decode.add_argument('--gain-table', dest='gain_table')
    decode.add_argument('--inspect-only', dest='inspect_only', action='store_true',
                        help='print the header and write nothing')
    decode.set_defaults(handler=run_decode)

    inspect = commands.add_parser('inspect', parents=[common], help='print the header of an FCMB stream')
    inspect.add_argument('--input', required=True)
    inspect.set_defaults(handler=run_inspect)

    sweep = commands.add_parser('sweep', parents=[common], help='rate-quality sweep over one setting')
    sweep.add_argument('--input', required=True, help='.fts feature file')
    sweep.add_argument('--ladder', required=True, help='comma-separated values, at least 4')
    sweep.add_argument('--ladder-key', dest='ladder_key', default='quality',
                       help='setting varied by the ladder (default: quality)')
    sweep.add_argument('--config-id', dest='config_id', default='fcm')
    sweep.add_argument('--output', help='CSV file; stdout when omitted')
    _codec_flags(sweep)
    sweep.set_defaults(handler=run_sweep)

    bdrate = commands.add_parser('bdrate', parents=[common], help='BD-rate between two sweep CSV files')
    bdrate.add_argument('--reference', required=True)
    bdrate.add_argument('--test', required=True)
    bdrate.add_argument('--reference-id', dest='reference_id')
    bdrate.add_argument('--test-id', dest='test_id')
    bdrate.add_argument('--method', choices=['auto', 'polynomial', 'pchip'], default='auto')
    bdrate.add_argument('--quality', action='store_true', help='also print BD-quality')
    bdrate.set_defaults(handler=run_bdrate)

    complexity = commands.add_parser('complexity', parents=[common],
                                     help='codec time against split network time')
    complexity.add_argument('--encoder-time', dest='encoder_time', type=float)
    complexity.add_argument('--decoder-time', dest='decoder_time', type=float)
    complexity.add_argument('--nn1-time', dest='nn1_time', type=float, help='NN part 1 seconds')
    complexity.add_argument('--nn2-time', dest='nn2_time', type=float, help='NN part 2 seconds')
    complexity.add_argument('--report', action='append',
                            help='stage time report written by encode --report; repeat to sum several runs')
    complexity.set_defaults(handler=run_complexity)
    return parser


def _configure_logging(level: str):
    logging.basicConfig(stream=sys.stderr, format=LOG_FORMAT, level=getattr(logging, str(level).upper(), logging.INFO))


def _report(error: Exception):
    sys.stderr.write(f'fcmcodec: error: {error}\n')


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    try:
        overrides = {key: getattr(args, key, None) for key in CONFIG_FLAGS}
        settings = load_settings(args.config, overrides)
        _configure_logging(settings.get('log_level', 'INFO'))
        return args.handler(args, settings)
    except (UsageError, InvalidConfig) as e:
        parser.print_usage(sys.stderr)
        _report(e)
        return EXIT_USAGE
    except (IoError, OSError) as e:
        _report(e)
        return EXIT_IO
    except FcmError as e:
        _report(e)
        return EXIT_PIPELINE
