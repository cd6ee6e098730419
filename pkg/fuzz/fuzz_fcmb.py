"""Atheris harness for the FCMB demuxer and the FTS1 parser.

Atheris is a development tool and is not listed in requirements.txt:
    pip install atheris
    python fuzz/fuzz_fcmb.py -max_total_time=600
"""
import sys

import atheris

with atheris.instrument_imports():
    from fcmcodec.backend.converters.bitstream_converter import demux
    from fcmcodec.backend.errors import BitstreamError, FormatError, ShapeError
    from fcmcodec.backend.repositories.fts_repo import parse_fts


def test_one_input(data: bytes):
    try:
        demux(data)
    except BitstreamError:
        pass
    try:
        parse_fts(data)
    except (FormatError, ShapeError):
        pass


if __name__ == '__main__':
    atheris.Setup(sys.argv, test_one_input)
    atheris.Fuzz()
