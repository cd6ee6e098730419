"""FCMB v1 container: side-channel header followed by the inner-codec payload.

All fields are little-endian. For L layers and F coded frames the header is
53 + 10*L + 8*F bytes; see docs/bitstream_format.md for the field table.
"""
import math
import struct
from typing import List, Tuple

from pydantic import ValidationError

from ..errors import BadMagic, ConsistencyError, FcmError, Truncated, UnsupportedVersion
from ..model import FcmHeader, InnerCodecId, ReducerId, Shape, check_pyramid
from ..models.conversion import grid_for_channels
from ..models.reduction import REDUCERS

FCMB_MAGIC = b'FCMB'
FCMB_VERSION = 1

_PREAMBLE = struct.Struct('<4sHBBBIfHH')   # magic .. layer count, 21 bytes
_LAYER = struct.Struct('<HII')
_FUSED = struct.Struct('<IIIHHB')          # fused c/h/w, grid rows/cols, bitdepth
_QPARAMS = struct.Struct('<ff')
_INNER = struct.Struct('<iHBQ')            # quality, gop hint, low delay, payload length


def fixed_header_size(layer_count: int) -> int:
    return _PREAMBLE.size + layer_count * _LAYER.size + _FUSED.size + _INNER.size


class _StreamReader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def unpack(self, fmt: struct.Struct, what: str) -> tuple:
        if len(self.data) - self.offset < fmt.size:
            raise Truncated(f'stream ends inside the {what}', offset=len(self.data))
        values = fmt.unpack_from(self.data, self.offset)
        self.offset += fmt.size
        return values


def _check_consistency(header: FcmHeader) -> None:
    if header.reducer not in REDUCERS:
        raise ConsistencyError(f'no reducer registered for id {int(header.reducer)}')
    try:
        check_pyramid(header.layer_shapes)
        expected = REDUCERS[header.reducer].fused_shape(header.layer_shapes)
    except FcmError as e:
        raise ConsistencyError(f'layer table is invalid: {e.message}') from e
    if tuple(header.fused_shape) != expected:
        raise ConsistencyError(f'fused shape {tuple(header.fused_shape)} does not follow from the layer '
                               f'table, {header.reducer.name} gives {expected}')
    if (header.grid_rows, header.grid_cols) != grid_for_channels(header.fused_shape[0]):
        raise ConsistencyError(f'grid {header.grid_rows}x{header.grid_cols} does not pack '
                               f'{header.fused_shape[0]} channels')
    if header.bitdepth != 0 and not 8 <= header.bitdepth <= 16:
        raise ConsistencyError(f'bitdepth {header.bitdepth} outside 0 or [8, 16]')
    if not math.isfinite(header.frame_rate) or header.frame_rate <= 0:
        raise ConsistencyError(f'frame rate must be positive, got {header.frame_rate}')
    if len(header.quant_params) != header.coded_frame_count:
        raise ConsistencyError(f'{len(header.quant_params)} quantization entries for '
                               f'{header.coded_frame_count} coded frames')
    for i, (x_min, x_max) in enumerate(header.quant_params):
        if not (math.isfinite(x_min) and math.isfinite(x_max)) or x_min > x_max:
            raise ConsistencyError(f'frame {i} has invalid quantization bounds ({x_min}, {x_max})')
    if not 1 <= header.gop_hint <= 0xFFFF:
        raise ConsistencyError(f'gop hint {header.gop_hint} outside [1, 65535]')


def mux(header: FcmHeader, payload: bytes) -> bytes:
    if header.payload_length is not None and header.payload_length != len(payload):
        raise ConsistencyError(f'header announces {header.payload_length} payload bytes, '
                               f'{len(payload)} supplied')
    if header.version != FCMB_VERSION:
        raise ConsistencyError(f'cannot write FCMB version {header.version}')
    _check_consistency(header)
    if header.fused_shape[0] > 0xFFFFFFFF or any(c > 0xFFFF for c, _, _ in header.layer_shapes):
        raise ConsistencyError('shape does not fit the FCMB field widths')

    try:
        return _pack(header, payload)
    except struct.error as e:
        raise ConsistencyError(f'header field out of range: {e}') from e


def _pack(header: FcmHeader, payload: bytes) -> bytes:
    parts = [_PREAMBLE.pack(FCMB_MAGIC, header.version, int(header.reducer), int(header.inner_codec),
                            int(header.temporal_flag), header.original_frame_count, header.frame_rate,
                            header.gain_index, len(header.layer_shapes))]
    for c, h, w in header.layer_shapes:
        parts.append(_LAYER.pack(c, h, w))
    c, h, w = header.fused_shape
    parts.append(_FUSED.pack(c, h, w, header.grid_rows, header.grid_cols, header.bitdepth))
    for x_min, x_max in header.quant_params:
        parts.append(_QPARAMS.pack(x_min, x_max))
    parts.append(_INNER.pack(header.quality, header.gop_hint, int(header.low_delay), len(payload)))
    parts.append(payload)
    return b''.join(parts)


def demux_header(data: bytes) -> Tuple[FcmHeader, int]:
    """Parses the header alone; returns it with the offset where the payload starts."""
    if len(data) < len(FCMB_MAGIC):
        raise Truncated('stream ends inside the magic', offset=len(data))
    if data[:len(FCMB_MAGIC)] != FCMB_MAGIC:
        raise BadMagic(f'stream does not start with {FCMB_MAGIC!r}')
    reader = _StreamReader(data)
    (_, version, reducer, codec, temporal, original_count, frame_rate,
     gain_index, layer_count) = reader.unpack(_PREAMBLE, 'preamble')
    if version != FCMB_VERSION:
        raise UnsupportedVersion(f'FCMB version {version} is not supported (expected {FCMB_VERSION})')
    if reducer not in ReducerId._value2member_map_:
        raise ConsistencyError(f'unknown reducer id {reducer} at byte offset 6')
    if codec not in InnerCodecId._value2member_map_:
        raise ConsistencyError(f'unknown inner codec id {codec} at byte offset 7')
    if temporal > 1:
        raise ConsistencyError(f'temporal flag must be 0 or 1, got {temporal}')
    if original_count == 0:
        raise ConsistencyError('stream declares zero frames')
    if layer_count == 0:
        raise ConsistencyError('stream declares zero layers')

    layer_shapes: List[Shape] = [reader.unpack(_LAYER, 'shape table') for _ in range(layer_count)]
    fused_c, fused_h, fused_w, rows, cols, bitdepth = reader.unpack(_FUSED, 'fused shape')
    coded = (original_count + 1) // 2 if temporal else original_count
    if len(data) - reader.offset < coded * _QPARAMS.size:
        raise Truncated('stream ends inside the quantization table', offset=len(data))
    quant_params = [reader.unpack(_QPARAMS, 'quantization table') for _ in range(coded)]
    quality, gop_hint, low_delay, payload_length = reader.unpack(_INNER, 'inner codec config')
    if low_delay > 1:
        raise ConsistencyError(f'low delay flag must be 0 or 1, got {low_delay}')

    try:
        header = FcmHeader(version=version, reducer=ReducerId(reducer), inner_codec=InnerCodecId(codec),
                           temporal_flag=bool(temporal), original_frame_count=original_count,
                           frame_rate=frame_rate, gain_index=gain_index, layer_shapes=layer_shapes,
                           fused_shape=(fused_c, fused_h, fused_w), grid_rows=rows, grid_cols=cols,
                           bitdepth=bitdepth, quant_params=quant_params, quality=quality,
                           gop_hint=gop_hint, low_delay=bool(low_delay), payload_length=payload_length)
    except ValidationError as e:
        raise ConsistencyError(f'header fields are invalid: {e.errors()[0]["msg"]}') from e
    _check_consistency(header)
    return header, reader.offset


def demux(data: bytes) -> Tuple[FcmHeader, bytes]:
    header, offset = demux_header(data)
    available = len(data) - offset
    if available < header.payload_length:
        raise Truncated(f'payload announces {header.payload_length} bytes, {available} present',
                        offset=len(data))
    if available > header.payload_length:
        raise ConsistencyError(f'{available - header.payload_length} stray bytes after the payload')
    return header, bytes(data[offset:])
