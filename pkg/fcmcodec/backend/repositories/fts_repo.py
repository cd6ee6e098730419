import os
import struct
import logging
from typing import BinaryIO, List, Optional, Union

import numpy as np

from ..errors import FormatError, IoError
from ..model import FeatureLayer, FeatureTensorSet

FTS_MAGIC = b'FTS1'
FTS_VERSION = 1

# magic, version, frame count, layer count, frame rate
_HEADER = struct.Struct('<4sHIHf')
# channels, height, width
_LAYER = struct.Struct('<HII')


class FeatureTensorRepository:
    """Reads and writes feature tensor sets in the FTS1 file format.

    Layout (little-endian): header ``<4sHIHf``, one ``<HII`` entry per layer,
    then raw float32 planes ordered frame, layer, channel, row, column.
    """

    def __init__(self,
                 path: Union[str, os.PathLike],
                 file: Optional[BinaryIO] = None):
        self.path = path
        self.file = file

    def connect(self, mode: str = 'rb'):
        if self.file is None:
            try:
                self.file = open(self.path, mode)
            except OSError as e:
                raise IoError(f'cannot open {self.path}: {e.strerror or e}') from e

    def close(self):
        if self.file is not None:
            self.file.close()
            self.file = None

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()

    def load(self) -> FeatureTensorSet:
        self.connect('rb')
        try:
            data = self.file.read()
        except OSError as e:
            raise IoError(f'cannot read {self.path}: {e}') from e
        finally:
            self.close()
        return parse_fts(data)

    def save(self, fts: FeatureTensorSet):
        data = serialize_fts(fts)
        self.connect('wb')
        try:
            self.file.write(data)
        except OSError as e:
            raise IoError(f'cannot write {self.path}: {e}') from e
        finally:
            self.close()
        logging.info('Saved %d frames x %d layers to %s', fts.frame_count, len(fts.layer_shapes), self.path)


def parse_fts(data: bytes) -> FeatureTensorSet:
    if len(data) < len(FTS_MAGIC) or data[:len(FTS_MAGIC)] != FTS_MAGIC:
        raise FormatError('not an FTS1 file: bad magic', offset=0)
    if len(data) < _HEADER.size:
        raise FormatError('truncated FTS1 header', offset=len(data))
    _, version, frame_count, layer_count, frame_rate = _HEADER.unpack_from(data, 0)
    if version != FTS_VERSION:
        raise FormatError(f'unsupported FTS1 version {version}', offset=4)
    if frame_count == 0:
        raise FormatError('FTS1 file declares zero frames', offset=6)
    if layer_count == 0:
        raise FormatError('FTS1 file declares zero layers', offset=10)
    if not np.isfinite(frame_rate) or frame_rate <= 0:
        raise FormatError(f'FTS1 frame rate must be positive, got {frame_rate}', offset=12)

    offset = _HEADER.size
    shapes = []
    for _ in range(layer_count):
        if len(data) < offset + _LAYER.size:
            raise FormatError('truncated FTS1 layer table', offset=len(data))
        shapes.append(_LAYER.unpack_from(data, offset))
        offset += _LAYER.size

    frame_values = sum(c * h * w for c, h, w in shapes)
    expected = frame_count * frame_values * 4
    available = len(data) - offset
    if available < expected:
        raise FormatError(f'truncated FTS1 payload: {expected} bytes expected, {available} present',
                          offset=len(data))
    if available > expected:
        raise FormatError('trailing bytes after FTS1 payload', offset=offset + expected)

    values = np.frombuffer(data, dtype='<f4', count=frame_count * frame_values, offset=offset)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise FormatError('FTS1 payload holds NaN or Inf', offset=offset + int(bad[0]) * 4)
    values = values.astype(np.float32)

    frames: List[List[FeatureLayer]] = []
    pos = 0
    for _ in range(frame_count):
        layers = []
        for c, h, w in shapes:
            size = c * h * w
            layers.append(FeatureLayer(data=values[pos:pos + size].reshape(c, h, w)))
            pos += size
        frames.append(layers)
    return FeatureTensorSet(frames=frames, frame_rate=float(frame_rate))


def serialize_fts(fts: FeatureTensorSet) -> bytes:
    if not fts.frames:
        raise FormatError('zero frames cannot be stored')
    shapes = fts.layer_shapes
    parts = [_HEADER.pack(FTS_MAGIC, FTS_VERSION, fts.frame_count, len(shapes), fts.frame_rate)]
    for c, h, w in shapes:
        if c > 0xFFFF:
            raise FormatError(f'{c} channels do not fit the FTS1 layer table')
        parts.append(_LAYER.pack(c, h, w))
    for frame in fts.frames:
        for layer in frame:
            parts.append(layer.data.astype('<f4').tobytes())
    return b''.join(parts)


def load_fts(path: Union[str, os.PathLike]) -> FeatureTensorSet:
    with FeatureTensorRepository(path) as repo:
        return repo.load()


def save_fts(fts: FeatureTensorSet, path: Union[str, os.PathLike]) -> None:
    with FeatureTensorRepository(path) as repo:
        repo.save(fts)
