"""Inner coding of packed frames.

RAW stores samples, LOSSLESS deflates them, EXTERNAL pipes 4:0:0 planar video
through an encoder/decoder pair configured as command templates.
"""
import zlib
import shlex
import logging
import subprocess
import tempfile
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..converters.yuv_converter import read_yuv400, write_yuv400
from ..errors import (CorruptPayload, DimensionMismatch, ExternalToolError, InvalidConfig,
                      SampleRangeError)
from ..model import ExternalCommands, FrameLayout, InnerCodecId, InnerConfig, PackedFrame


def sample_dtype(bitdepth: int) -> np.dtype:
    return np.dtype('<f4') if bitdepth == 0 else np.dtype('<u2')


class InnerCodec(ABC):
    codec_id: InnerCodecId
    quality_range: Tuple[int, int] = (0, 63)

    def check_config(self, cfg: InnerConfig):
        low, high = self.quality_range
        if not low <= cfg.quality <= high:
            raise InvalidConfig(f'{self.codec_id.name} quality must lie in [{low}, {high}], got {cfg.quality}')

    @abstractmethod
    def encode(self, frames: Sequence[np.ndarray], cfg: InnerConfig, fps: float) -> bytes:
        ...

    @abstractmethod
    def decode(self, payload: bytes, cfg: InnerConfig, height: int, width: int,
               count: int, fps: float) -> List[np.ndarray]:
        ...


class RawCodec(InnerCodec):
    codec_id = InnerCodecId.RAW

    def encode(self, frames: Sequence[np.ndarray], cfg: InnerConfig, fps: float) -> bytes:
        return np.stack(frames).astype(sample_dtype(cfg.bitdepth)).tobytes()

    def decode(self, payload: bytes, cfg: InnerConfig, height: int, width: int,
               count: int, fps: float) -> List[np.ndarray]:
        dtype = sample_dtype(cfg.bitdepth)
        expected = count * height * width * dtype.itemsize
        if len(payload) != expected:
            raise CorruptPayload(f'payload holds {len(payload)} bytes, {count} frames of '
                                 f'{width}x{height} need {expected}')
        samples = np.frombuffer(payload, dtype=dtype).reshape(count, height, width)
        if cfg.bitdepth and samples.size and int(samples.max()) > (1 << cfg.bitdepth) - 1:
            raise CorruptPayload(f'payload holds samples above the {cfg.bitdepth}-bit range')
        native = np.float32 if cfg.bitdepth == 0 else np.uint16
        return [plane.astype(native) for plane in samples]


class LosslessCodec(RawCodec):
    codec_id = InnerCodecId.LOSSLESS
    level = 9

    def encode(self, frames: Sequence[np.ndarray], cfg: InnerConfig, fps: float) -> bytes:
        return zlib.compress(super().encode(frames, cfg, fps), self.level)

    def decode(self, payload: bytes, cfg: InnerConfig, height: int, width: int,
               count: int, fps: float) -> List[np.ndarray]:
        decompressor = zlib.decompressobj()
        try:
            raw = decompressor.decompress(payload)
        except zlib.error as e:
            raise CorruptPayload(f'deflate stream is corrupt: {e}') from e
        if not decompressor.eof or decompressor.unused_data:
            raise CorruptPayload('deflate stream is truncated or followed by stray bytes')
        return super().decode(raw, cfg, height, width, count, fps)


class ExternalCodec(InnerCodec):
    """Runs out-of-process video tools.

    Templates may use {input}, {output}, {qp}, {width}, {height}, {fps},
    {frames}, {gop}, {bitdepth}, {low_delay} and {lossless}.
    """
    codec_id = InnerCodecId.EXTERNAL

    def __init__(self, commands: ExternalCommands):
        self.commands = commands

    def check_config(self, cfg: InnerConfig):
        super().check_config(cfg)
        if cfg.bitdepth == 0:
            raise InvalidConfig('external codecs take quantized samples only')

    @staticmethod
    def _run(template: Optional[str], name: str, **fields) -> None:
        if not template:
            raise ExternalToolError(f'no external {name} command is configured')
        fields['input'] = shlex.quote(str(fields['input']))
        fields['output'] = shlex.quote(str(fields['output']))
        try:
            cmd = template.format(**fields)
        except (KeyError, IndexError, ValueError) as e:
            raise ExternalToolError(f'bad external {name} template {template!r}: {e}') from e
        logging.debug('Running external %s: %s', name, cmd)
        try:
            result = subprocess.run(shlex.split(cmd), capture_output=True)
        except FileNotFoundError as e:
            raise ExternalToolError(f'external {name} binary not found: {e.filename}') from e
        except OSError as e:
            raise ExternalToolError(f'cannot start external {name}: {e}') from e
        if result.returncode != 0:
            stderr = result.stderr.decode('utf-8', errors='replace').strip()[-400:]
            raise ExternalToolError(f'external {name} exited with status {result.returncode}: {stderr}')

    @staticmethod
    def _fields(cfg: InnerConfig, height: int, width: int, count: int, fps: float) -> Dict[str, object]:
        return dict(qp=cfg.quality, width=width, height=height, fps=f'{fps:g}', frames=count,
                    gop=cfg.gop_hint, bitdepth=cfg.bitdepth, low_delay=int(cfg.low_delay),
                    lossless=int(cfg.lossless))

    def encode(self, frames: Sequence[np.ndarray], cfg: InnerConfig, fps: float) -> bytes:
        height, width = frames[0].shape
        with tempfile.TemporaryDirectory(prefix='fcm_') as tmp:
            source, stream = Path(tmp, 'frames.yuv'), Path(tmp, 'frames.bin')
            write_yuv400(source, frames)
            self._run(self.commands.encode, 'encoder', input=source, output=stream,
                      **self._fields(cfg, height, width, len(frames), fps))
            if not stream.is_file():
                raise ExternalToolError(f'external encoder wrote no bitstream to {stream}')
            return stream.read_bytes()

    def decode(self, payload: bytes, cfg: InnerConfig, height: int, width: int,
               count: int, fps: float) -> List[np.ndarray]:
        with tempfile.TemporaryDirectory(prefix='fcm_') as tmp:
            stream, target = Path(tmp, 'frames.bin'), Path(tmp, 'decoded.yuv')
            stream.write_bytes(payload)
            self._run(self.commands.decode, 'decoder', input=stream, output=target,
                      **self._fields(cfg, height, width, count, fps))
            if not target.is_file():
                raise ExternalToolError(f'external decoder wrote no video to {target}')
            try:
                frames = read_yuv400(target, width, height, count)
            except DimensionMismatch as e:
                raise ExternalToolError(f'external decoder output is short: {e}') from e
        max_code = (1 << cfg.bitdepth) - 1
        return [np.minimum(frame, max_code).astype(np.uint16) for frame in frames]


def get_codec(codec_id: InnerCodecId, commands: Optional[ExternalCommands] = None) -> InnerCodec:
    codec_id = InnerCodecId(codec_id)
    if codec_id == InnerCodecId.RAW:
        return RawCodec()
    if codec_id == InnerCodecId.LOSSLESS:
        return LosslessCodec()
    return ExternalCodec(commands or ExternalCommands())


def _check_frames(frames: Sequence[PackedFrame], cfg: InnerConfig):
    if not frames:
        raise DimensionMismatch('no frames to encode')
    dims = frames[0].samples.shape
    for i, frame in enumerate(frames):
        if frame.samples.shape != dims:
            raise DimensionMismatch(f'frame {i} is {frame.samples.shape}, frame 0 is {dims}')
        if cfg.bitdepth == 0:
            if frame.is_quantized:
                raise InvalidConfig('bitdepth 0 carries float samples, got quantized frame')
            continue
        if not frame.is_quantized:
            raise InvalidConfig(f'frame {i} is not quantized')
        if frame.samples.size and int(frame.samples.max()) > (1 << cfg.bitdepth) - 1:
            raise SampleRangeError(f'frame {i} holds samples above {(1 << cfg.bitdepth) - 1}')


def inner_encode(frames: Sequence[PackedFrame], cfg: InnerConfig,
                 commands: Optional[ExternalCommands] = None, fps: float = 30.0) -> bytes:
    codec = get_codec(cfg.codec, commands)
    codec.check_config(cfg)
    _check_frames(frames, cfg)
    payload = codec.encode([frame.samples for frame in frames], cfg, fps)
    logging.debug('%s coded %d frames into %d bytes', codec.codec_id.name, len(frames), len(payload))
    return payload


def inner_decode(payload: bytes, cfg: InnerConfig, layout: FrameLayout, count: int,
                 commands: Optional[ExternalCommands] = None, fps: float = 30.0,
                 gain_index: int = 0) -> List[PackedFrame]:
    codec = get_codec(cfg.codec, commands)
    codec.check_config(cfg)
    planes = codec.decode(payload, cfg, layout.height, layout.width, count, fps)
    if len(planes) != count:
        raise CorruptPayload(f'{len(planes)} frames decoded, {count} expected')
    return [PackedFrame(layout=layout, samples=plane, gain_index=gain_index) for plane in planes]
