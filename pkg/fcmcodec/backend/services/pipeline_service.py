import time
import logging
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np

from ..converters.bitstream_converter import demux, demux_header, mux
from ..errors import FcmError, StageError
from ..model import (DecodeConfig, EncodeConfig, FcmHeader, FeatureTensorSet, FusedTensor, InnerConfig,
                     PackedFrame, StageTimeReport)
from ..models.conversion import dequantize, pack, quantization_params, quantize, unpack
from ..models.inner_codec import inner_decode, inner_encode
from ..models.reduction import fuse, fused_shape, restore
from ..models.temporal import temporal_downsample, temporal_upsample
from ..repositories.gain_repo import GainTableRepository

# encoder and decoder stages reported by measure_stage_times
STAGES = ('feature_reduction', 'feature_conversion', 'inner_encoding',
          'inner_decoding', 'inverse_conversion', 'feature_restoration')

Timings = Optional[Dict[str, float]]


@contextmanager
def _stage(operation: str, group: Optional[str], timings: Timings):
    """Tags errors with the operation name and adds elapsed time to ``group``."""
    start = time.perf_counter()
    try:
        yield
    except FcmError as e:
        if e.stage is None:
            e.stage = operation
        raise
    except Exception as e:
        raise StageError(operation, e) from e
    finally:
        if timings is not None and group is not None:
            timings[group] = timings.get(group, 0.0) + time.perf_counter() - start


class PipelineService:
    """Feature coding pipeline.

    Encoder: temporal_downsample -> fuse -> pack -> quantize -> inner_encode -> mux.
    Decoder: demux -> inner_decode -> dequantize -> unpack -> restore -> temporal_upsample.
    Frames are independent in fuse/pack/quantize and their inverses, which run on
    ``threads`` workers.
    """

    def __init__(self,
                 gain_repo: Optional[GainTableRepository] = None,
                 threads: int = 1):
        self.gain_repo = gain_repo or GainTableRepository()
        self.threads = max(1, threads)

    def _map(self, func: Callable, *items: Iterable) -> list:
        if self.threads == 1:
            return list(map(func, *items))
        with ThreadPoolExecutor(max_workers=self.threads) as executor:
            return list(executor.map(func, *items))

    @staticmethod
    def inner_config(cfg: EncodeConfig) -> InnerConfig:
        gop = 1 if cfg.all_intra else cfg.inner.gop_hint
        if cfg.temporal:
            gop = max(1, gop // 2)
        bitdepth = 0 if cfg.bypass_quantization else cfg.bitdepth
        return cfg.inner.model_copy(update={'gop_hint': gop, 'bitdepth': bitdepth})

    def encode(self, fts: FeatureTensorSet, cfg: EncodeConfig, timings: Timings = None) -> bytes:
        with _stage('temporal_downsample', 'feature_reduction', timings):
            coded, info = temporal_downsample(fts, cfg.temporal)

        with _stage('fuse', 'feature_reduction', timings):
            channels = fused_shape(cfg.reducer, coded.layer_shapes)[0]
            gain = self.gain_repo.get_vector(cfg.gain_index, channels)
            fused: List[FusedTensor] = self._map(lambda layers: fuse(layers, cfg.reducer, gain), coded.frames)

        with _stage('pack', 'feature_conversion', timings):
            packed: List[PackedFrame] = self._map(pack, fused)

        inner = self.inner_config(cfg)
        with _stage('quantize', 'feature_conversion', timings):
            params = [quantization_params(tensor, cfg.bitdepth) for tensor in fused]
            if not cfg.bypass_quantization:
                packed = self._map(quantize, packed, params)

        with _stage('inner_encode', 'inner_encoding', timings):
            payload = inner_encode(packed, inner, cfg.external, fps=coded.frame_rate)

        layout = packed[0].layout
        with _stage('mux', None, timings):
            header = FcmHeader(reducer=cfg.reducer, inner_codec=inner.codec, temporal_flag=info.enabled,
                               original_frame_count=info.original_frame_count,
                               frame_rate=float(np.float32(fts.frame_rate)), gain_index=cfg.gain_index,
                               layer_shapes=fts.layer_shapes, fused_shape=layout.source_shape,
                               grid_rows=layout.grid_rows, grid_cols=layout.grid_cols,
                               bitdepth=inner.bitdepth, quant_params=[(p.x_min, p.x_max) for p in params],
                               quality=inner.quality, gop_hint=inner.gop_hint, low_delay=inner.low_delay,
                               payload_length=len(payload))
            stream = mux(header, payload)
        logging.info('Encoded %d frames (%d coded) into %d bytes', info.original_frame_count,
                     info.coded_frame_count, len(stream))
        return stream

    def decode(self, stream: bytes, cfg: Optional[DecodeConfig] = None, timings: Timings = None) -> FeatureTensorSet:
        cfg = cfg or DecodeConfig()
        with _stage('demux', None, timings):
            header, payload = demux(stream)

        with _stage('inner_decode', 'inner_decoding', timings):
            frames = inner_decode(payload, header.inner_config, header.layout, header.coded_frame_count,
                                  cfg.external, fps=header.frame_rate, gain_index=header.gain_index)

        with _stage('dequantize', 'inverse_conversion', timings):
            if header.bitdepth:
                params = [header.quantization_params(i) for i in range(header.coded_frame_count)]
                frames = self._map(dequantize, frames, params)

        with _stage('unpack', 'inverse_conversion', timings):
            fused = self._map(unpack, frames)

        with _stage('restore', 'feature_restoration', timings):
            gain = self.gain_repo.get_vector(header.gain_index, header.fused_shape[0])
            descriptor = header.shape_descriptor
            layers = self._map(lambda tensor: restore(tensor, header.reducer, gain, descriptor), fused)
            coded = FeatureTensorSet(frames=layers, frame_rate=header.frame_rate)

        with _stage('temporal_upsample', 'feature_restoration', timings):
            restored = temporal_upsample(coded, header.temporal_info)
        logging.info('Decoded %d frames of %d layers', restored.frame_count, len(restored.layer_shapes))
        return restored

    @staticmethod
    def inspect(stream: bytes) -> FcmHeader:
        with _stage('demux', None, None):
            header, _ = demux_header(stream)
        return header

    def _timed_round_trip(self, fts: FeatureTensorSet, enc_cfg: EncodeConfig,
                          dec_cfg: DecodeConfig) -> Tuple[Dict[str, float], float, float, int]:
        timings: Dict[str, float] = {}
        start = time.perf_counter()
        stream = self.encode(fts, enc_cfg, timings)
        encode_total = time.perf_counter() - start
        start = time.perf_counter()
        self.decode(stream, dec_cfg, timings)
        decode_total = time.perf_counter() - start
        return timings, encode_total, decode_total, len(stream)

    def measure_stage_times(self, fts: FeatureTensorSet, enc_cfg: EncodeConfig,
                            dec_cfg: Optional[DecodeConfig] = None,
                            warmup: int = 1, repeats: int = 1) -> StageTimeReport:
        """Wall-clock time per stage; the fastest of ``repeats`` runs after ``warmup`` runs."""
        dec_cfg = dec_cfg or DecodeConfig(external=enc_cfg.external)
        for _ in range(max(0, warmup)):
            self._timed_round_trip(fts, enc_cfg, dec_cfg)

        best = None
        for _ in range(max(1, repeats)):
            run = self._timed_round_trip(fts, enc_cfg, dec_cfg)
            if best is None or run[1] + run[2] < best[1] + best[2]:
                best = run
        timings, encode_total, decode_total, stream_bytes = best
        stages = {name: timings.get(name, 0.0) for name in STAGES}
        logging.info('Encode %.4fs, decode %.4fs for %d frames', encode_total, decode_total, fts.frame_count)
        return StageTimeReport(stages=stages, encode_total=encode_total, decode_total=decode_total,
                               stream_bytes=stream_bytes, frame_count=fts.frame_count)
