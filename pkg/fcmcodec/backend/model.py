import math
import logging
from enum import IntEnum
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import DegenerateFit, FormatError, NonPositiveTime, SampleRangeError, ShapeError

Shape = Tuple[int, int, int]


def _readonly_array(value, dtype) -> np.ndarray:
    if isinstance(value, np.ndarray) and value.dtype == dtype and not value.flags.writeable:
        return value
    arr = np.array(value, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


def check_pyramid(shapes: Sequence[Shape]) -> None:
    """Raises ShapeError unless every layer is exactly twice the size of the next one."""
    if not shapes:
        raise ShapeError('feature set must contain at least one layer')
    for k, (c, h, w) in enumerate(shapes):
        if min(c, h, w) < 1:
            raise ShapeError(f'layer {k} has an empty dimension: {(c, h, w)}')
    for k in range(len(shapes) - 1):
        _, h, w = shapes[k]
        _, nh, nw = shapes[k + 1]
        if h != 2 * nh or w != 2 * nw:
            raise ShapeError(f'layer {k + 1} must be half the size of layer {k}: '
                             f'{(h, w)} -> {(nh, nw)}')


class ReducerId(IntEnum):
    S2D = 0
    AVGPOOL = 1


class InnerCodecId(IntEnum):
    RAW = 0
    LOSSLESS = 1
    EXTERNAL = 2


class FeatureLayer(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    data: np.ndarray = Field(..., description='float32 values, shape (channels, height, width)')

    @field_validator('data', mode='before')
    @classmethod
    def _validate_data(cls, value):
        arr = _readonly_array(value, np.float32)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ShapeError(f'feature layer must be a non-empty (C, H, W) array, got shape {arr.shape}')
        if not np.isfinite(arr).all():
            raise FormatError('feature layer holds NaN or Inf values')
        return arr

    @classmethod
    def from_values(cls, channels: int, height: int, width: int,
                    values: Sequence[float]) -> 'FeatureLayer':
        flat = np.asarray(values, dtype=np.float32)
        if flat.size != channels * height * width:
            raise ShapeError(f'{flat.size} values do not fill a ({channels}, {height}, {width}) layer')
        return cls(data=flat.reshape(channels, height, width))

    @property
    def shape(self) -> Shape:
        return tuple(int(d) for d in self.data.shape)

    @property
    def channels(self) -> int:
        return self.shape[0]

    @property
    def height(self) -> int:
        return self.shape[1]

    @property
    def width(self) -> int:
        return self.shape[2]


class TensorShapeDescriptor(BaseModel):
    model_config = ConfigDict(frozen=True)

    layer_shapes: List[Shape] = Field(..., description='(channels, height, width) per layer, largest first')
    frame_count: int = Field(..., description='Frame count before temporal down-sampling')
    temporal_flag: bool = False

    @model_validator(mode='after')
    def _check_dims(self):
        for shape in self.layer_shapes:
            if min(shape) < 1:
                raise ShapeError(f'layer shape {shape} has an empty dimension')
        if self.frame_count < 1:
            raise ShapeError('descriptor must describe at least one frame')
        return self


class FeatureTensorSet(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    frames: List[List[FeatureLayer]] = Field(..., description='Frames, each an ordered list of layers')
    frame_rate: float = Field(..., description='Frames per second, used for bitrate math')

    @model_validator(mode='after')
    def _check_shape_rules(self):
        if not self.frames:
            raise FormatError('feature tensor set must contain at least one frame')
        if not math.isfinite(self.frame_rate) or self.frame_rate <= 0:
            raise FormatError(f'frame rate must be positive, got {self.frame_rate}')
        reference = [layer.shape for layer in self.frames[0]]
        if not reference:
            raise FormatError('feature tensor set must contain at least one layer')
        check_pyramid(reference)
        for i, frame in enumerate(self.frames[1:], start=1):
            shapes = [layer.shape for layer in frame]
            if shapes != reference:
                raise ShapeError(f'frame {i} layer shapes {shapes} differ from frame 0 {reference}')
        return self

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    @property
    def layer_shapes(self) -> List[Shape]:
        return [layer.shape for layer in self.frames[0]]


class TemporalInfo(BaseModel):
    model_config = ConfigDict(frozen=True)

    original_frame_count: int = Field(..., ge=1)
    enabled: bool = False

    @property
    def coded_frame_count(self) -> int:
        if self.enabled:
            return (self.original_frame_count + 1) // 2
        return self.original_frame_count


def tensor_stats(layer: Union[FeatureLayer, 'FusedTensor', np.ndarray]) -> Tuple[float, float]:
    data = layer if isinstance(layer, np.ndarray) else layer.data
    if data.size == 0:
        raise ShapeError('cannot take statistics of an empty layer')
    return float(np.min(data)), float(np.max(data))


class FusedTensor(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    data: np.ndarray = Field(..., description='float32 values, shape (channels, height, width)')
    gain_index: int = Field(0, description='Index of the gain vector applied by fusion')
    reducer: Optional[ReducerId] = Field(None, description='Reducer that produced the tensor, if known')

    @field_validator('data', mode='before')
    @classmethod
    def _validate_data(cls, value):
        arr = _readonly_array(value, np.float32)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ShapeError(f'fused tensor must be a non-empty (C, H, W) array, got shape {arr.shape}')
        if not np.isfinite(arr).all():
            raise FormatError('fused tensor holds NaN or Inf values')
        return arr

    @property
    def shape(self) -> Shape:
        return tuple(int(d) for d in self.data.shape)

    @property
    def channels(self) -> int:
        return self.shape[0]

    @property
    def height(self) -> int:
        return self.shape[1]

    @property
    def width(self) -> int:
        return self.shape[2]


class GainVector(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: int = Field(0, ge=0, description='Quality level the vector belongs to')
    multipliers: List[float] = Field(..., description='Positive per-channel multipliers')

    @field_validator('multipliers')
    @classmethod
    def _check_positive(cls, value):
        if not value:
            raise FormatError('gain vector must not be empty')
        for m in value:
            if not math.isfinite(m) or m <= 0:
                raise FormatError(f'gain multipliers must be positive and finite, got {m}')
        return value

    def as_array(self) -> np.ndarray:
        return np.asarray(self.multipliers, dtype=np.float32)

    @classmethod
    def unit(cls, channels: int, index: int = 0) -> 'GainVector':
        return cls(index=index, multipliers=[1.0] * channels)


class GainTable(BaseModel):
    model_config = ConfigDict(frozen=True)

    vectors: Dict[int, List[float]] = Field(default_factory=dict)


class FrameLayout(BaseModel):
    model_config = ConfigDict(frozen=True)

    grid_rows: int = Field(..., ge=1)
    grid_cols: int = Field(..., ge=1)
    source_shape: Shape = Field(..., description='(channels, h, w) of the fused tensor')

    @model_validator(mode='after')
    def _check_grid(self):
        channels = self.source_shape[0]
        if min(self.source_shape) < 1:
            raise ShapeError(f'source shape {self.source_shape} has an empty dimension')
        if self.grid_rows * self.grid_cols < channels or (self.grid_rows - 1) * self.grid_cols >= channels:
            raise ShapeError(f'grid {self.grid_rows}x{self.grid_cols} does not fit {channels} channels')
        return self

    @property
    def height(self) -> int:
        return self.grid_rows * self.source_shape[1]

    @property
    def width(self) -> int:
        return self.grid_cols * self.source_shape[2]


class PackedFrame(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    layout: FrameLayout
    samples: np.ndarray = Field(..., description='float32 before quantization, uint16 codes after')
    gain_index: int = 0

    @field_validator('samples', mode='before')
    @classmethod
    def _validate_samples(cls, value):
        raw = np.asarray(value)
        if raw.dtype.kind in 'ui':
            if raw.size and (raw.min() < 0 or raw.max() > 0xFFFF):
                raise SampleRangeError('quantized samples must fit in 16 bits')
            dtype = np.uint16
        else:
            dtype = np.float32
        arr = _readonly_array(raw, dtype)
        if arr.ndim != 2:
            raise ShapeError(f'packed frame must be two-dimensional, got shape {arr.shape}')
        return arr

    @model_validator(mode='after')
    def _check_dims(self):
        if self.samples.shape != (self.layout.height, self.layout.width):
            raise ShapeError(f'samples {self.samples.shape} do not match layout '
                             f'{(self.layout.height, self.layout.width)}')
        return self

    @property
    def height(self) -> int:
        return self.layout.height

    @property
    def width(self) -> int:
        return self.layout.width

    @property
    def is_quantized(self) -> bool:
        return self.samples.dtype == np.uint16


class QuantizationParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    bitdepth: int = Field(10, description='Bits per quantized sample, 8..16')
    x_min: float
    x_max: float

    @field_validator('x_min', 'x_max')
    @classmethod
    def _as_float32(cls, value):
        if not math.isfinite(value):
            raise FormatError(f'quantization bounds must be finite, got {value}')
        return float(np.float32(value))

    @model_validator(mode='after')
    def _check_range(self):
        if not 8 <= self.bitdepth <= 16:
            raise FormatError(f'bitdepth must lie in [8, 16], got {self.bitdepth}')
        if self.x_min > self.x_max:
            raise FormatError(f'x_min {self.x_min} exceeds x_max {self.x_max}')
        return self

    @property
    def max_num_bits(self) -> int:
        return (1 << self.bitdepth) - 1


class InnerConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    codec: InnerCodecId = InnerCodecId.LOSSLESS
    quality: int = Field(32, description='Codec specific quality, QP for video encoders')
    gop_hint: int = Field(8, ge=1, le=0xFFFF, description='GOP size hint; 1 means all-intra')
    low_delay: bool = True
    bitdepth: int = Field(10, ge=0, le=16, description='Sample bitdepth; 0 carries float32 samples')
    lossless: bool = Field(False, description='Ask an external encoder for its lossless mode')


class ExternalCommands(BaseModel):
    model_config = ConfigDict(frozen=True)

    encode: Optional[str] = Field(None, description='Encoder command template')
    decode: Optional[str] = Field(None, description='Decoder command template')


class EncodeConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    reducer: ReducerId = ReducerId.S2D
    gain_index: int = Field(0, ge=0, le=0xFFFF)
    temporal: bool = False
    bitdepth: int = Field(10, ge=8, le=16)
    bypass_quantization: bool = Field(False, description='Debug: send float32 samples unquantized')
    all_intra: bool = False
    inner: InnerConfig = Field(default_factory=InnerConfig)
    external: ExternalCommands = Field(default_factory=ExternalCommands)


class DecodeConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    external: ExternalCommands = Field(default_factory=ExternalCommands)


class FcmHeader(BaseModel):
    model_config = ConfigDict(frozen=True)

    version: int = 1
    reducer: ReducerId
    inner_codec: InnerCodecId
    temporal_flag: bool
    original_frame_count: int = Field(..., ge=1)
    frame_rate: float
    gain_index: int = Field(0, ge=0, le=0xFFFF)
    layer_shapes: List[Shape]
    fused_shape: Shape
    grid_rows: int
    grid_cols: int
    bitdepth: int = Field(10, description='0 when quantization was bypassed')
    quant_params: List[Tuple[float, float]] = Field(..., description='(x_min, x_max) per coded frame')
    quality: int = 32
    gop_hint: int = 8
    low_delay: bool = True
    payload_length: Optional[int] = None

    @property
    def temporal_info(self) -> TemporalInfo:
        return TemporalInfo(original_frame_count=self.original_frame_count, enabled=self.temporal_flag)

    @property
    def coded_frame_count(self) -> int:
        return self.temporal_info.coded_frame_count

    @property
    def shape_descriptor(self) -> TensorShapeDescriptor:
        return TensorShapeDescriptor(layer_shapes=self.layer_shapes,
                                     frame_count=self.original_frame_count,
                                     temporal_flag=self.temporal_flag)

    @property
    def layout(self) -> FrameLayout:
        return FrameLayout(grid_rows=self.grid_rows, grid_cols=self.grid_cols, source_shape=self.fused_shape)

    @property
    def inner_config(self) -> InnerConfig:
        return InnerConfig(codec=self.inner_codec, quality=self.quality, gop_hint=self.gop_hint,
                           low_delay=self.low_delay, bitdepth=self.bitdepth)

    def quantization_params(self, frame: int) -> QuantizationParams:
        x_min, x_max = self.quant_params[frame]
        return QuantizationParams(bitdepth=self.bitdepth, x_min=x_min, x_max=x_max)


class RdPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    bitrate_kbps: float
    quality: float = Field(..., description='Feature PSNR in dB, higher is better')

    @model_validator(mode='after')
    def _check_values(self):
        if not math.isfinite(self.bitrate_kbps) or self.bitrate_kbps <= 0:
            raise DegenerateFit(f'bitrate must be positive, got {self.bitrate_kbps}')
        if not math.isfinite(self.quality):
            raise DegenerateFit(f'quality must be finite, got {self.quality}')
        return self


class RdCurve(BaseModel):
    model_config = ConfigDict(frozen=True)

    points: List[RdPoint]

    @model_validator(mode='after')
    def _check_points(self):
        if len(self.points) < 4:
            raise DegenerateFit(f'a rate-quality curve needs at least 4 points, got {len(self.points)}')
        self.points.sort(key=lambda p: p.bitrate_kbps)
        for prev, cur in zip(self.points, self.points[1:]):
            if cur.bitrate_kbps == prev.bitrate_kbps:
                logging.warning('Rate-quality curve repeats bitrate %.4f kbps', cur.bitrate_kbps)
            elif cur.quality < prev.quality:
                logging.warning('Quality drops from %.4f to %.4f while bitrate grows to %.4f kbps',
                                prev.quality, cur.quality, cur.bitrate_kbps)
        return self

    @property
    def rates(self) -> np.ndarray:
        return np.array([p.bitrate_kbps for p in self.points], dtype=np.float64)

    @property
    def qualities(self) -> np.ndarray:
        return np.array([p.quality for p in self.points], dtype=np.float64)

    @classmethod
    def from_pairs(cls, pairs: Sequence[Tuple[float, float]]) -> 'RdCurve':
        return cls(points=[RdPoint(bitrate_kbps=r, quality=q) for r, q in pairs])


class BdRateResult(BaseModel):
    percent: float = Field(..., description='Negative means the test curve saves rate')
    fit: str = Field(..., description="'polynomial', 'pchip' or 'identical'")


class QualityScore(BaseModel):
    psnr_db: float = Field(..., description='Feature PSNR, a proxy for task accuracy')
    mse: float
    exact_match: bool = False


class ComplexityReport(BaseModel):
    fcm_encoder_time: float
    fcm_decoder_time: float
    nn_part1_time: float
    nn_part2_time: float
    encoder_ratio: float = Field(..., description='FCM encoder time / NN part 2 time')
    decoder_ratio: float = Field(..., description='FCM decoder time / NN part 1 time')

    @model_validator(mode='after')
    def _check_times(self):
        for name in ('fcm_encoder_time', 'fcm_decoder_time', 'nn_part1_time', 'nn_part2_time'):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise NonPositiveTime(f'{name} must be positive, got {value}')
        return self

    @property
    def encoder_satisfied(self) -> bool:
        return self.encoder_ratio < 1

    @property
    def decoder_satisfied(self) -> bool:
        return self.decoder_ratio < 1


class StageTimeReport(BaseModel):
    stages: Dict[str, float] = Field(default_factory=dict, description='Wall-clock seconds per stage')
    encode_total: float = 0.0
    decode_total: float = 0.0
    stream_bytes: int = 0
    frame_count: int = 0
