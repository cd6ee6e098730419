import math
from typing import Tuple

import numpy as np

from ..errors import ShapeError
from ..model import FrameLayout, FusedTensor, PackedFrame, QuantizationParams, tensor_stats


def grid_for_channels(channels: int) -> Tuple[int, int]:
    """Square-like grid: cols = ceil(sqrt(C)), rows = ceil(C / cols)."""
    cols = math.isqrt(channels)
    if cols * cols < channels:
        cols += 1
    rows = -(-channels // cols)
    return rows, cols


def layout_for(shape: Tuple[int, int, int]) -> FrameLayout:
    rows, cols = grid_for_channels(shape[0])
    return FrameLayout(grid_rows=rows, grid_cols=cols, source_shape=shape)


def pack(fused: FusedTensor) -> PackedFrame:
    layout = layout_for(fused.shape)
    channels, h, w = fused.shape
    cells = layout.grid_rows * layout.grid_cols
    tiles = np.zeros((cells, h, w), dtype=np.float32)
    tiles[:channels] = fused.data
    # raster order: channel c sits at (c // cols, c % cols)
    frame = tiles.reshape(layout.grid_rows, layout.grid_cols, h, w).transpose(0, 2, 1, 3)
    frame = frame.reshape(layout.height, layout.width)
    return PackedFrame(layout=layout, samples=frame, gain_index=fused.gain_index)


def unpack(frame: PackedFrame) -> FusedTensor:
    layout = frame.layout
    channels, h, w = layout.source_shape
    if frame.samples.shape != (layout.height, layout.width):
        raise ShapeError(f'frame {frame.samples.shape} does not match layout {(layout.height, layout.width)}')
    tiles = frame.samples.astype(np.float32).reshape(layout.grid_rows, h, layout.grid_cols, w)
    tiles = tiles.transpose(0, 2, 1, 3).reshape(layout.grid_rows * layout.grid_cols, h, w)
    return FusedTensor(data=tiles[:channels], gain_index=frame.gain_index)


def quantization_params(fused: FusedTensor, bitdepth: int = 10) -> QuantizationParams:
    """Extrema of the packed frame's channel cells; padding is left out."""
    x_min, x_max = tensor_stats(fused)
    return QuantizationParams(bitdepth=bitdepth, x_min=x_min, x_max=x_max)


def quantize(frame: PackedFrame, params: QuantizationParams) -> PackedFrame:
    x = frame.samples.astype(np.float64)
    span = params.x_max - params.x_min
    if span == 0:
        codes = np.zeros(x.shape, dtype=np.uint16)
    else:
        normalized = np.clip((x - params.x_min) / span, 0.0, 1.0)
        codes = np.floor(normalized * params.max_num_bits).astype(np.uint16)
    return PackedFrame(layout=frame.layout, samples=codes, gain_index=frame.gain_index)


def dequantize(frame: PackedFrame, params: QuantizationParams) -> PackedFrame:
    codes = frame.samples.astype(np.float64)
    span = params.x_max - params.x_min
    values = codes / params.max_num_bits * span + params.x_min
    return PackedFrame(layout=frame.layout, samples=values.astype(np.float32), gain_index=frame.gain_index)
