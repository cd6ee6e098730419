import os
from typing import List, Sequence, Union

import numpy as np

from ..errors import DimensionMismatch

# 4:0:0 planar, one luma plane per frame, samples in 16-bit little-endian containers
SAMPLE_DTYPE = np.dtype('<u2')


def write_yuv400(path: Union[str, os.PathLike], frames: Sequence[np.ndarray]) -> int:
    """Writes frames as raw planar 4:0:0 video; returns the number of bytes written."""
    if not frames:
        raise DimensionMismatch('no frames to write')
    dims = frames[0].shape
    with open(path, 'wb') as f:
        for i, frame in enumerate(frames):
            if frame.shape != dims:
                raise DimensionMismatch(f'frame {i} is {frame.shape}, expected {dims}')
            f.write(np.ascontiguousarray(frame, dtype=SAMPLE_DTYPE).tobytes())
    return len(frames) * dims[0] * dims[1] * SAMPLE_DTYPE.itemsize


def read_yuv400(path: Union[str, os.PathLike], width: int, height: int, count: int) -> List[np.ndarray]:
    data = np.fromfile(path, dtype=SAMPLE_DTYPE)
    plane = width * height
    if data.size < plane * count:
        raise DimensionMismatch(f'{path} holds {data.size // plane} frames of {width}x{height}, '
                                f'expected {count}')
    return [data[i * plane:(i + 1) * plane].reshape(height, width).astype(np.uint16) for i in range(count)]
