from typing import Sequence, Tuple

import numpy as np

from fcmcodec.backend.model import FeatureLayer, FeatureTensorSet

# three-level pyramid, largest first
PYRAMID = [(4, 16, 16), (4, 8, 8), (4, 4, 4)]


def random_set(rng: np.random.Generator,
               frames: int = 2,
               shapes: Sequence[Tuple[int, int, int]] = PYRAMID,
               frame_rate: float = 30.0,
               scale: float = 1.0) -> FeatureTensorSet:
    return FeatureTensorSet(
        frames=[[FeatureLayer(data=(rng.standard_normal(shape) * scale).astype(np.float32)) for shape in shapes]
                for _ in range(frames)],
        frame_rate=frame_rate)


def constant_set(value: float,
                 frames: int = 2,
                 shapes: Sequence[Tuple[int, int, int]] = PYRAMID,
                 frame_rate: float = 30.0) -> FeatureTensorSet:
    return FeatureTensorSet(
        frames=[[FeatureLayer(data=np.full(shape, value, dtype=np.float32)) for shape in shapes]
                for _ in range(frames)],
        frame_rate=frame_rate)


def max_abs_error(a: FeatureTensorSet, b: FeatureTensorSet) -> float:
    return max(float(np.max(np.abs(la.data.astype(np.float64) - lb.data.astype(np.float64))))
               for fa, fb in zip(a.frames, b.frames) for la, lb in zip(fa, fb))


def random_pyramid(rng: np.random.Generator,
                   max_layers: int = 4,
                   max_shape: Tuple[int, int, int] = (16, 64, 64)) -> list:
    """Random valid pyramid, largest first; the smallest layer keeps even dimensions."""
    layers = int(rng.integers(1, max_layers + 1))
    max_c, max_h, max_w = max_shape
    scale = 2 ** layers
    h = 2 * int(rng.integers(1, max_h // scale + 1))
    w = 2 * int(rng.integers(1, max_w // scale + 1))
    shapes = []
    for k in reversed(range(layers)):
        shapes.append((int(rng.integers(1, max_c + 1)), h << k, w << k))
    return shapes
