"""Multi-scale feature fusion and restoration.

Fusion runs a cascade over the layers (largest first): the running state is
concatenated with the next layer along channels and an encoding block halves it
spatially. Restoration walks the cascade backwards. Two deterministic reducers
implement the blocks; learned ones can be registered under a new ReducerId.
"""
from abc import ABC, abstractmethod
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..errors import GainLengthError, ReducerMismatchError, ShapeError
from ..model import (FeatureLayer, FusedTensor, GainVector, ReducerId, Shape,
                     TensorShapeDescriptor, check_pyramid)

SCALE = 2


def space_to_depth(tensor: np.ndarray, scale: int = SCALE) -> np.ndarray:
    """(C, H, W) -> (C*s*s, H/s, W/s); each s x s block becomes s*s channels."""
    ch, height, width = tensor.shape
    tensor = tensor.reshape(ch, height // scale, scale, width // scale, scale)
    tensor = tensor.transpose(0, 2, 4, 1, 3)
    return tensor.reshape(ch * scale * scale, height // scale, width // scale)


def depth_to_space(tensor: np.ndarray, scale: int = SCALE) -> np.ndarray:
    ch, height, width = tensor.shape
    new_ch = ch // (scale * scale)
    tensor = tensor.reshape(new_ch, scale, scale, height, width)
    tensor = tensor.transpose(0, 3, 1, 4, 2)
    return tensor.reshape(new_ch, height * scale, width * scale)


def average_pool(tensor: np.ndarray, scale: int = SCALE) -> np.ndarray:
    ch, height, width = tensor.shape
    blocks = tensor.astype(np.float64).reshape(ch, height // scale, scale, width // scale, scale)
    return blocks.mean(axis=(2, 4)).astype(np.float32)


def nearest_upsample(tensor: np.ndarray, scale: int = SCALE) -> np.ndarray:
    return np.repeat(np.repeat(tensor, scale, axis=1), scale, axis=2)


class Reducer(ABC):
    reducer_id: ReducerId

    @abstractmethod
    def block_channels(self, channels: int) -> int:
        """Channel count after one encoding block."""

    @abstractmethod
    def encode_block(self, tensor: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def restore_layers(self, fused: np.ndarray, shapes: Sequence[Shape]) -> List[np.ndarray]:
        ...

    def fused_shape(self, shapes: Sequence[Shape]) -> Shape:
        check_pyramid(shapes)
        for c, h, w in shapes:
            if h % SCALE or w % SCALE:
                raise ShapeError(f'layer {(c, h, w)} has odd spatial dimensions')
        channels = 0
        for c, _, _ in shapes:
            channels = self.block_channels(channels + c)
        _, h, w = shapes[-1]
        return channels, h // SCALE, w // SCALE

    def fuse(self, layers: Sequence[np.ndarray]) -> np.ndarray:
        state: Optional[np.ndarray] = None
        for layer in layers:
            merged = layer if state is None else np.concatenate([state, layer], axis=0)
            state = self.encode_block(merged)
        return state

    def state_channels(self, shapes: Sequence[Shape]) -> List[int]:
        """Channels of the running state after each block."""
        channels, states = 0, []
        for c, _, _ in shapes:
            channels = self.block_channels(channels + c)
            states.append(channels)
        return states


class SpaceToDepthReducer(Reducer):
    reducer_id = ReducerId.S2D

    def block_channels(self, channels: int) -> int:
        return channels * SCALE * SCALE

    def encode_block(self, tensor: np.ndarray) -> np.ndarray:
        return space_to_depth(tensor)

    def restore_layers(self, fused: np.ndarray, shapes: Sequence[Shape]) -> List[np.ndarray]:
        states = self.state_channels(shapes)
        layers = [None] * len(shapes)
        state = fused
        for k in range(len(shapes) - 1, -1, -1):
            merged = depth_to_space(state)
            carried = states[k - 1] if k > 0 else 0
            layers[k] = merged[carried:]
            state = merged[:carried]
        return layers


class AveragePoolReducer(Reducer):
    reducer_id = ReducerId.AVGPOOL
    mixing_weight = 0.5

    def block_channels(self, channels: int) -> int:
        return channels

    def encode_block(self, tensor: np.ndarray) -> np.ndarray:
        return average_pool(tensor)

    def _mix(self, fine: np.ndarray, coarse: np.ndarray) -> np.ndarray:
        # zero-mean, channel-averaged detail of the coarser branch; keeps channel means
        detail = coarse.astype(np.float64).mean(axis=0)
        detail = nearest_upsample((detail - detail.mean())[None])[0]
        return (fine.astype(np.float64) + self.mixing_weight * detail[None]).astype(np.float32)

    def restore_layers(self, fused: np.ndarray, shapes: Sequence[Shape]) -> List[np.ndarray]:
        states = self.state_channels(shapes)
        layers = [None] * len(shapes)
        state = fused
        for k in range(len(shapes) - 1, -1, -1):
            merged = nearest_upsample(state)
            carried = states[k - 1] if k > 0 else 0
            branch = merged[carried:]
            if k + 1 < len(shapes):
                branch = self._mix(branch, layers[k + 1])
            layers[k] = branch
            state = merged[:carried]
        return layers


REDUCERS: Dict[ReducerId, Reducer] = {
    ReducerId.S2D: SpaceToDepthReducer(),
    ReducerId.AVGPOOL: AveragePoolReducer(),
}


def get_reducer(reducer: ReducerId) -> Reducer:
    try:
        return REDUCERS[ReducerId(reducer)]
    except (KeyError, ValueError):
        raise ReducerMismatchError(f'no reducer registered for id {reducer!r}')


def fused_shape(reducer: ReducerId, shapes: Sequence[Shape]) -> Shape:
    return get_reducer(reducer).fused_shape(shapes)


def _check_gain(gain: GainVector, channels: int):
    if len(gain.multipliers) != channels:
        raise GainLengthError(f'gain vector {gain.index} has {len(gain.multipliers)} multipliers, '
                              f'fused tensor has {channels} channels')


def fuse(frame_layers: Sequence[FeatureLayer], reducer: ReducerId, gain: GainVector) -> FusedTensor:
    impl = get_reducer(reducer)
    shapes = [layer.shape for layer in frame_layers]
    expected = impl.fused_shape(shapes)
    _check_gain(gain, expected[0])
    state = impl.fuse([layer.data for layer in frame_layers])
    state = state * gain.as_array()[:, None, None]
    return FusedTensor(data=state, gain_index=gain.index, reducer=impl.reducer_id)


def restore(fused: FusedTensor, reducer: ReducerId, gain: GainVector,
            shapes: TensorShapeDescriptor) -> List[FeatureLayer]:
    impl = get_reducer(reducer)
    if fused.reducer is not None and fused.reducer != impl.reducer_id:
        raise ReducerMismatchError(f'tensor was fused by {fused.reducer.name}, restoring with {impl.reducer_id.name}')
    expected = impl.fused_shape(shapes.layer_shapes)
    if fused.shape != expected:
        for other in REDUCERS.values():
            if other is not impl and other.fused_shape(shapes.layer_shapes) == fused.shape:
                raise ReducerMismatchError(f'fused shape {fused.shape} was produced by {other.reducer_id.name}, '
                                           f'not {impl.reducer_id.name}')
        raise ShapeError(f'fused shape {fused.shape} does not match {expected} for {impl.reducer_id.name}')
    _check_gain(gain, fused.channels)

    state = fused.data / gain.as_array()[:, None, None]
    layers = impl.restore_layers(state, shapes.layer_shapes)
    return [FeatureLayer(data=layer) for layer in layers]
