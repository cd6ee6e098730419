import unittest

import numpy as np

from fcmcodec.backend.errors import GainLengthError, ReducerMismatchError, ShapeError
from fcmcodec.backend.model import FeatureLayer, FusedTensor, GainVector, ReducerId, TensorShapeDescriptor
from fcmcodec.backend.models.reduction import (average_pool, depth_to_space, fuse, fused_shape, restore,
                                               space_to_depth)
from tests.fixtures import PYRAMID, random_pyramid


class TestReduction(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(7)
        self.layers = [FeatureLayer(data=self.rng.standard_normal(shape).astype(np.float32)) for shape in PYRAMID]
        self.descriptor = TensorShapeDescriptor(layer_shapes=PYRAMID, frame_count=1)

    def test_space_to_depth_block_order(self):
        tensor = np.arange(16, dtype=np.float32).reshape(1, 4, 4)
        out = space_to_depth(tensor)
        self.assertEqual(out.shape, (4, 2, 2))
        np.testing.assert_array_equal(out[:, 0, 0], [0, 1, 4, 5])
        np.testing.assert_array_equal(depth_to_space(out), tensor)

    def test_average_pool(self):
        tensor = np.arange(16, dtype=np.float32).reshape(1, 4, 4)
        np.testing.assert_array_equal(average_pool(tensor)[0], [[2.5, 4.5], [10.5, 12.5]])

    def test_fused_shapes(self):
        # S2D: ((4*4 + 4)*4 + 4)*4 channels at a quarter of the smallest layer
        self.assertEqual(fused_shape(ReducerId.S2D, PYRAMID), (336, 2, 2))
        self.assertEqual(fused_shape(ReducerId.AVGPOOL, PYRAMID), (12, 2, 2))

    def test_s2d_round_trip_is_exact(self):
        fused = fuse(self.layers, ReducerId.S2D, GainVector.unit(336))
        restored = restore(fused, ReducerId.S2D, GainVector.unit(336), self.descriptor)
        for original, layer in zip(self.layers, restored):
            np.testing.assert_array_equal(original.data, layer.data)

    def test_s2d_round_trip_with_power_of_two_gain(self):
        gain = GainVector(index=3, multipliers=[2.0] * 168 + [0.5] * 168)
        fused = fuse(self.layers, ReducerId.S2D, gain)
        self.assertEqual(fused.gain_index, 3)
        restored = restore(fused, ReducerId.S2D, gain, self.descriptor)
        for original, layer in zip(self.layers, restored):
            np.testing.assert_array_equal(original.data, layer.data)

    def test_avgpool_preserves_constants(self):
        layers = [FeatureLayer(data=np.full(shape, 1.5, dtype=np.float32)) for shape in PYRAMID]
        fused = fuse(layers, ReducerId.AVGPOOL, GainVector.unit(12))
        restored = restore(fused, ReducerId.AVGPOOL, GainVector.unit(12), self.descriptor)
        for layer, shape in zip(restored, PYRAMID):
            self.assertEqual(layer.shape, shape)
            np.testing.assert_allclose(layer.data, 1.5, rtol=0, atol=1e-6)

    def test_s2d_round_trip_with_random_gain(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            shapes = random_pyramid(rng)
            layers = [FeatureLayer(data=(rng.standard_normal(shape) * 4).astype(np.float32)) for shape in shapes]
            channels = fused_shape(ReducerId.S2D, shapes)[0]
            gain = GainVector(index=1, multipliers=rng.uniform(0.05, 20.0, channels).tolist())
            descriptor = TensorShapeDescriptor(layer_shapes=shapes, frame_count=1)
            restored = restore(fuse(layers, ReducerId.S2D, gain), ReducerId.S2D, gain, descriptor)
            for original, layer in zip(layers, restored):
                ulps = np.abs(original.data - layer.data) / np.spacing(np.abs(original.data))
                self.assertLessEqual(float(ulps.max()), 1.0, msg=f'shapes {shapes}')

    def test_avgpool_keeps_channel_means(self):
        layers = [FeatureLayer(data=layer.data + np.float32(3.0)) for layer in self.layers]
        fused = fuse(layers, ReducerId.AVGPOOL, GainVector.unit(12))
        restored = restore(fused, ReducerId.AVGPOOL, GainVector.unit(12), self.descriptor)
        for original, layer in zip(layers, restored):
            expected = original.data.astype(np.float64).mean(axis=(1, 2))
            np.testing.assert_allclose(layer.data.astype(np.float64).mean(axis=(1, 2)), expected, rtol=1e-5, atol=0)

    def test_gain_length(self):
        with self.assertRaises(GainLengthError):
            fuse(self.layers, ReducerId.S2D, GainVector.unit(12))

    def test_wrong_reducer(self):
        fused = fuse(self.layers, ReducerId.AVGPOOL, GainVector.unit(12))
        with self.assertRaises(ReducerMismatchError):
            restore(fused, ReducerId.S2D, GainVector.unit(336), self.descriptor)
        untagged = FusedTensor(data=fused.data)
        with self.assertRaises(ReducerMismatchError):
            restore(untagged, ReducerId.S2D, GainVector.unit(336), self.descriptor)

    def test_shape_mismatch(self):
        fused = FusedTensor(data=np.zeros((7, 2, 2), dtype=np.float32))
        with self.assertRaises(ShapeError):
            restore(fused, ReducerId.S2D, GainVector.unit(7), self.descriptor)

    def test_odd_layer(self):
        with self.assertRaises(ShapeError):
            fused_shape(ReducerId.S2D, [(1, 3, 3)])


if __name__ == '__main__':
    unittest.main()
